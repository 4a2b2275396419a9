// noisebench command line: thin plumbing over the C API in noisebench.h.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "noisebench.h"

namespace {

struct Frame {
  nb_frame* p = nullptr;
  ~Frame() { nb_frame_free(p); }
  Frame() = default;
  Frame(const Frame&) = delete;
  Frame& operator=(const Frame&) = delete;
};

std::string grab(char* s) {
  std::string out = s ? s : "";
  nb_string_free(s);
  return out;
}

bool slurp(const std::string& path, std::string& text, int& rc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    rc = NB_E_IO;
    return false;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  text = buf.str();
  return true;
}

bool spit(const std::string& path, const std::string& text, int& rc) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    rc = NB_E_IO;
    return false;
  }
  return true;
}

bool ok(int status, int& rc) {
  if (status == NB_OK) return true;
  std::cerr << "error: " << nb_last_error() << "\n";
  rc = status;
  return false;
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ranks candidate physical-process simulations by how well their noise "
               "matches a reference trace"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string run_dir;
  std::string config_path;
  app.add_option("--seed", seed, "base seed for every stochastic stage")
      ->capture_default_str();
  app.add_option("--run-dir", run_dir, "directory for run artifacts");
  app.add_option("--config", config_path, "JSON config file");

  int rc = 0;
  auto config_text = [&](std::string& text) -> bool {
    if (config_path.empty()) return true;
    return slurp(config_path, text, rc);
  };

  // simulate --config <json> --out <csv>
  {
    auto* cmd = app.add_subcommand("simulate", "generate a steady-state grid trace");
    cmd->fallthrough();
    auto out = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--out", *out, "output CSV path")->required();
    cmd->add_flag("--json", *as_json, "print trace info as JSON");
    cmd->callback([&, out, as_json] {
      std::string cfg;
      if (!config_text(cfg)) return;
      Frame f;
      if (!ok(nb_simulate_grid(cfg.empty() ? nullptr : cfg.c_str(), &f.p), rc)) return;
      if (!ok(nb_frame_write_csv(f.p, out->c_str()), rc)) return;
      char* info = nullptr;
      if (!ok(nb_frame_info(f.p, &info), rc)) return;
      std::string text = grab(info);
      if (*as_json)
        std::cout << text << "\n";
      else
        std::cout << "wrote " << *out << "\n";
    });
  }

  // perturb --in <csv> --noise <json|preset-name> --seed <u64> --out <csv>
  {
    auto* cmd = app.add_subcommand("perturb", "add calibrated noise to a trace");
    cmd->fallthrough();
    auto in = std::make_shared<std::string>();
    auto noise = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--in", *in, "input CSV path")->required();
    cmd->add_option("--noise", *noise, "noise spec JSON file, inline JSON, or preset name")
        ->required();
    cmd->add_option("--out", *out, "output CSV path")->required();
    cmd->add_flag("--json", *as_json, "print the resolved spec as JSON");
    cmd->callback([&, in, noise, out, as_json] {
      std::string spec_arg = *noise;
      if (file_exists(spec_arg) && !slurp(spec_arg, spec_arg, rc)) return;
      char* spec_raw = nullptr;
      if (!ok(nb_noise_spec(spec_arg.c_str(), &spec_raw), rc)) return;
      std::string spec = grab(spec_raw);
      Frame f;
      if (!ok(nb_frame_load_csv(in->c_str(), &f.p), rc)) return;
      Frame noisy;
      if (!ok(nb_perturb(f.p, spec.c_str(), seed, &noisy.p), rc)) return;
      if (!ok(nb_frame_write_csv(noisy.p, out->c_str()), rc)) return;
      if (*as_json)
        std::cout << spec << "\n";
      else
        std::cout << "wrote " << *out << "\n";
    });
  }

  // estimate --in <csv> --q <f> --r <f> --out <csv>
  {
    auto* cmd = app.add_subcommand("estimate", "extract noise residuals with a Kalman filter");
    cmd->fallthrough();
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto q = std::make_shared<double>(1e-5);
    auto r = std::make_shared<double>(1e-2);
    auto p0 = std::make_shared<double>(1.0);
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--in", *in, "input CSV path")->required();
    cmd->add_option("--q", *q, "process variance")->capture_default_str();
    cmd->add_option("--r", *r, "measurement variance")->capture_default_str();
    cmd->add_option("--p0", *p0, "initial estimate variance")->capture_default_str();
    cmd->add_option("--out", *out, "output CSV path (residual channels)")->required();
    cmd->add_flag("--json", *as_json, "print residual frame info as JSON");
    cmd->callback([&, in, out, q, r, p0, as_json] {
      Frame f;
      if (!ok(nb_frame_load_csv(in->c_str(), &f.p), rc)) return;
      Frame resid;
      if (!ok(nb_estimate_noise(f.p, *q, *r, *p0, &resid.p), rc)) return;
      if (!ok(nb_frame_write_csv(resid.p, out->c_str()), rc)) return;
      char* info = nullptr;
      if (!ok(nb_frame_info(resid.p, &info), rc)) return;
      std::string text = grab(info);
      if (*as_json)
        std::cout << text << "\n";
      else
        std::cout << "wrote " << *out << "\n";
    });
  }

  // extract --in <csv> --noise <csv> --channel <name> --out <csv>
  {
    auto* cmd = app.add_subcommand("extract", "window a trace pair and compute features");
    cmd->fallthrough();
    auto in = std::make_shared<std::string>();
    auto noise = std::make_shared<std::string>();
    auto channel = std::make_shared<std::string>();
    auto tag = std::make_shared<std::string>("trace");
    auto label = std::make_shared<std::string>("simulated");
    auto out = std::make_shared<std::string>();
    auto dump_dir = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--in", *in, "raw trace CSV")->required();
    cmd->add_option("--noise", *noise, "residual trace CSV (from estimate)")->required();
    cmd->add_option("--channel", *channel, "channel name, or allvalues for the joint flow");
    cmd->add_option("--tag", *tag, "source tag stored in the feature rows")
        ->capture_default_str();
    cmd->add_option("--label", *label, "real or simulated")->capture_default_str();
    cmd->add_option("--out", *out, "feature CSV path")->required();
    cmd->add_option("--dump-windows", *dump_dir, "also dump kept windows to this directory");
    cmd->add_flag("--json", *as_json, "print extraction stats as JSON");
    cmd->callback([&, in, noise, channel, tag, label, out, dump_dir, as_json] {
      std::string cfg;
      if (!config_text(cfg)) return;
      nlohmann::ordered_json options = nlohmann::ordered_json::object();
      if (!cfg.empty()) {
        auto doc = nlohmann::ordered_json::parse(cfg, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
          std::cerr << "error: " << config_path << " is not a JSON object\n";
          rc = NB_E_PARSE;
          return;
        }
        if (doc.contains("prune")) options["prune"] = doc.at("prune");
        if (doc.contains("features")) options["features"] = doc.at("features");
      }
      if (!channel->empty()) options["channel"] = *channel;
      if (!dump_dir->empty()) options["dump_dir"] = *dump_dir;
      Frame raw;
      if (!ok(nb_frame_load_csv(in->c_str(), &raw.p), rc)) return;
      if (!ok(nb_frame_set_meta(raw.p, tag->c_str(), label->c_str()), rc)) return;
      Frame resid;
      if (!ok(nb_frame_load_csv(noise->c_str(), &resid.p), rc)) return;
      char* stats = nullptr;
      if (!ok(nb_extract_features(raw.p, resid.p, options.dump().c_str(), out->c_str(),
                                  &stats),
              rc))
        return;
      std::string text = grab(stats);
      if (*as_json)
        std::cout << text << "\n";
      else
        std::cout << "wrote " << *out << "\n";
    });
  }

  // train --features <csv> --out <model.json>
  {
    auto* cmd = app.add_subcommand("train", "fit the real-vs-simulated classifier");
    cmd->fallthrough();
    auto features = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--features", *features, "feature CSV (from extract)")->required();
    cmd->add_option("--out", *out, "model JSON path")->required();
    cmd->add_flag("--json", *as_json, "print training stats as JSON");
    cmd->callback([&, features, out, as_json] {
      std::string cfg;
      if (!config_text(cfg)) return;
      nlohmann::ordered_json options = nlohmann::ordered_json::object();
      if (!cfg.empty()) {
        auto doc = nlohmann::ordered_json::parse(cfg, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
          std::cerr << "error: " << config_path << " is not a JSON object\n";
          rc = NB_E_PARSE;
          return;
        }
        if (doc.contains("split")) options["split"] = doc.at("split");
        if (doc.contains("forest")) options["forest"] = doc.at("forest");
        if (doc.contains("top_k")) options["top_k"] = doc.at("top_k");
      }
      if (app.count("--seed") > 0) options["seed"] = seed;
      char* stats = nullptr;
      if (!ok(nb_train(features->c_str(), options.dump().c_str(), out->c_str(), &stats), rc))
        return;
      std::string text = grab(stats);
      if (*as_json) {
        std::cout << text << "\n";
      } else {
        auto doc = nlohmann::ordered_json::parse(text);
        std::cout << "wrote " << *out << "  (held-out recall "
                  << doc.at("held_out_recall").dump() << ")\n";
      }
    });
  }

  // rank --model <json> --features <csv> --out <json>
  {
    auto* cmd = app.add_subcommand("rank", "score feature rows against a stored model");
    cmd->fallthrough();
    auto model = std::make_shared<std::string>();
    auto features = std::make_shared<std::string>();
    auto channel = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--model", *model, "model JSON path")->required();
    cmd->add_option("--features", *features, "feature CSV path")->required();
    cmd->add_option("--channel", *channel, "channel name recorded in the report");
    cmd->add_option("--out", *out, "write the report JSON here");
    cmd->add_flag("--json", *as_json, "print the report as JSON instead of a table");
    cmd->callback([&, model, features, channel, out, as_json] {
      char* report_raw = nullptr;
      if (!ok(nb_rank(model->c_str(), features->c_str(),
                      channel->empty() ? nullptr : channel->c_str(), &report_raw),
              rc))
        return;
      std::string report = grab(report_raw);
      if (!out->empty() && !spit(*out, report + "\n", rc)) return;
      if (*as_json) {
        std::cout << report << "\n";
      } else {
        char* text_raw = nullptr;
        if (!ok(nb_report_text(report.c_str(), &text_raw), rc)) return;
        std::cout << grab(text_raw);
      }
    });
  }

  // report --baseline <json> --dynamic <json>
  {
    auto* cmd = app.add_subcommand("report", "compare two fidelity reports");
    cmd->fallthrough();
    auto baseline = std::make_shared<std::string>();
    auto dynamic = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_option("--baseline", *baseline, "baseline report JSON path")->required();
    cmd->add_option("--dynamic", *dynamic, "dynamic report JSON path")->required();
    cmd->add_option("--out", *out, "write the delta JSON here");
    cmd->add_flag("--json", *as_json, "print the delta as JSON instead of a table");
    cmd->callback([&, baseline, dynamic, out, as_json] {
      std::string base_text;
      std::string dyn_text;
      if (!slurp(*baseline, base_text, rc)) return;
      if (!slurp(*dynamic, dyn_text, rc)) return;
      char* delta_raw = nullptr;
      if (!ok(nb_report_delta(base_text.c_str(), dyn_text.c_str(), &delta_raw), rc)) return;
      std::string delta = grab(delta_raw);
      if (!out->empty() && !spit(*out, delta + "\n", rc)) return;
      if (*as_json) {
        std::cout << delta << "\n";
      } else {
        char* text_raw = nullptr;
        if (!ok(nb_report_text(delta.c_str(), &text_raw), rc)) return;
        std::cout << grab(text_raw);
      }
    });
  }

  // run --config <json> --run-dir <dir> --seed <u64>
  {
    auto* cmd = app.add_subcommand("run", "full pipeline: simulate through report");
    cmd->fallthrough();
    auto as_json = std::make_shared<bool>(false);
    cmd->add_flag("--json", *as_json, "print the run summary as JSON");
    cmd->callback([&, as_json] {
      if (config_path.empty()) {
        std::cerr << "error: run needs --config\n";
        rc = NB_E_CONFIG;
        return;
      }
      std::string cfg;
      if (!config_text(cfg)) return;
      char* summary_raw = nullptr;
      if (!ok(nb_run_pipeline(cfg.c_str(), run_dir.empty() ? nullptr : run_dir.c_str(), seed,
                              &summary_raw),
              rc))
        return;
      std::string summary = grab(summary_raw);
      if (*as_json) {
        std::cout << summary << "\n";
        return;
      }
      auto doc = nlohmann::ordered_json::parse(summary);
      for (auto it = doc.at("per_channel").begin(); it != doc.at("per_channel").end(); ++it) {
        std::cout << it.key() << ": top=" << it.value().at("top_source").get<std::string>()
                  << "  recall=" << it.value().at("held_out_recall").dump() << "\n";
      }
      if (!run_dir.empty()) std::cout << "artifacts in " << run_dir << "\n";
    });
  }

  CLI11_PARSE(app, argc, argv);
  return rc;
}
