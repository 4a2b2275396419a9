#include "noisebench/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "noisebench/errors.hpp"

namespace noisebench {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-numeric cell '" << cell << "' at row " << row << ", column " << column;
    raise(ErrorCode::Parse, msg.str());
  }
  return v;
}

std::int64_t parse_timestamp(const std::string& cell, std::size_t row) {
  std::int64_t v = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    std::ostringstream msg;
    msg << "bad timestamp '" << cell << "' at row " << row;
    raise(ErrorCode::Parse, msg.str());
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ChannelFrame load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) raise(ErrorCode::EmptyData, "'" + path + "' is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  auto columns = split_line(header);
  if (columns.empty() || columns[0] != "timestamp")
    raise(ErrorCode::Format, "header must start with 'timestamp' in '" + path + "'");
  for (std::size_t i = 1; i < columns.size(); ++i) {
    if (!is_known_channel(columns[i]))
      raise(ErrorCode::Format, "unknown column '" + columns[i] + "' in '" + path + "'");
    for (std::size_t j = 1; j < i; ++j)
      if (columns[j] == columns[i])
        raise(ErrorCode::Format, "duplicate column '" + columns[i] + "' in '" + path + "'");
  }
  if (columns.size() < 2)
    raise(ErrorCode::Format, "no data columns in '" + path + "'");

  std::vector<std::int64_t> timestamps;
  std::vector<std::vector<double>> data(columns.size() - 1);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    auto cells = split_line(line);
    if (cells.size() != columns.size()) {
      std::ostringstream msg;
      msg << "row " << row << " has " << cells.size() << " cells, expected " << columns.size();
      raise(ErrorCode::Format, msg.str());
    }
    std::int64_t ts = parse_timestamp(cells[0], row);
    if (!timestamps.empty() && ts != timestamps.back() + 1) {
      std::ostringstream msg;
      msg << "timestamp at row " << row << " is not previous + 1 (1 Hz contract)";
      raise(ErrorCode::Format, msg.str());
    }
    timestamps.push_back(ts);
    for (std::size_t i = 1; i < cells.size(); ++i)
      data[i - 1].push_back(parse_cell(cells[i], row, columns[i]));
  }
  if (timestamps.empty()) raise(ErrorCode::EmptyData, "'" + path + "' has a header but no rows");

  ChannelFrame frame;
  for (std::size_t i = 1; i < columns.size(); ++i) {
    TimeSeries s;
    s.channel = columns[i];
    s.start_epoch = timestamps.front();
    s.values = std::move(data[i - 1]);
    frame.add_series(std::move(s));
  }
  return frame;
}

void write_csv(const ChannelFrame& frame, const std::string& path) {
  frame.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::Io, "cannot write '" + path + "'");

  out << "timestamp";
  for (const auto& s : frame.series()) out << ',' << s.channel;
  out << '\n';

  std::size_t rows = frame.n_rows();
  std::int64_t epoch = frame.start_epoch();
  for (std::size_t r = 0; r < rows; ++r) {
    out << (epoch + static_cast<std::int64_t>(r));
    for (const auto& s : frame.series()) out << ',' << format_double(s.values[r]);
    out << '\n';
  }
  if (!out) raise(ErrorCode::Io, "write failed for '" + path + "'");
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Manifest, "cannot open manifest '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Manifest, std::string("manifest parse failure: ") + e.what());
  }
  if (!doc.is_object() || doc.empty())
    raise(ErrorCode::Manifest, "manifest must be a non-empty object of path -> {source_tag,label}");

  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& meta = it.value();
    if (!meta.is_object() || !meta.contains("source_tag") || !meta.contains("label"))
      raise(ErrorCode::Manifest, "manifest entry '" + it.key() + "' needs source_tag and label");
    ManifestEntry e;
    std::filesystem::path p(it.key());
    e.path = p.is_absolute() ? p.string() : (base / p).string();
    e.source_tag = meta.at("source_tag").get<std::string>();
    try {
      e.label = label_from_string(meta.at("label").get<std::string>());
    } catch (const Error&) {
      raise(ErrorCode::Manifest, "manifest entry '" + it.key() + "' has a bad label");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace noisebench
