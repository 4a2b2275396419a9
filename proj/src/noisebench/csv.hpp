// CSV trace format plus the JSON dataset manifest.
// Header: timestamp,V1,...; comma separated, LF endings, shortest
// round-trip float formatting so write/load is lossless.
#pragma once

#include <string>
#include <vector>

#include "noisebench/frame.hpp"

namespace noisebench {

ChannelFrame load_csv(const std::string& path);
void write_csv(const ChannelFrame& frame, const std::string& path);

// Shortest decimal form that parses back to the exact same double.
std::string format_double(double v);

struct ManifestEntry {
  std::string path;  // resolved relative to the manifest file
  std::string source_tag;
  Label label = Label::Real;
};

std::vector<ManifestEntry> load_manifest(const std::string& path);

}  // namespace noisebench
