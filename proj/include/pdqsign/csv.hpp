#pragma once

#include <string>

#include "pdqsign/types.hpp"

namespace pdqsign {

// Shortest round-trip decimal rendering of a double (printf %.17g trimmed by
// round-trip check); used everywhere a double is written to CSV so that
// reloading reproduces the value bit for bit.
std::string format_double(double v);

// Sample files are plain comma-separated numeric rows, no header.  Ragged
// rows, non-numeric fields, or fewer than 2 rows/columns raise ConfigError.
SampleMatrix read_sample_csv(const std::string& path);
void write_sample_csv(const std::string& path, const SampleMatrix& sample);

// Parse helpers shared by the config reader.
SampleMatrix parse_sample_csv(const std::string& text, const std::string& origin);

}  // namespace pdqsign
