#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "presup/extract.hpp"

namespace presup {

// One JSON object per line, fields in the fixed order
//   {"label":..,"tokens":[..],"pos":[..],"section":..}
std::string sample_to_line(const Sample& sample);
Sample sample_from_line(const std::string& line, const std::string& source, std::size_t lineno);

void write_samples(std::ostream& out, const std::vector<Sample>& samples);
void write_samples(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> read_samples(std::istream& in, const std::string& source = "<samples>");
std::vector<Sample> read_samples(const std::string& path);

}  // namespace presup
