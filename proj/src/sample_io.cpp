#include "presup/sample_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "presup/error.hpp"

namespace presup {

using ojson = nlohmann::ordered_json;

std::string sample_to_line(const Sample& s) {
  ojson j;
  j["label"] = s.label;
  j["tokens"] = s.tokens;
  j["pos"] = s.pos;
  j["section"] = s.section;
  return j.dump();
}

Sample sample_from_line(const std::string& line, const std::string& source, std::size_t lineno) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(source, lineno, "record is not an object");
  for (const char* key : {"label", "tokens", "pos", "section"}) {
    if (!j.contains(key)) throw ParseError(source, lineno, std::string("missing field '") + key + "'");
  }
  Sample s;
  try {
    s.label = j.at("label").get<std::string>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    s.pos = j.at("pos").get<std::vector<std::string>>();
    s.section = j.at("section").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, lineno, std::string("bad field type: ") + e.what());
  }
  if (s.tokens.size() != s.pos.size()) {
    throw ParseError(source, lineno, "tokens and pos differ in length");
  }
  return s;
}

void write_samples(std::ostream& out, const std::vector<Sample>& samples) {
  for (const auto& s : samples) out << sample_to_line(s) << '\n';
}

void write_samples(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_samples(out, samples);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Sample> read_samples(std::istream& in, const std::string& source) {
  std::vector<Sample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(sample_from_line(line, source, lineno));
  }
  return out;
}

std::vector<Sample> read_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open sample file: " + path);
  return read_samples(in, path);
}

}  // namespace presup
