#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "markent/errors.hpp"
#include "markent/point_process.hpp"

namespace markent::io {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// All output files are written to a temporary sibling and renamed into place,
// so readers never observe a half-written file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.good()) throw internal_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw input_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// Locations then mark coordinates, one pair per row.
inline std::string sample_to_csv(const MppSample& s) {
  std::string out;
  for (int k = 0; k < s.dim; ++k) out += "y" + std::to_string(k + 1) + ",";
  for (int k = 0; k < s.mark_size; ++k)
    out += "m" + std::to_string(k + 1) + (k + 1 == s.mark_size ? "" : ",");
  out += "\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int k = 0; k < s.dim; ++k) out += format_double(s.loc[i * s.dim + k]) + ",";
    for (int k = 0; k < s.mark_size; ++k)
      out += format_double(s.mark[i * s.mark_size + k]) + (k + 1 == s.mark_size ? "" : ",");
    out += "\n";
  }
  return out;
}

inline json sample_sidecar(const MppSample& s) {
  json j;
  j["lambda"] = s.lambda;
  j["window"] = {{"origin", s.window.origin}, {"side", s.window.side}};
  j["manifold"] = s.manifold_tag;
  j["seed"] = s.seed;
  j["count"] = s.size();
  return j;
}

inline void write_sample(const MppSample& s, const std::filesystem::path& csv_path,
                         const std::filesystem::path& json_path) {
  atomic_write(csv_path, sample_to_csv(s));
  atomic_write(json_path, sample_sidecar(s).dump(2) + "\n");
}

inline MppSample read_sample(const std::filesystem::path& csv_path,
                             const std::filesystem::path& json_path) {
  const json meta = parse_json_file(json_path);
  MppSample s;
  try {
    s.lambda = meta.at("lambda").get<double>();
    s.window.origin = meta.at("window").at("origin").get<std::vector<double>>();
    s.window.side = meta.at("window").at("side").get<std::vector<double>>();
    s.manifold_tag = meta.at("manifold").get<std::string>();
    s.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error("sample sidecar " + json_path.string() + ": " + e.what());
  }
  s.dim = s.window.dim();
  const Manifold m = Manifold::from_tag(s.manifold_tag);
  s.mark_size = m.point_size();

  std::ifstream in(csv_path);
  if (!in) throw input_error("cannot open file: " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty sample CSV: " + csv_path.string());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw input_error(csv_path.string() + ": bad number at row " + std::to_string(row));
      }
    }
    if (static_cast<int>(vals.size()) != s.dim + s.mark_size)
      throw input_error(csv_path.string() + ": wrong column count at row " + std::to_string(row));
    for (int k = 0; k < s.dim; ++k) s.loc.push_back(vals[k]);
    for (int k = 0; k < s.mark_size; ++k) s.mark.push_back(vals[s.dim + k]);
  }
  return s;
}

}  // namespace markent::io
