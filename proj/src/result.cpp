#include "lqn/result.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lqn {

void ExperimentResult::add_meta(const std::string& key,
                                const std::string& value) {
  metadata.emplace_back(key, value);
}

void ExperimentResult::add_meta(const std::string& key, double value) {
  metadata.emplace_back(key, format_double(value));
}

void ExperimentResult::add_meta(const std::string& key, long long value) {
  metadata.emplace_back(key, std::to_string(value));
}

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const ExperimentResult& r) {
  std::ostringstream out;
  for (const auto& [key, value] : r.metadata) {
    out << "# " << key << "=" << value << "\n";
  }
  for (size_t c = 0; c < r.columns.size(); ++c) {
    out << (c ? "," : "") << r.columns[c];
  }
  out << "\n";
  for (const auto& row : r.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << format_double(row[c]);
    }
    out << "\n";
  }
  return out.str();
}

std::string to_json(const ExperimentResult& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json meta;
  for (const auto& [key, value] : r.metadata) {
    meta[key] = value;
  }
  j["metadata"] = std::move(meta);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json obj;
    for (size_t c = 0; c < row.size() && c < r.columns.size(); ++c) {
      if (std::isfinite(row[c])) {
        obj[r.columns[c]] = row[c];
      } else {
        obj[r.columns[c]] = format_double(row[c]);
      }
    }
    rows.push_back(std::move(obj));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace lqn
