#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lqn {

inline constexpr const char* kToolVersion = "1.0.0";

// Seeded, tabular record of a scenario run: ordered metadata plus a numeric
// table. Serializes to CSV (metadata as leading '#' comment lines) and to a
// JSON mirror with identical column names. All formatting is deterministic:
// doubles are written in shortest round-trip form, so identical runs produce
// byte-identical files.
struct ExperimentResult {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_meta(const std::string& key, const std::string& value);
  void add_meta(const std::string& key, double value);
  void add_meta(const std::string& key, long long value);
};

// Shortest round-trip decimal form of a double ("nan"/"inf" spelled out).
std::string format_double(double v);

std::string to_csv(const ExperimentResult& r);
std::string to_json(const ExperimentResult& r);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace lqn
