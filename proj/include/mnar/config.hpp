#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mnar/dataset.hpp"
#include "mnar/models.hpp"

namespace mnar {

/// Declarative `key = value` config: one pair per line, `#` comments,
/// dotted keys for namespacing. Values keep their raw text; typed getters
/// raise ConfigError with the offending key.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  Eigen::VectorXd get_vector(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  /// Semicolon-separated rows of comma-separated entries.
  Eigen::MatrixXd get_matrix(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_vector(const std::string& key, const Eigen::VectorXd& value);

  std::string serialize() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // insertion order
  std::map<std::string, int> index_;
};

/// Model (de)serialization against the `response.*` / `outcome.*` keys.
ResponseModel response_model_from_config(const KeyValueConfig& cfg, int p_u);
OutcomeModel outcome_model_from_config(const KeyValueConfig& cfg, int p_u,
                                       int p_z);
void response_model_to_config(const ResponseModel& model, KeyValueConfig& cfg);
void outcome_model_to_config(const OutcomeModel& model, KeyValueConfig& cfg);

ColumnRoles roles_from_config(const KeyValueConfig& cfg);

}  // namespace mnar
