#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace mnar {

/// Per-column affine transform record: stored so estimates fitted on
/// standardized data can be reported on the original scale.
struct Standardization {
  bool applied = false;
  Eigen::VectorXd u_mean, u_sd;
  Eigen::VectorXd z_mean, z_sd;
  double y_mean = 0.0, y_sd = 1.0;  // computed over respondents
};

struct ColumnRoles {
  std::string outcome;
  std::string indicator;
  std::vector<std::string> covariates;   // u block
  std::vector<std::string> instruments;  // z block
};

/// Sample of (u, z, y-or-missing, delta) rows. Missing y is stored as NaN;
/// delta = 1 iff y is present. Instruments live in the z block and never
/// enter a response-model index.
class Dataset {
 public:
  Eigen::MatrixXd u;
  Eigen::MatrixXd z;
  Eigen::VectorXd y;                 // NaN where delta = 0
  std::vector<std::uint8_t> delta;
  std::vector<std::string> u_names;
  std::vector<std::string> z_names;
  std::string y_name = "y";
  Standardization standardization;

  int n() const { return static_cast<int>(delta.size()); }
  int n_obs() const;
  int p_u() const { return static_cast<int>(u.cols()); }
  int p_z() const { return static_cast<int>(z.cols()); }
  std::vector<int> observed_rows() const;
  std::vector<int> missing_rows() const;

  /// Checks the structural invariants (delta/missingness agreement,
  /// non-empty sample, at least one respondent). require_instrument adds the
  /// fit-path requirement of a declared instrument column.
  void validate(bool require_instrument) const;

  Dataset subset(const std::vector<int>& rows) const;

  /// Standardized copy (columns centered/scaled; y standardized with
  /// respondent moments) with the transform recorded. include_y = false
  /// leaves the outcome untouched (discrete outcomes).
  Dataset standardized(bool include_y = true) const;
};

/// RFC-4180-style CSV with a mandatory header row. Missing outcome values
/// are empty fields and must agree with the indicator column; any
/// disagreement is a SchemaError naming the row.
Dataset read_dataset_csv(const std::string& path, const ColumnRoles& roles);

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& indicator_name = "delta");

}  // namespace mnar
