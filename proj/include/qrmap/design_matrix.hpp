#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qrmap {

enum class ColumnKind { intercept, continuous, dummy };

struct ColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::string source_covariate;

  bool operator==(const ColumnInfo&) const = default;
};

/// Relative tolerance on |R_ii| / |R_00| below which a pivoted QR diagonal
/// entry is treated as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Numeric n x (p+1) design matrix. Construction validates that the first
/// column is an all-ones intercept, dummy columns are 0/1, n >= p+1 and the
/// matrix has full column rank. Violations throw DesignError; the rank
/// error names the dependent columns.
class DesignMatrix {
 public:
  DesignMatrix(Eigen::MatrixXd values, std::vector<ColumnInfo> columns);

  /// Intercept-only design with n rows.
  static DesignMatrix intercept_only(Eigen::Index n);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<ColumnInfo>& columns() const noexcept { return columns_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  std::vector<std::string> column_names() const;

  /// New design made of the given rows (repeats allowed). Revalidated.
  DesignMatrix select_rows(const std::vector<Eigen::Index>& rows) const;
  /// Design with one row removed. Revalidated.
  DesignMatrix drop_row(Eigen::Index row) const;
  /// Design restricted to the given column indices (must include 0).
  DesignMatrix select_columns(const std::vector<Eigen::Index>& cols) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<ColumnInfo> columns_;
};

/// Pivoted-QR rank check shared by DesignMatrix and the OLS path. Returns
/// an empty string when full rank, otherwise a description naming each
/// dependent column and the columns it is a combination of.
std::string describe_rank_deficiency(const Eigen::MatrixXd& values,
                                     const std::vector<std::string>& names);

}  // namespace qrmap
