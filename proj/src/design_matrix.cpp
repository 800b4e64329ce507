#include "qrmap/design_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qrmap/errors.hpp"

namespace qrmap {

std::string describe_rank_deficiency(const Eigen::MatrixXd& values,
                                     const std::vector<std::string>& names) {
  const Eigen::Index k = values.cols();
  if (k == 0) return {};
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(values);
  const auto& r = qr.matrixR();
  const double lead = std::abs(r(0, 0));
  Eigen::Index rank = 0;
  const Eigen::Index diag = std::min(values.rows(), k);
  for (Eigen::Index i = 0; i < diag; ++i) {
    if (lead > 0.0 && std::abs(r(i, i)) > kRankTolerance * lead) ++rank;
  }
  if (rank == k) return {};

  const auto& perm = qr.colsPermutation().indices();
  std::vector<Eigen::Index> independent(perm.data(), perm.data() + rank);
  std::sort(independent.begin(), independent.end());
  Eigen::MatrixXd basis(values.rows(), rank);
  for (Eigen::Index j = 0; j < rank; ++j) basis.col(j) = values.col(independent[j]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> basis_qr(basis);

  std::ostringstream out;
  out << "design matrix is rank deficient (rank " << rank << " of " << k << ")";
  std::vector<Eigen::Index> dependent(perm.data() + rank, perm.data() + k);
  std::sort(dependent.begin(), dependent.end());
  for (Eigen::Index c : dependent) {
    out << "; column '" << names[c] << "'";
    if (rank == 0) {
      out << " is identically zero";
      continue;
    }
    const Eigen::VectorXd coef = basis_qr.solve(values.col(c));
    const double scale = std::max(1.0, coef.cwiseAbs().maxCoeff());
    bool first = true;
    for (Eigen::Index j = 0; j < rank; ++j) {
      if (std::abs(coef(j)) <= 1e-8 * scale) continue;
      out << (first ? " depends on " : ", ") << "'" << names[independent[j]] << "'";
      first = false;
    }
    if (first) out << " is identically zero";
  }
  return out.str();
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, std::vector<ColumnInfo> columns)
    : values_(std::move(values)), columns_(std::move(columns)) {
  const Eigen::Index n = values_.rows();
  const Eigen::Index k = values_.cols();
  if (static_cast<Eigen::Index>(columns_.size()) != k) {
    throw DesignError("design matrix has " + std::to_string(k) + " columns but " +
                      std::to_string(columns_.size()) + " column descriptors");
  }
  if (k == 0 || columns_.front().kind != ColumnKind::intercept) {
    throw DesignError("first design column must be the intercept");
  }
  for (Eigen::Index j = 1; j < k; ++j) {
    if (columns_[j].kind == ColumnKind::intercept) {
      throw DesignError("only the first column may be an intercept ('" + columns_[j].name + "')");
    }
  }
  if (n < k) {
    throw DesignError("design matrix needs at least p+1 = " + std::to_string(k) +
                      " rows, got " + std::to_string(n));
  }
  if (!values_.allFinite()) throw DesignError("design matrix contains non-finite values");
  if ((values_.col(0).array() != 1.0).any()) {
    throw DesignError("intercept column must be all ones");
  }
  for (Eigen::Index j = 1; j < k; ++j) {
    if (columns_[j].kind != ColumnKind::dummy) continue;
    if (((values_.col(j).array() != 0.0) && (values_.col(j).array() != 1.0)).any()) {
      throw DesignError("dummy column '" + columns_[j].name + "' has values outside {0,1}");
    }
  }
  if (auto msg = describe_rank_deficiency(values_, column_names()); !msg.empty()) {
    throw DesignError(msg);
  }
}

DesignMatrix DesignMatrix::intercept_only(Eigen::Index n) {
  return DesignMatrix(Eigen::MatrixXd::Ones(n, 1),
                      {ColumnInfo{"(Intercept)", ColumnKind::intercept, ""}});
}

std::vector<std::string> DesignMatrix::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name);
  return names;
}

DesignMatrix DesignMatrix::select_rows(const std::vector<Eigen::Index>& rows) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values_.row(rows[i]);
  return DesignMatrix(std::move(out), columns_);
}

DesignMatrix DesignMatrix::drop_row(Eigen::Index row) const {
  const Eigen::Index n = values_.rows();
  Eigen::MatrixXd out(n - 1, values_.cols());
  out.topRows(row) = values_.topRows(row);
  out.bottomRows(n - 1 - row) = values_.bottomRows(n - 1 - row);
  return DesignMatrix(std::move(out), columns_);
}

DesignMatrix DesignMatrix::select_columns(const std::vector<Eigen::Index>& cols) const {
  Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  std::vector<ColumnInfo> info;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = values_.col(cols[j]);
    info.push_back(columns_[cols[j]]);
  }
  return DesignMatrix(std::move(out), std::move(info));
}

}  // namespace qrmap
