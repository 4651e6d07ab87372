#pragma once

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "nbspectra/sparse.hpp"

namespace nbspectra {

/// Connection probabilities p_ij for i != j (the diagonal is always zero).
/// Three representations share one interface: a single probability, a
/// stochastic block structure, and an explicit symmetric matrix.
class ProbabilityProfile {
 public:
  // No default member initializers here: these nested types feed the variant
  // member below, whose traits are evaluated before the enclosing class
  // closes (where nested NSDMIs would first be parsed).
  struct Homogeneous {
    double p;
  };
  struct Blocks {
    std::vector<int> sizes;      // per-block vertex counts
    Eigen::MatrixXd rates;       // symmetric, entries in [0,1]
  };
  struct Dense {
    Eigen::MatrixXd p;           // symmetric, zero diagonal
  };

  static ProbabilityProfile homogeneous(int n, double p);
  static ProbabilityProfile blocks(std::vector<int> sizes, Eigen::MatrixXd rates);
  static ProbabilityProfile dense(Eigen::MatrixXd p);

  int n() const { return n_; }
  double operator()(int i, int j) const;
  double row_sum(int i) const;          // sum_j p_ij
  double row_sum_sq(int i) const;       // sum_j p_ij^2
  double max_entry() const;
  int block_of(int i) const;            // 0 for non-block profiles

  bool is_homogeneous() const { return std::holds_alternative<Homogeneous>(rep_); }
  const Blocks* as_blocks() const { return std::get_if<Blocks>(&rep_); }

 private:
  int n_ = 0;
  std::variant<Homogeneous, Blocks, Dense> rep_ = Homogeneous{0.0};
  std::vector<int> block_index_;  // per-vertex block id (Blocks only)
};

/// Derived ensemble scale parameters. q_raw = sqrt(d) is the almost-sure
/// entry bound scale; q additionally caps sparsity against n and kappa.
struct EnsembleParams {
  double d = 0.0;      // max_i sum_j p_ij
  double kappa = 0.0;  // max_ij p_ij / (d/n)
  double q = 0.0;      // min(sqrt(d), n^{1/13} kappa^{-1/12})
  double q_raw = 0.0;  // sqrt(d)
};

/// d, kappa, q from a profile. Throws on a degenerate profile (d == 0).
EnsembleParams derive_er_parameters(const ProbabilityProfile& profile);

struct AssumptionCheck {
  bool ok = false;
  double attained = 0.0;
  double bound = 0.0;
};

struct AssumptionReport {
  AssumptionCheck row_second_moment;   // max_i sum_j E|H_ij|^2 <= 1
  AssumptionCheck entry_second_moment; // max_ij E|H_ij|^2 <= kappa/n
  AssumptionCheck entry_magnitude;     // max |H_ij| <= 1/q (realization)
  bool all_ok() const {
    return row_second_moment.ok && entry_second_moment.ok && entry_magnitude.ok;
  }
};

/// Checks the moment assumptions for a centered Bernoulli ensemble, where
/// E|H_ij|^2 = p_ij (1 - p_ij) / d, against one sampled realization.
AssumptionReport validate_assumptions(const SparseMatrix& h,
                                      const ProbabilityProfile& profile,
                                      const EnsembleParams& params);

/// Same checks when every support entry has constant second moment
/// `entry_variance` (sign ensembles: 1/q^2).
AssumptionReport validate_assumptions_variance(const SparseMatrix& h,
                                               double entry_variance,
                                               const EnsembleParams& params);

}  // namespace nbspectra
