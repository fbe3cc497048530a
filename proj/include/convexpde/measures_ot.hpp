#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "convexpde/errors.hpp"

namespace cpde {

using Eigen::Index;

/// Weighted point cloud in R^d. Points are stored column-wise (d x n).
///
/// Atoms closer than `kMergeTolerance` in the max-norm are merged at
/// construction; the surviving atom keeps its first occurrence's position
/// and accumulates the weights. All weights must be strictly positive.
class DiscreteMeasure {
 public:
  static constexpr double kMergeTolerance = 1e-12;

  DiscreteMeasure() = default;
  DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights);

  /// Equal weights summing to `total_mass`.
  static DiscreteMeasure uniform(Eigen::MatrixXd points, double total_mass = 1.0);

  Index dim() const { return points_.rows(); }
  Index size() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  auto point(Index i) const { return points_.col(i); }
  double weight(Index i) const { return weights_(i); }

  double total_mass() const { return total_mass_; }
  /// Sum of w_i |x_i|^2.
  double second_moment() const { return second_moment_; }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
  double total_mass_ = 0.0;
  double second_moment_ = 0.0;
};

struct PlanEntry {
  Index source;
  Index target;
  double mass;
};

/// Sparse coupling between two discrete measures. Entries are sorted by
/// (source, target) and all masses are nonnegative.
class TransportPlan {
 public:
  static constexpr double kMarginalTolerance = 1e-9;

  TransportPlan(DiscreteMeasure source, DiscreteMeasure target,
                std::vector<PlanEntry> entries);

  const DiscreteMeasure& source() const { return source_; }
  const DiscreteMeasure& target() const { return target_; }
  const std::vector<PlanEntry>& entries() const { return entries_; }

  Eigen::MatrixXd dense() const;
  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd column_sums() const;

  /// Largest marginal deviation relative to the total mass.
  double marginal_error() const;
  /// Sum of gamma_ij x_i . y_j.
  double inner_product_value() const;
  /// Sum of gamma_ij |x_i - y_j|^2 / 2.
  double quadratic_cost() const;

 private:
  DiscreteMeasure source_;
  DiscreteMeasure target_;
  std::vector<PlanEntry> entries_;
};

/// Samples of a convex potential on the source atoms (phi) and of its
/// conjugate on the target atoms (psi).
struct PotentialSamples {
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;
};

struct OtStats {
  std::int64_t pivots = 0;
  double max_dual_violation = 0.0;
  double max_slackness_gap = 0.0;
};

struct OtSolution {
  TransportPlan plan;
  PotentialSamples potentials;
  OtStats stats;
};

/// Exact discrete optimal transport for the quadratic cost, solved by a
/// network simplex on the complete bipartite transport graph.
///
/// The plan maximizes sum gamma_ij x_i . y_j; the potentials satisfy
/// phi_i + psi_j >= x_i . y_j with equality on the support of the plan.
/// Throws MassMismatch, DimensionMismatch or SolverFailure.
OtSolution solve_discrete_ot(const DiscreteMeasure& alpha, const DiscreteMeasure& beta);

/// max_i (x_i . y - phi_i) at each query column y. Throws EmptySupport.
template <typename DerivedX, typename DerivedPhi, typename DerivedY>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> legendre_transform(
    const Eigen::MatrixBase<DerivedX>& sample_points,
    const Eigen::MatrixBase<DerivedPhi>& phi,
    const Eigen::MatrixBase<DerivedY>& queries) {
  using Scalar = typename DerivedX::Scalar;
  if (sample_points.cols() == 0) throw EmptySupport("legendre_transform: no sample points");
  if (phi.size() != sample_points.cols())
    throw DimensionMismatch("legendre_transform: phi size differs from sample count");
  if (queries.rows() != sample_points.rows())
    throw DimensionMismatch("legendre_transform: query dimension differs from samples");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(queries.cols());
  for (Index j = 0; j < queries.cols(); ++j) {
    out(j) = ((sample_points.transpose() * queries.col(j)) - phi).maxCoeff();
  }
  return out;
}

/// max over (i,j) of x_i . y_j - phi_i - psi_j, clamped at 0.
double dual_feasibility_violation(const PotentialSamples& pot, const DiscreteMeasure& alpha,
                                  const DiscreteMeasure& beta);

/// J = sum w_i phi_i + sum v_j psi_j. Throws InfeasiblePotentials when
/// the pair violates phi_i + psi_j >= x_i . y_j beyond `tolerance`.
double evaluate_J(const PotentialSamples& pot, const DiscreteMeasure& alpha,
                  const DiscreteMeasure& beta, double tolerance = 1e-9);

using TestFunction = std::function<double(const Eigen::VectorXd&)>;

enum class PushforwardMode {
  /// sum_ij gamma_ij f(y_j) against sum_j v_j f(y_j).
  Plan,
  /// sum_i w_i f(T(x_i)) with T the barycentric map, against sum_j v_j f(y_j).
  BarycentricMap,
};

/// Largest discrepancy of the weak pushforward identity over the family.
double pushforward_residual(const TransportPlan& plan, const std::vector<TestFunction>& family,
                            PushforwardMode mode = PushforwardMode::Plan);

/// T_i = sum_j gamma_ij y_j / w_i. Throws ZeroRowMass.
Eigen::MatrixXd barycentric_map(const TransportPlan& plan);

struct CycleReport {
  std::int64_t cycles_tested = 0;
  std::int64_t violations = 0;
  double worst_violation = 0.0;
};

/// Samples cycles of support pairs and checks
/// sum_m x_{i_m} . y_{j_m} >= sum_m x_{i_{m+1}} . y_{j_m}.
CycleReport check_cyclical_monotonicity(const TransportPlan& plan, int n_cycles, int max_length,
                                        std::uint64_t seed, double tolerance = 1e-12);

}  // namespace cpde
