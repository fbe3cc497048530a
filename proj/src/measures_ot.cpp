#include "convexpde/measures_ot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "convexpde/transport_simplex.hpp"

namespace cpde {

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights) {
  if (weights.size() != points.cols())
    throw DimensionMismatch("DiscreteMeasure: weight count differs from point count");
  if (points.cols() == 0) throw EmptySupport("DiscreteMeasure: no atoms");
  if (!points.allFinite()) throw InvalidMeasure("DiscreteMeasure: non-finite coordinate");
  for (Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i)))
      throw InvalidMeasure("DiscreteMeasure: weights must be finite and strictly positive");
  }

  const Index n = points.cols();
  const Index d = points.rows();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  const double key_dim = d > 0 ? 1 : 0;
  auto key = [&](Index i) { return key_dim ? points(0, i) : 0.0; };
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return key(a) < key(b); });

  // rep[i] = surviving atom for atom i
  std::vector<Index> rep(n);
  std::iota(rep.begin(), rep.end(), Index{0});
  Index window = 0;
  for (Index k = 0; k < n; ++k) {
    const Index i = order[k];
    while (key(order[window]) < key(i) - kMergeTolerance) ++window;
    for (Index l = window; l < k; ++l) {
      const Index c = order[l];
      if (rep[c] != c) continue;
      if ((points.col(i) - points.col(c)).cwiseAbs().maxCoeff() <= kMergeTolerance) {
        // keep the earliest original index as the survivor
        if (c < i) {
          rep[i] = c;
        } else {
          rep[c] = i;
          for (Index r = 0; r < k; ++r)
            if (rep[order[r]] == c) rep[order[r]] = i;
        }
        break;
      }
    }
  }

  std::vector<Index> survivor_slot(n, -1);
  Index count = 0;
  for (Index i = 0; i < n; ++i)
    if (rep[i] == i) survivor_slot[i] = count++;
  points_.resize(d, count);
  weights_.setZero(count);
  for (Index i = 0; i < n; ++i) {
    const Index s = survivor_slot[rep[i]];
    if (rep[i] == i) points_.col(s) = points.col(i);
    weights_(s) += weights(i);
  }
  total_mass_ = weights_.sum();
  second_moment_ = (points_.colwise().squaredNorm().transpose().array() * weights_.array()).sum();
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd points, double total_mass) {
  const Index n = points.cols();
  if (n == 0) throw EmptySupport("DiscreteMeasure::uniform: no atoms");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, total_mass / static_cast<double>(n));
  return DiscreteMeasure(std::move(points), std::move(w));
}

TransportPlan::TransportPlan(DiscreteMeasure source, DiscreteMeasure target,
                             std::vector<PlanEntry> entries)
    : source_(std::move(source)), target_(std::move(target)), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.source < 0 || e.source >= source_.size() || e.target < 0 || e.target >= target_.size())
      throw DimensionMismatch("TransportPlan: entry index out of range");
    if (!(e.mass >= 0.0) || !std::isfinite(e.mass))
      throw InvalidMeasure("TransportPlan: negative or non-finite mass");
  }
  std::sort(entries_.begin(), entries_.end(), [](const PlanEntry& a, const PlanEntry& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
}

Eigen::MatrixXd TransportPlan::dense() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(source_.size(), target_.size());
  for (const auto& e : entries_) g(e.source, e.target) += e.mass;
  return g;
}

Eigen::VectorXd TransportPlan::row_sums() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(source_.size());
  for (const auto& e : entries_) r(e.source) += e.mass;
  return r;
}

Eigen::VectorXd TransportPlan::column_sums() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(target_.size());
  for (const auto& e : entries_) c(e.target) += e.mass;
  return c;
}

double TransportPlan::marginal_error() const {
  const double scale = std::max(source_.total_mass(), target_.total_mass());
  const double rows = (row_sums() - source_.weights()).cwiseAbs().maxCoeff();
  const double cols = (column_sums() - target_.weights()).cwiseAbs().maxCoeff();
  return std::max(rows, cols) / scale;
}

double TransportPlan::inner_product_value() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.mass * source_.point(e.source).dot(target_.point(e.target));
  return s;
}

double TransportPlan::quadratic_cost() const {
  double s = 0.0;
  for (const auto& e : entries_)
    s += 0.5 * e.mass * (source_.point(e.source) - target_.point(e.target)).squaredNorm();
  return s;
}

OtSolution solve_discrete_ot(const DiscreteMeasure& alpha, const DiscreteMeasure& beta) {
  if (alpha.dim() != beta.dim())
    throw DimensionMismatch("solve_discrete_ot: measures live in different dimensions");
  const double ma = alpha.total_mass();
  const double mb = beta.total_mass();
  if (std::abs(ma - mb) > 1e-9 * std::max(ma, mb))
    throw MassMismatch("solve_discrete_ot: total masses differ");

  detail::TransportSimplex simplex(alpha.points(), alpha.weights(), beta.points(), beta.weights());
  if (!simplex.run({})) throw SolverFailure("solve_discrete_ot: network simplex did not converge");

  const double drop = 1e-14 * ma;
  std::vector<PlanEntry> entries;
  for (const auto& a : simplex.basic_flows())
    if (a.flow > drop) entries.push_back({a.i, a.j, a.flow});
  TransportPlan plan(alpha, beta, std::move(entries));

  const Index n = alpha.size();
  const Index m = beta.size();
  const auto& pi = simplex.potentials();
  PotentialSamples pot;
  pot.phi.resize(n);
  pot.psi.resize(m);
  for (Index i = 0; i < n; ++i) pot.phi(i) = 0.5 * alpha.point(i).squaredNorm() + pi[i];
  for (Index j = 0; j < m; ++j) pot.psi(j) = 0.5 * beta.point(j).squaredNorm() - pi[n + j];
  const double shift = (beta.weights().dot(pot.psi) - alpha.weights().dot(pot.phi)) / (ma + mb);
  pot.phi.array() += shift;
  pot.psi.array() -= shift;

  OtStats stats;
  stats.pivots = simplex.pivots();
  stats.max_dual_violation = dual_feasibility_violation(pot, alpha, beta);
  for (const auto& e : plan.entries()) {
    const double gap = pot.phi(e.source) + pot.psi(e.target) -
                       alpha.point(e.source).dot(beta.point(e.target));
    stats.max_slackness_gap = std::max(stats.max_slackness_gap, std::abs(gap));
  }
  if (plan.marginal_error() > TransportPlan::kMarginalTolerance)
    throw SolverFailure("solve_discrete_ot: marginal identity violated");
  if (stats.max_dual_violation > 1e-9 || stats.max_slackness_gap > 1e-8)
    throw SolverFailure("solve_discrete_ot: optimality certificate failed");
  return {std::move(plan), std::move(pot), stats};
}

double dual_feasibility_violation(const PotentialSamples& pot, const DiscreteMeasure& alpha,
                                  const DiscreteMeasure& beta) {
  if (pot.phi.size() != alpha.size() || pot.psi.size() != beta.size())
    throw DimensionMismatch("potential sample counts differ from the measures");
  if (alpha.dim() != beta.dim()) throw DimensionMismatch("measures live in different dimensions");
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const Eigen::VectorXd s =
        (alpha.points().transpose() * beta.point(j)) - pot.phi - Eigen::VectorXd::Constant(alpha.size(), pot.psi(j));
    worst = std::max(worst, s.maxCoeff());
  }
  return worst;
}

double evaluate_J(const PotentialSamples& pot, const DiscreteMeasure& alpha,
                  const DiscreteMeasure& beta, double tolerance) {
  if (dual_feasibility_violation(pot, alpha, beta) > tolerance)
    throw InfeasiblePotentials("evaluate_J: phi_i + psi_j >= x_i . y_j violated");
  return alpha.weights().dot(pot.phi) + beta.weights().dot(pot.psi);
}

Eigen::MatrixXd barycentric_map(const TransportPlan& plan) {
  const auto& src = plan.source();
  const auto& tgt = plan.target();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(tgt.dim(), src.size());
  Eigen::VectorXd row = Eigen::VectorXd::Zero(src.size());
  for (const auto& e : plan.entries()) {
    t.col(e.source) += e.mass * tgt.point(e.target);
    row(e.source) += e.mass;
  }
  for (Index i = 0; i < src.size(); ++i) {
    if (!(row(i) > 0.0)) throw ZeroRowMass("barycentric_map: source atom carries no mass");
    t.col(i) /= src.weight(i);
  }
  return t;
}

double pushforward_residual(const TransportPlan& plan, const std::vector<TestFunction>& family,
                            PushforwardMode mode) {
  const auto& src = plan.source();
  const auto& tgt = plan.target();
  Eigen::MatrixXd images;
  if (mode == PushforwardMode::BarycentricMap) images = barycentric_map(plan);

  double worst = 0.0;
  for (const auto& f : family) {
    double target_side = 0.0;
    for (Index j = 0; j < tgt.size(); ++j) target_side += tgt.weight(j) * f(tgt.point(j));
    double plan_side = 0.0;
    if (mode == PushforwardMode::Plan) {
      for (const auto& e : plan.entries()) plan_side += e.mass * f(tgt.point(e.target));
    } else {
      for (Index i = 0; i < src.size(); ++i) plan_side += src.weight(i) * f(images.col(i));
    }
    worst = std::max(worst, std::abs(plan_side - target_side));
  }
  return worst;
}

CycleReport check_cyclical_monotonicity(const TransportPlan& plan, int n_cycles, int max_length,
                                        std::uint64_t seed, double tolerance) {
  CycleReport report;
  const auto& entries = plan.entries();
  if (entries.empty() || n_cycles <= 0) return report;
  const int longest = std::max(2, max_length);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
  std::uniform_int_distribution<int> length(2, longest);
  const auto& x = plan.source();
  const auto& y = plan.target();

  std::vector<std::size_t> cycle;
  for (int c = 0; c < n_cycles; ++c) {
    const int k = length(rng);
    cycle.clear();
    for (int m = 0; m < k; ++m) cycle.push_back(pick(rng));
    double matched = 0.0;
    double shifted = 0.0;
    double scale = 1.0;
    for (int m = 0; m < k; ++m) {
      const auto& here = entries[cycle[m]];
      const auto& next = entries[cycle[(m + 1) % k]];
      matched += x.point(here.source).dot(y.point(here.target));
      shifted += x.point(next.source).dot(y.point(here.target));
      scale += x.point(here.source).norm() * y.point(here.target).norm() +
               x.point(next.source).norm() * y.point(here.target).norm();
    }
    const double deficit = shifted - matched;
    ++report.cycles_tested;
    if (deficit > tolerance * scale) ++report.violations;
    report.worst_violation = std::max(report.worst_violation, deficit);
  }
  return report;
}

}  // namespace cpde
