#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpde::detail {

/// Primal network simplex for the uncapacitated transportation problem
///   min sum_ij c_ij f_ij,  sum_j f_ij = s_i,  sum_i f_ij = d_j,  f >= 0
/// with c_ij = |x_i - y_j|^2 / 2. Arcs of the complete bipartite graph are
/// implicit (arc id i*m + j). The spanning tree is kept in thread/preorder
/// form with an artificial root, following the classical LEMON layout.
class TransportSimplex {
 public:
  struct Options {
    /// Entering arcs need reduced cost below -pricing_eps * cost_scale.
    double pricing_eps = 1e-13;
    /// Pivots between full recomputations of the node potentials.
    std::int64_t refresh_interval = 0;  // 0 = number of nodes
    /// Verify the tree arrays after every pivot (tests only, O(nodes)).
    bool validate = false;
    std::int64_t max_pivots = 0;  // 0 = unlimited
  };

  TransportSimplex(const Eigen::MatrixXd& x, const Eigen::VectorXd& supply,
                   const Eigen::MatrixXd& y, const Eigen::VectorXd& demand);

  /// Returns false if the pivot budget was exhausted.
  bool run(const Options& opt);

  struct Arc {
    Eigen::Index i;
    Eigen::Index j;
    double flow;
  };
  /// Real tree arcs with their flows, recomputed exactly from the basis.
  std::vector<Arc> basic_flows() const;

  /// Node potentials pi with c_ij + pi_i - pi_{n+j} >= 0 and equality on
  /// tree arcs. Sources are 0..n-1, targets n..n+m-1.
  const std::vector<double>& potentials() const { return pi_; }

  double min_reduced_cost() const;
  std::int64_t pivots() const { return pivots_; }
  double cost_scale() const { return cost_scale_; }

  /// Consistency of parent/thread/succ_num/last_succ/pred; empty if fine.
  std::string check_structure() const;

 private:
  double cost(std::int64_t e) const;
  Eigen::Index src(std::int64_t e) const;
  Eigen::Index tgt(std::int64_t e) const;
  double reduced(std::int64_t e) const;

  bool find_entering(double threshold);
  void find_join();
  bool find_leaving();
  void change_flow();
  void update_tree();
  void update_potential();
  void refresh_potentials();
  std::vector<double> exact_node_flows() const;

  Eigen::Index n_, m_, dim_;
  int node_num_, root_;
  std::int64_t arc_num_;  // real arcs; artificial arc of node u is arc_num_ + u
  std::vector<double> xs_, ys_;  // packed coordinates
  std::vector<double> ysoa_;     // target coordinates, one row per axis
  std::vector<double> supply_;
  double art_cost_ = 0.0;
  double cost_scale_ = 1.0;

  std::vector<int> parent_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<std::int64_t> pred_;
  std::vector<signed char> pred_dir_;
  std::vector<double> node_flow_;  // flow of pred_[u]
  std::vector<double> pi_;
  std::vector<signed char> state_;  // real arcs: 1 = at lower bound, 0 = tree
  std::vector<int> dirty_revs_;

  std::int64_t block_size_ = 0;
  std::int64_t next_arc_ = 0;
  std::int64_t in_arc_ = -1;
  int join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1, v_out_ = -1;
  double delta_ = 0.0;
  std::int64_t pivots_ = 0;
};

}  // namespace cpde::detail
