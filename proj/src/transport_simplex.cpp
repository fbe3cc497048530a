#include "convexpde/transport_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cpde::detail {

namespace {
constexpr signed char kUp = 1;
constexpr signed char kDown = -1;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

TransportSimplex::TransportSimplex(const Eigen::MatrixXd& x, const Eigen::VectorXd& supply,
                                   const Eigen::MatrixXd& y, const Eigen::VectorXd& demand)
    : n_(x.cols()), m_(y.cols()), dim_(x.rows()) {
  node_num_ = static_cast<int>(n_ + m_);
  root_ = node_num_;
  arc_num_ = static_cast<std::int64_t>(n_) * m_;

  xs_.assign(x.data(), x.data() + x.size());
  ys_.assign(y.data(), y.data() + y.size());
  ysoa_.resize(ys_.size());
  for (Eigen::Index j = 0; j < m_; ++j)
    for (Eigen::Index q = 0; q < dim_; ++q) ysoa_[q * m_ + j] = y(q, j);

  const double s_total = supply.sum();
  const double d_total = demand.sum();
  supply_.resize(node_num_ + 1);
  for (Eigen::Index i = 0; i < n_; ++i) supply_[i] = supply(i);
  // balance the problem exactly up to rounding
  for (Eigen::Index j = 0; j < m_; ++j) supply_[n_ + j] = -demand(j) * (s_total / d_total);
  supply_[root_] = 0.0;

  double max_cost = 0.0;
  for (std::int64_t e = 0; e < arc_num_; ++e) max_cost = std::max(max_cost, cost(e));
  cost_scale_ = std::max(max_cost, 1e-300);
  art_cost_ = (max_cost + 1.0) * (node_num_ + 1);

  const int total = node_num_ + 1;
  parent_.assign(total, -1);
  pred_.assign(total, -1);
  pred_dir_.assign(total, 0);
  thread_.assign(total, 0);
  rev_thread_.assign(total, 0);
  succ_num_.assign(total, 1);
  last_succ_.assign(total, 0);
  node_flow_.assign(total, 0.0);
  pi_.assign(total, 0.0);
  state_.assign(static_cast<std::size_t>(arc_num_), 1);

  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = total;
  last_succ_[root_] = root_ - 1;
  for (int u = 0; u < node_num_; ++u) {
    parent_[u] = root_;
    pred_[u] = arc_num_ + u;
    thread_[u] = u + 1;
    rev_thread_[u + 1] = u;
    succ_num_[u] = 1;
    last_succ_[u] = u;
    if (supply_[u] >= 0) {
      pred_dir_[u] = kUp;
      pi_[u] = 0.0;
      node_flow_[u] = supply_[u];
    } else {
      pred_dir_[u] = kDown;
      pi_[u] = art_cost_;
      node_flow_[u] = -supply_[u];
    }
  }

  block_size_ = std::max<std::int64_t>(
      10, static_cast<std::int64_t>(std::sqrt(static_cast<double>(arc_num_))));
}

Eigen::Index TransportSimplex::src(std::int64_t e) const {
  if (e < arc_num_) return static_cast<Eigen::Index>(e / m_);
  const int u = static_cast<int>(e - arc_num_);
  return supply_[u] >= 0 ? u : root_;
}

Eigen::Index TransportSimplex::tgt(std::int64_t e) const {
  if (e < arc_num_) return n_ + static_cast<Eigen::Index>(e % m_);
  const int u = static_cast<int>(e - arc_num_);
  return supply_[u] >= 0 ? root_ : u;
}

double TransportSimplex::cost(std::int64_t e) const {
  if (e >= arc_num_) {
    const int u = static_cast<int>(e - arc_num_);
    return supply_[u] >= 0 ? 0.0 : art_cost_;
  }
  const std::int64_t i = e / m_;
  const std::int64_t j = e % m_;
  const double* a = xs_.data() + i * dim_;
  const double* b = ys_.data() + j * dim_;
  double s = 0.0;
  for (Eigen::Index k = 0; k < dim_; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return 0.5 * s;
}

double TransportSimplex::reduced(std::int64_t e) const {
  return cost(e) + pi_[src(e)] - pi_[tgt(e)];
}

namespace {

// Best reduced cost over arcs (i, j0) .. (i, j1 - 1); D = 0 means runtime dim.
template <int D>
inline void scan_row(const double* x, const double* ysoa, Eigen::Index m, Eigen::Index dim,
                     double pi_i, const double* pi_t, const signed char* state, std::int64_t e0,
                     Eigen::Index j0, Eigen::Index j1, double& best, std::int64_t& arg) {
  const Eigen::Index nd = D > 0 ? D : dim;
  for (Eigen::Index j = j0; j < j1; ++j) {
    double s = 0.0;
    for (Eigen::Index q = 0; q < nd; ++q) {
      const double dq = x[q] - ysoa[q * m + j];
      s += dq * dq;
    }
    const double c = 0.5 * s + pi_i - pi_t[j];
    if (c < best && state[e0 + (j - j0)]) {
      best = c;
      arg = e0 + (j - j0);
    }
  }
}

}  // namespace

bool TransportSimplex::find_entering(double threshold) {
  double best = threshold;
  std::int64_t remaining = arc_num_;
  std::int64_t e = next_arc_;
  const double* pi_t = pi_.data() + n_;
  while (remaining > 0) {
    std::int64_t cnt = std::min(block_size_, remaining);
    remaining -= cnt;
    while (cnt > 0) {
      const Eigen::Index i = static_cast<Eigen::Index>(e / m_);
      const Eigen::Index j0 = static_cast<Eigen::Index>(e % m_);
      const Eigen::Index j1 = static_cast<Eigen::Index>(std::min<std::int64_t>(m_, j0 + cnt));
      const double* x = xs_.data() + i * dim_;
      switch (dim_) {
        case 1: scan_row<1>(x, ysoa_.data(), m_, dim_, pi_[i], pi_t, state_.data(), e, j0, j1, best, in_arc_); break;
        case 2: scan_row<2>(x, ysoa_.data(), m_, dim_, pi_[i], pi_t, state_.data(), e, j0, j1, best, in_arc_); break;
        case 3: scan_row<3>(x, ysoa_.data(), m_, dim_, pi_[i], pi_t, state_.data(), e, j0, j1, best, in_arc_); break;
        default: scan_row<0>(x, ysoa_.data(), m_, dim_, pi_[i], pi_t, state_.data(), e, j0, j1, best, in_arc_);
      }
      cnt -= j1 - j0;
      e += j1 - j0;
      if (e == arc_num_) e = 0;
    }
    if (best < threshold) {
      next_arc_ = e;
      return true;
    }
  }
  return false;
}

void TransportSimplex::find_join() {
  int u = u_in_;
  int v = v_in_;
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

bool TransportSimplex::find_leaving() {
  // the entering arc sits at its lower bound, so flow runs first -> second
  const int first = u_in_;
  const int second = v_in_;
  delta_ = kInf;
  int result = 0;
  for (int u = first; u != join_; u = parent_[u]) {
    const double d = pred_dir_[u] == kUp ? node_flow_[u] : kInf;
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  for (int u = second; u != join_; u = parent_[u]) {
    const double d = pred_dir_[u] == kDown ? node_flow_[u] : kInf;
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void TransportSimplex::change_flow() {
  if (delta_ > 0) {
    for (int u = static_cast<int>(src(in_arc_)); u != join_; u = parent_[u])
      node_flow_[u] -= pred_dir_[u] * delta_;
    for (int u = static_cast<int>(tgt(in_arc_)); u != join_; u = parent_[u])
      node_flow_[u] += pred_dir_[u] * delta_;
  }
  node_flow_[u_out_] = 0.0;
  state_[in_arc_] = 0;
  if (pred_[u_out_] < arc_num_) state_[pred_[u_out_]] = 1;
}

void TransportSimplex::update_tree() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];
  const double in_flow = delta_;

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
    node_flow_[u_in_] = in_flow;

    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    const int thread_continue =
        old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

    // re-hang the stem u_in .. u_out under v_in
    int stem = u_in_;
    int par_stem = v_in_;
    int last = last_succ_[u_in_];
    int after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      const int next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      const int before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }

    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    // pred arcs shift one step down the reversed stem
    int tmp_sc = 0;
    const int tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
      node_flow_[u] = node_flow_[p];
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
    node_flow_[u_in_] = in_flow;
    succ_num_[u_in_] = old_succ_num;
  }

  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_out;
  }

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void TransportSimplex::update_potential() {
  const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost(in_arc_);
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

void TransportSimplex::refresh_potentials() {
  pi_[root_] = 0.0;
  for (int u = thread_[root_]; u != root_; u = thread_[u]) {
    pi_[u] = pi_[parent_[u]] - pred_dir_[u] * cost(pred_[u]);
  }
}

std::vector<double> TransportSimplex::exact_node_flows() const {
  std::vector<double> excess(supply_);
  std::vector<double> flow(node_flow_.size(), 0.0);
  for (int u = rev_thread_[root_]; u != root_; u = rev_thread_[u]) {
    flow[u] = std::max(0.0, pred_dir_[u] * excess[u]);
    excess[parent_[u]] += excess[u];
  }
  return flow;
}

bool TransportSimplex::run(const Options& opt) {
  const std::int64_t refresh =
      opt.refresh_interval > 0 ? opt.refresh_interval : std::max(node_num_, 64);
  const double threshold = -opt.pricing_eps * cost_scale_;
  if (arc_num_ == 0) return true;

  for (int round = 0; round < 8; ++round) {
    std::int64_t since_refresh = 0;
    while (find_entering(threshold)) {
      if (opt.max_pivots > 0 && pivots_ >= opt.max_pivots) return false;
      u_in_ = static_cast<int>(src(in_arc_));
      v_in_ = static_cast<int>(tgt(in_arc_));
      find_join();
      if (!find_leaving()) return false;  // unbounded: impossible with nonnegative costs
      change_flow();
      update_tree();
      update_potential();
      ++pivots_;
      if (++since_refresh >= refresh) {
        refresh_potentials();
        node_flow_ = exact_node_flows();
        since_refresh = 0;
      }
      if (opt.validate) {
        const std::string msg = check_structure();
        if (!msg.empty()) throw std::logic_error("transport simplex tree: " + msg);
      }
    }
    // accumulated rounding in the incremental potentials can hide entering
    // arcs; confirm optimality from freshly computed potentials
    refresh_potentials();
    node_flow_ = exact_node_flows();
    if (!find_entering(threshold)) return true;
  }
  return false;
}

std::vector<TransportSimplex::Arc> TransportSimplex::basic_flows() const {
  const std::vector<double> flow = exact_node_flows();
  std::vector<Arc> out;
  out.reserve(node_num_);
  for (int u = 0; u < node_num_; ++u) {
    const std::int64_t e = pred_[u];
    if (e < 0 || e >= arc_num_) continue;
    out.push_back({static_cast<Eigen::Index>(e / m_), static_cast<Eigen::Index>(e % m_), flow[u]});
  }
  return out;
}

double TransportSimplex::min_reduced_cost() const {
  double best = kInf;
  for (std::int64_t e = 0; e < arc_num_; ++e) best = std::min(best, reduced(e));
  return best;
}

std::string TransportSimplex::check_structure() const {
  std::ostringstream err;
  const int total = node_num_ + 1;
  if (parent_[root_] != -1) err << "root has a parent; ";

  // subtree sizes from the parent array
  std::vector<int> order;
  order.reserve(total);
  std::vector<int> pos(total, -1);
  int u = root_;
  for (int k = 0; k < total; ++k) {
    if (pos[u] != -1) {
      err << "thread revisits node " << u << "; ";
      return err.str();
    }
    pos[u] = k;
    order.push_back(u);
    if (rev_thread_[thread_[u]] != u) err << "rev_thread mismatch at " << u << "; ";
    u = thread_[u];
  }
  if (u != root_) err << "thread does not close at the root; ";

  std::vector<int> size(total, 1);
  for (int k = total - 1; k > 0; --k) {
    const int v = order[k];
    if (parent_[v] < 0) {
      err << "node " << v << " has no parent; ";
      return err.str();
    }
    size[parent_[v]] += size[v];
  }
  for (int v = 0; v < total; ++v) {
    if (size[v] != succ_num_[v]) err << "succ_num wrong at " << v << "; ";
    if (v != root_) {
      const int p = parent_[v];
      if (!(pos[p] < pos[v] && pos[v] <= pos[p] + size[p] - 1))
        err << "thread is not a preorder at " << v << "; ";
      const std::int64_t e = pred_[v];
      const Eigen::Index s = src(e);
      const Eigen::Index t = tgt(e);
      const bool up = s == v && t == p;
      const bool down = s == p && t == v;
      if (!((up && pred_dir_[v] == kUp) || (down && pred_dir_[v] == kDown)))
        err << "pred arc inconsistent at " << v << "; ";
      if (e < arc_num_ && state_[e] != 0) err << "tree arc not marked at " << v << "; ";
    }
    const int last_pos = pos[v] + size[v] - 1;
    if (last_pos < total && order[last_pos] != last_succ_[v])
      err << "last_succ wrong at " << v << "; ";
  }
  return err.str();
}

}  // namespace cpde::detail
