#pragma once

#include <vector>

#include <Eigen/Dense>

namespace cpde {

/// Weighted L2 projection onto nondecreasing sequences by pool-adjacent-
/// violators, written back into `values`. Returns true if anything changed.
template <typename Derived, typename DerivedW>
bool pav_project(const Eigen::MatrixBase<Derived>& values_,
                 const Eigen::MatrixBase<DerivedW>& weights) {
  auto& values = const_cast<Eigen::MatrixBase<Derived>&>(values_);
  const Eigen::Index n = values.size();
  bool sorted = true;
  for (Eigen::Index k = 1; k < n && sorted; ++k) sorted = values(k - 1) <= values(k);
  if (sorted) return false;

  std::vector<double> mean, weight;
  std::vector<Eigen::Index> length;
  mean.reserve(n);
  weight.reserve(n);
  length.reserve(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    mean.push_back(values(k));
    weight.push_back(weights(k));
    length.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
      const std::size_t b = mean.size() - 1;
      const double w = weight[b - 1] + weight[b];
      mean[b - 1] = (weight[b - 1] * mean[b - 1] + weight[b] * mean[b]) / w;
      weight[b - 1] = w;
      length[b - 1] += length[b];
      mean.pop_back();
      weight.pop_back();
      length.pop_back();
    }
  }
  Eigen::Index k = 0;
  for (std::size_t b = 0; b < mean.size(); ++b)
    for (Eigen::Index r = 0; r < length[b]; ++r) values(k++) = mean[b];
  return true;
}

/// Uniform-weight variant.
template <typename Derived>
bool pav_project(const Eigen::MatrixBase<Derived>& values) {
  return pav_project(values, Eigen::VectorXd::Ones(values.size()));
}

}  // namespace cpde
