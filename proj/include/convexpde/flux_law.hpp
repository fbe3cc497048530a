#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpde {

/// Cubic flux F(u) = c3 u^3 + c2 u^2 + c1 u on the state interval [0, 1].
/// Covers Burgers (u^2 / 2), linear advection and concave-convex laws.
class FluxLaw {
 public:
  FluxLaw() = default;
  FluxLaw(double c3, double c2, double c1, std::string name = "cubic");

  static FluxLaw burgers();
  static FluxLaw linear(double c);
  static FluxLaw concave_convex(double c3, double c2, double c1);
  /// "burgers", "linear c", "concave-convex c3 c2 c1"
  static FluxLaw parse(const std::string& descriptor);

  double F(double u) const { return ((c3_ * u + c2_) * u + c1_) * u; }
  double Fprime(double u) const { return (3 * c3_ * u + 2 * c2_) * u + c1_; }

  /// max |F'| on [0, 1].
  double lipschitz_bound() const { return lipschitz_; }
  Eigen::VectorXd derivative_samples(const Eigen::VectorXd& levels) const;

  /// Exact extrema of F over [min(a,b), max(a,b)].
  double min_on(double a, double b) const;
  double max_on(double a, double b) const;
  /// Godunov flux for the Riemann problem (left, right).
  double godunov(double left, double right) const {
    return left <= right ? min_on(left, right) : max_on(right, left);
  }

  bool is_linear() const { return c3_ == 0.0 && c2_ == 0.0; }
  const std::string& name() const { return name_; }
  Eigen::Vector3d coefficients() const { return {c3_, c2_, c1_}; }

 private:
  std::vector<double> critical_points() const;  // roots of F' strictly inside (0, 1)

  double c3_ = 0.0, c2_ = 0.0, c1_ = 0.0;
  double lipschitz_ = 0.0;
  std::string name_ = "zero";
};

}  // namespace cpde
