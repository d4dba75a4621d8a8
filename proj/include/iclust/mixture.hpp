#pragma once

// Isotropic Gaussian mixture kernels with an optional constant and an atom at
// the origin. Reduced pair correlation functions of every model with Gaussian
// ingredients stay inside this family, and convolution acts on it in closed
// form: the atom is the identity, Gaussian variances add, and a constant
// picks up the total mass of the other factor.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "iclust/errors.hpp"

namespace iclust {

struct GaussianComponent {
  double weight;
  double variance;  // per coordinate

  friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;
};

/// N_d(s^2) density evaluated at distance r from the origin.
inline double isotropic_gaussian_density(double r, double variance, int dim) {
  return std::pow(2.0 * std::numbers::pi * variance, -0.5 * dim) *
         std::exp(-r * r / (2.0 * variance));
}

class MixtureKernel {
 public:
  static constexpr double kDefaultPrune = 1e-14;

  explicit MixtureKernel(int dim = 2) : dim_(dim) {
    require(dim >= 1, "MixtureKernel: dimension must be positive");
  }

  static MixtureKernel zero(int dim = 2) { return MixtureKernel(dim); }

  static MixtureKernel delta(double weight, int dim = 2) {
    MixtureKernel k(dim);
    k.dirac_ = weight;
    return k;
  }

  static MixtureKernel gaussian(double weight, double variance, int dim = 2) {
    MixtureKernel k(dim);
    k.add_gaussian(weight, variance);
    return k;
  }

  static MixtureKernel constant_term(double value, int dim = 2) {
    MixtureKernel k(dim);
    k.constant_ = value;
    return k;
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double constant() const { return constant_; }
  [[nodiscard]] double dirac() const { return dirac_; }
  [[nodiscard]] const std::vector<GaussianComponent>& components() const { return components_; }

  void set_constant(double c) { constant_ = c; }
  void set_dirac(double w) { dirac_ = w; }

  void add_gaussian(double weight, double variance) {
    require(variance > 0.0 && std::isfinite(variance),
            "MixtureKernel: component variance must be positive");
    components_.push_back({weight, variance});
  }

  /// Sum of Gaussian weights; the integral of the kernel when constant and atom vanish.
  [[nodiscard]] double total_weight() const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight;
    return s;
  }

  [[nodiscard]] double total_abs_weight() const {
    double s = std::abs(dirac_);
    for (const auto& c : components_) s += std::abs(c.weight);
    return s;
  }

  /// Mass of the integrable part (atom plus Gaussians).
  [[nodiscard]] double integrable_mass() const { return dirac_ + total_weight(); }

  [[nodiscard]] bool is_zero() const {
    return constant_ == 0.0 && dirac_ == 0.0 && components_.empty();
  }

  MixtureKernel& operator+=(const MixtureKernel& other) {
    require(other.dim_ == dim_, "MixtureKernel: dimension mismatch");
    constant_ += other.constant_;
    dirac_ += other.dirac_;
    components_.insert(components_.end(), other.components_.begin(), other.components_.end());
    return *this;
  }

  MixtureKernel& operator*=(double s) {
    constant_ *= s;
    dirac_ *= s;
    for (auto& c : components_) c.weight *= s;
    return *this;
  }

  friend MixtureKernel operator+(MixtureKernel a, const MixtureKernel& b) { return a += b; }
  friend MixtureKernel operator*(MixtureKernel a, double s) { return a *= s; }
  friend MixtureKernel operator*(double s, MixtureKernel a) { return a *= s; }

  /// Merges components with equal variance (relative 1e-12) and drops those
  /// whose |weight| is below prune_tol times the total absolute weight.
  MixtureKernel& normalize(double prune_tol = kDefaultPrune) {
    std::sort(components_.begin(), components_.end(),
              [](const auto& a, const auto& b) { return a.variance < b.variance; });
    std::vector<GaussianComponent> merged;
    merged.reserve(components_.size());
    for (const auto& c : components_) {
      if (!merged.empty() &&
          std::abs(merged.back().variance - c.variance) <= 1e-12 * c.variance) {
        merged.back().weight += c.weight;
      } else {
        merged.push_back(c);
      }
    }
    double scale = std::abs(dirac_);
    for (const auto& c : merged) scale += std::abs(c.weight);
    const double cut = prune_tol * scale;
    std::erase_if(merged, [cut](const auto& c) { return std::abs(c.weight) <= cut; });
    components_ = std::move(merged);
    return *this;
  }

  /// Value at distance r > 0 (the atom does not contribute away from the origin).
  [[nodiscard]] double operator()(double r) const {
    double v = constant_;
    for (const auto& c : components_) v += c.weight * isotropic_gaussian_density(r, c.variance, dim_);
    return v;
  }

  friend bool operator==(const MixtureKernel&, const MixtureKernel&) = default;

 private:
  int dim_;
  double constant_ = 0.0;
  double dirac_ = 0.0;
  std::vector<GaussianComponent> components_;
};

/// Convolution of two mixture kernels.
inline MixtureKernel mixture_convolve(const MixtureKernel& a, const MixtureKernel& b,
                                      double prune_tol = MixtureKernel::kDefaultPrune) {
  require(a.dim() == b.dim(), "mixture_convolve: dimension mismatch");
  if (a.constant() != 0.0 && b.constant() != 0.0) {
    throw DomainError("mixture_convolve: convolution of two non-zero constants is not integrable");
  }
  MixtureKernel out(a.dim());
  out.set_constant(a.constant() * b.integrable_mass() + b.constant() * a.integrable_mass());
  out.set_dirac(a.dirac() * b.dirac());
  for (const auto& ca : a.components()) {
    if (b.dirac() != 0.0) out.add_gaussian(ca.weight * b.dirac(), ca.variance);
    for (const auto& cb : b.components()) {
      out.add_gaussian(ca.weight * cb.weight, ca.variance + cb.variance);
    }
  }
  if (a.dirac() != 0.0) {
    for (const auto& cb : b.components()) out.add_gaussian(a.dirac() * cb.weight, cb.variance);
  }
  out.normalize(prune_tol);
  return out;
}

/// Reduced PCF value at distance r. The atom is only an error at r = 0.
inline double pcf_evaluate(const MixtureKernel& kernel, double r) {
  require(r >= 0.0, "pcf_evaluate: distance must be non-negative");
  if (r == 0.0 && kernel.dirac() != 0.0) {
    throw EvaluationError("pcf_evaluate: kernel has an atom at the origin");
  }
  return kernel(r);
}

}  // namespace iclust
