#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iclust/errors.hpp"
#include "iclust/random.hpp"

namespace iclust {

/// Finite set of points in R^d stored as a flat coordinate array.
class PointPattern {
 public:
  explicit PointPattern(int dim = 2) : dim_(dim) {
    require(dim >= 1, "PointPattern: dimension must be positive");
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
  [[nodiscard]] bool empty() const { return coords_.empty(); }

  [[nodiscard]] std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  void push_back(std::span<const double> point) {
    require(static_cast<int>(point.size()) == dim_, "PointPattern: dimension mismatch");
    for (double v : point) {
      require(std::isfinite(v), "PointPattern: non-finite coordinate");
    }
    coords_.insert(coords_.end(), point.begin(), point.end());
  }

  void append(const PointPattern& other) {
    require(other.dim_ == dim_, "PointPattern: dimension mismatch");
    coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
  }

  void reserve(std::size_t n) { coords_.reserve(n * static_cast<std::size_t>(dim_)); }
  void clear() { coords_.clear(); }

  [[nodiscard]] const std::vector<double>& coordinates() const { return coords_; }

  friend bool operator==(const PointPattern&, const PointPattern&) = default;

 private:
  int dim_;
  std::vector<double> coords_;
};

/// Axis-aligned box.
class Window {
 public:
  Window(std::vector<double> lower, std::vector<double> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    require(!lower_.empty() && lower_.size() == upper_.size(), "Window: corner dimension mismatch");
    for (std::size_t k = 0; k < lower_.size(); ++k) {
      require(std::isfinite(lower_[k]) && std::isfinite(upper_[k]) && lower_[k] < upper_[k],
              "Window: lower corner must be below upper corner");
    }
  }

  static Window unit(int dim = 2) {
    return {std::vector<double>(static_cast<std::size_t>(dim), 0.0),
            std::vector<double>(static_cast<std::size_t>(dim), 1.0)};
  }

  [[nodiscard]] int dim() const { return static_cast<int>(lower_.size()); }
  [[nodiscard]] const std::vector<double>& lower() const { return lower_; }
  [[nodiscard]] const std::vector<double>& upper() const { return upper_; }
  [[nodiscard]] double side(int k) const { return upper_[k] - lower_[k]; }

  [[nodiscard]] double volume() const {
    double v = 1.0;
    for (int k = 0; k < dim(); ++k) v *= side(k);
    return v;
  }

  [[nodiscard]] double shortest_side() const {
    double s = side(0);
    for (int k = 1; k < dim(); ++k) s = std::min(s, side(k));
    return s;
  }

  [[nodiscard]] bool contains(std::span<const double> x) const {
    for (int k = 0; k < dim(); ++k) {
      if (x[k] < lower_[k] || x[k] > upper_[k]) return false;
    }
    return true;
  }

  /// Bounding box of the r-neighbourhood {x : dist(x, W) <= r}.
  [[nodiscard]] Window dilate(double r) const {
    require(r >= 0.0 && std::isfinite(r), "Window::dilate: radius must be finite and non-negative");
    auto lo = lower_;
    auto hi = upper_;
    for (auto& v : lo) v -= r;
    for (auto& v : hi) v += r;
    return {std::move(lo), std::move(hi)};
  }

  /// Volume of W intersected with W shifted by u.
  [[nodiscard]] double overlap_volume(std::span<const double> u) const {
    double v = 1.0;
    for (int k = 0; k < dim(); ++k) v *= std::max(0.0, side(k) - std::abs(u[k]));
    return v;
  }

  /// Distance from an interior point to the boundary.
  [[nodiscard]] double boundary_distance(std::span<const double> x) const {
    double b = std::numeric_limits<double>::infinity();
    for (int k = 0; k < dim(); ++k) b = std::min({b, x[k] - lower_[k], upper_[k] - x[k]});
    return b;
  }

  [[nodiscard]] Window translated(std::span<const double> shift) const {
    auto lo = lower_;
    auto hi = upper_;
    for (int k = 0; k < dim(); ++k) {
      lo[k] += shift[k];
      hi[k] += shift[k];
    }
    return {std::move(lo), std::move(hi)};
  }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

inline PointPattern clip(const PointPattern& pattern, const Window& window) {
  PointPattern out(pattern.dim());
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (window.contains(pattern[i])) out.push_back(pattern[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Offspring count laws

struct PoissonCount {
  double mean;
};
struct BernoulliCount {
  double prob;
};
/// Gamma-mixed Poisson with mean `mean` and variance mean + mean^2 / dispersion.
struct NegativeBinomialCount {
  double mean;
  double dispersion;
};
struct FixedCount {
  long k;
};

class CountDistribution {
 public:
  using Law = std::variant<PoissonCount, BernoulliCount, NegativeBinomialCount, FixedCount>;

  CountDistribution() : law_(PoissonCount{0.0}) {}
  CountDistribution(Law law) : law_(law) { validate(); }  // NOLINT(google-explicit-constructor)

  static CountDistribution poisson(double mean) { return {PoissonCount{mean}}; }
  static CountDistribution bernoulli(double p) { return {BernoulliCount{p}}; }
  static CountDistribution negative_binomial(double mean, double dispersion) {
    return {NegativeBinomialCount{mean, dispersion}};
  }
  /// Negative binomial with mean `mean` and cluster dispersion constant `c` > 1.
  static CountDistribution negative_binomial_with_c(double mean, double c) {
    require(c > 1.0, "negative binomial requires c > 1");
    return {NegativeBinomialCount{mean, 1.0 / (c - 1.0)}};
  }
  static CountDistribution fixed(long k) { return {FixedCount{k}}; }

  [[nodiscard]] const Law& law() const { return law_; }

  [[nodiscard]] double mean() const {
    return std::visit(
        [](const auto& l) -> double {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, PoissonCount>) return l.mean;
          if constexpr (std::is_same_v<T, BernoulliCount>) return l.prob;
          if constexpr (std::is_same_v<T, NegativeBinomialCount>) return l.mean;
          if constexpr (std::is_same_v<T, FixedCount>) return static_cast<double>(l.k);
        },
        law_);
  }

  [[nodiscard]] double variance() const {
    return std::visit(
        [](const auto& l) -> double {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, PoissonCount>) return l.mean;
          if constexpr (std::is_same_v<T, BernoulliCount>) return l.prob * (1.0 - l.prob);
          if constexpr (std::is_same_v<T, NegativeBinomialCount>)
            return l.mean + l.mean * l.mean / l.dispersion;
          if constexpr (std::is_same_v<T, FixedCount>) return 0.0;
        },
        law_);
  }

  friend bool operator==(const CountDistribution& a, const CountDistribution& b) {
    return a.law_.index() == b.law_.index() && a.mean() == b.mean() && a.variance() == b.variance();
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, PoissonCount>) {
            require(l.mean >= 0.0 && std::isfinite(l.mean), "Poisson count: mean must be >= 0");
          } else if constexpr (std::is_same_v<T, BernoulliCount>) {
            require(l.prob >= 0.0 && l.prob <= 1.0, "Bernoulli count: probability outside [0,1]");
          } else if constexpr (std::is_same_v<T, NegativeBinomialCount>) {
            require(l.mean >= 0.0 && std::isfinite(l.mean), "negative binomial: mean must be >= 0");
            require(l.dispersion > 0.0 && std::isfinite(l.dispersion),
                    "negative binomial: dispersion must be > 0");
          } else {
            require(l.k >= 0, "fixed count must be >= 0");
          }
        },
        law_);
  }

  Law law_;
};

/// c = E[N(N-1)] / beta^2 = (nu + beta^2 - beta) / beta^2, and 0 when beta = 0.
inline double cluster_dispersion_c(double beta, double nu) {
  require(beta >= 0.0 && nu >= 0.0, "cluster_dispersion_c: mean and variance must be >= 0");
  if (beta == 0.0) return 0.0;
  return (nu + beta * beta - beta) / (beta * beta);
}

inline double cluster_dispersion_c(const CountDistribution& dist) {
  return cluster_dispersion_c(dist.mean(), dist.variance());
}

inline long sample_offspring_count(const CountDistribution& dist, RandomStream& rng) {
  return std::visit(
      [&rng](const auto& l) -> long {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PoissonCount>) {
          if (l.mean == 0.0) return 0;
          return std::poisson_distribution<long>(l.mean)(rng);
        } else if constexpr (std::is_same_v<T, BernoulliCount>) {
          return rng.bernoulli(l.prob) ? 1 : 0;
        } else if constexpr (std::is_same_v<T, NegativeBinomialCount>) {
          if (l.mean == 0.0) return 0;
          const double lambda =
              std::gamma_distribution<double>(l.dispersion, l.mean / l.dispersion)(rng);
          if (lambda <= 0.0) return 0;
          return std::poisson_distribution<long>(lambda)(rng);
        } else {
          return l.k;
        }
      },
      dist.law());
}

// ---------------------------------------------------------------------------
// Displacement densities

struct IsotropicGaussian {
  double variance;  // per coordinate
};
struct UniformBall {
  double radius;
};

class DisplacementDensity {
 public:
  using Kind = std::variant<IsotropicGaussian, UniformBall>;

  DisplacementDensity(Kind kind, int dim) : kind_(kind), dim_(dim) {
    require(dim >= 1, "displacement density: dimension must be positive");
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, IsotropicGaussian>) {
            require(k.variance > 0.0 && std::isfinite(k.variance),
                    "isotropic Gaussian displacement requires sigma > 0");
          } else {
            require(k.radius > 0.0 && std::isfinite(k.radius),
                    "uniform ball displacement requires radius > 0");
          }
        },
        kind_);
  }

  static DisplacementDensity gaussian_sd(double sigma, int dim = 2) {
    require(sigma > 0.0, "isotropic Gaussian displacement requires sigma > 0");
    return {IsotropicGaussian{sigma * sigma}, dim};
  }
  static DisplacementDensity ball(double radius, int dim = 2) { return {UniformBall{radius}, dim}; }

  [[nodiscard]] const Kind& kind() const { return kind_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] bool is_gaussian() const { return std::holds_alternative<IsotropicGaussian>(kind_); }

  /// Length scale used by dilation rules: sigma for the Gaussian, the radius for the ball.
  [[nodiscard]] double scale() const {
    if (const auto* g = std::get_if<IsotropicGaussian>(&kind_)) return std::sqrt(g->variance);
    return std::get<UniformBall>(kind_).radius;
  }

  [[nodiscard]] double gaussian_variance() const {
    const auto* g = std::get_if<IsotropicGaussian>(&kind_);
    require(g != nullptr, "displacement density is not Gaussian");
    return g->variance;
  }

  friend bool operator==(const DisplacementDensity& a, const DisplacementDensity& b) {
    return a.dim_ == b.dim_ && a.kind_.index() == b.kind_.index() && a.scale() == b.scale();
  }

 private:
  Kind kind_;
  int dim_;
};

/// Writes one displacement draw into `out` (size dim).
inline void sample_displacement(const DisplacementDensity& f, RandomStream& rng,
                                std::span<double> out) {
  const int d = f.dim();
  if (const auto* g = std::get_if<IsotropicGaussian>(&f.kind())) {
    const double s = std::sqrt(g->variance);
    for (int k = 0; k < d; ++k) out[k] = s * rng.normal();
    return;
  }
  // Uniform in the ball: Gaussian direction, radius R * U^(1/d).
  const double radius = std::get<UniformBall>(f.kind()).radius;
  double norm2 = 0.0;
  for (int k = 0; k < d; ++k) {
    out[k] = rng.normal();
    norm2 += out[k] * out[k];
  }
  const double scale = radius * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(norm2);
  for (int k = 0; k < d; ++k) out[k] *= scale;
}

inline std::vector<double> sample_displacement(const DisplacementDensity& f, RandomStream& rng) {
  std::vector<double> out(static_cast<std::size_t>(f.dim()));
  sample_displacement(f, rng, out);
  return out;
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

}  // namespace iclust
