#pragma once

// Functional summary statistics (PCF, K/L, G/F/J) for stationary point
// patterns observed in a box, pooled estimators over replicates, and global
// rank envelopes with the extreme rank length ordering.
//
// Undefined estimator values are stored as quiet NaN.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "iclust/core.hpp"
#include "iclust/mixture.hpp"
#include "iclust/parallel.hpp"

namespace iclust {

enum class Statistic { kPcf, kK, kL, kG, kF, kJ };

inline std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::kPcf: return "pcf";
    case Statistic::kK: return "K";
    case Statistic::kL: return "L";
    case Statistic::kG: return "G";
    case Statistic::kF: return "F";
    case Statistic::kJ: return "J";
  }
  return "?";
}

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct SummaryCurve {
  Statistic statistic = Statistic::kPcf;
  std::vector<double> r;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return r.size(); }
  [[nodiscard]] bool defined(std::size_t i) const { return std::isfinite(values[i]); }
  [[nodiscard]] bool all_undefined() const {
    return std::none_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

inline void validate_r_grid(const std::vector<double>& r) {
  require(!r.empty(), "r grid must not be empty");
  require(r.front() >= 0.0, "r grid must start at a non-negative distance");
  for (std::size_t i = 1; i < r.size(); ++i) require(r[i] > r[i - 1], "r grid must be strictly increasing");
}

/// `steps` equal steps on [0, r_max]; r_max defaults to a quarter of the shortest side.
inline std::vector<double> default_r_grid(const Window& window, int steps = 512, double r_max = 0.0) {
  require(steps >= 1, "r grid needs at least one step");
  if (r_max <= 0.0) r_max = 0.25 * window.shortest_side();
  std::vector<double> r(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) r[static_cast<std::size_t>(i)] = r_max * i / steps;
  return r;
}

inline double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

inline double epanechnikov(double u, double h) {
  const double t = u / h;
  return std::abs(t) < 1.0 ? 0.75 / h * (1.0 - t * t) : 0.0;
}

/// Default PCF bandwidth 0.15 / sqrt(intensity).
inline double default_bandwidth(double intensity) {
  require(intensity > 0.0, "default_bandwidth: intensity must be > 0");
  return 0.15 / std::sqrt(intensity);
}

namespace detail {

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

/// Calls visit(i, j, t, edge_weight) for unordered pairs i < j with t <= r_max;
/// edge_weight is 1 / |W intersect (W + x_j - x_i)|.
template <class Visit>
void for_close_pairs(const PointPattern& x, const Window& w, double r_max, Visit&& visit) {
  const int d = x.dim();
  std::vector<double> u(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto xi = x[i];
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const auto xj = x[j];
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        u[k] = xj[k] - xi[k];
        s += u[k] * u[k];
      }
      if (s > r_max * r_max) continue;
      const double overlap = w.overlap_volume(u);
      if (overlap <= 0.0) continue;
      visit(i, j, std::sqrt(s), 1.0 / overlap);
    }
  }
}

}  // namespace detail

/// Running sums for ratio-of-sums pooling of translation-corrected
/// second-order estimators over replicates observed in one window shape.
class SecondOrderAccumulator {
 public:
  SecondOrderAccumulator(Statistic statistic, std::vector<double> r_grid, int dim, double bandwidth = 0.0)
      : statistic_(statistic), r_(std::move(r_grid)), dim_(dim), h_(bandwidth),
        num_(r_.size(), 0.0) {
    validate_r_grid(r_);
    require(statistic == Statistic::kPcf || statistic == Statistic::kK || statistic == Statistic::kL,
            "SecondOrderAccumulator: statistic must be pcf, K or L");
    require(statistic != Statistic::kPcf || bandwidth > 0.0, "empirical_pcf: bandwidth must be > 0");
  }

  void add(const PointPattern& x, const Window& w) {
    require(x.dim() == dim_ && w.dim() == dim_, "summary: dimension mismatch");
    const double n = static_cast<double>(x.size());
    denom_ += n * (n - 1.0) / (w.volume() * w.volume());
    if (x.size() < 2) return;
    const double r_max = r_.back() + (statistic_ == Statistic::kPcf ? h_ : 0.0);
    if (statistic_ == Statistic::kPcf) {
      const double area = unit_sphere_area(dim_);
      detail::for_close_pairs(x, w, r_max, [&](std::size_t, std::size_t, double t, double e) {
        // Ordered pairs count twice.
        const double weight = 2.0 * e / area;
        auto lo = std::lower_bound(r_.begin(), r_.end(), t - h_);
        for (auto it = lo; it != r_.end() && *it < t + h_; ++it) {
          const double r = *it;
          if (r <= 0.0) continue;
          num_[static_cast<std::size_t>(it - r_.begin())] +=
              weight * epanechnikov(r - t, h_) / std::pow(r, dim_ - 1);
        }
      });
    } else {
      std::vector<double> inc(r_.size(), 0.0);
      detail::for_close_pairs(x, w, r_max, [&](std::size_t, std::size_t, double t, double e) {
        auto it = std::lower_bound(r_.begin(), r_.end(), t);
        if (it != r_.end()) inc[static_cast<std::size_t>(it - r_.begin())] += 2.0 * e;
      });
      double run = 0.0;
      for (std::size_t k = 0; k < r_.size(); ++k) {
        run += inc[k];
        num_[k] += run;
      }
    }
  }

  [[nodiscard]] SummaryCurve curve() const {
    SummaryCurve out{statistic_, r_, std::vector<double>(r_.size(), kUndefined)};
    if (!(denom_ > 0.0)) return out;
    const double omega = unit_ball_volume(dim_);
    for (std::size_t k = 0; k < r_.size(); ++k) {
      const double v = num_[k] / denom_;
      switch (statistic_) {
        case Statistic::kPcf:
          if (r_[k] > 0.0) out.values[k] = v;
          break;
        case Statistic::kK: out.values[k] = v; break;
        default: out.values[k] = std::pow(v / omega, 1.0 / dim_); break;
      }
    }
    return out;
  }

 private:
  Statistic statistic_;
  std::vector<double> r_;
  int dim_;
  double h_;
  std::vector<double> num_;
  double denom_ = 0.0;
};

/// Kernel estimate of g with the Epanechnikov kernel and translation edge
/// correction, normalised by n(n-1)/|W|^2. Undefined at r = 0 and for n < 2.
inline SummaryCurve empirical_pcf(const PointPattern& x, const Window& w, double bandwidth,
                                  const std::vector<double>& r_grid) {
  SecondOrderAccumulator acc(Statistic::kPcf, r_grid, x.dim(), bandwidth);
  acc.add(x, w);
  return acc.curve();
}

inline SummaryCurve pooled_pcf(const std::vector<PointPattern>& xs, const Window& w, double bandwidth,
                               const std::vector<double>& r_grid) {
  SecondOrderAccumulator acc(Statistic::kPcf, r_grid, w.dim(), bandwidth);
  for (const auto& x : xs) acc.add(x, w);
  return acc.curve();
}

/// Translation-corrected Ripley K.
inline SummaryCurve k_function(const PointPattern& x, const Window& w, const std::vector<double>& r_grid) {
  SecondOrderAccumulator acc(Statistic::kK, r_grid, x.dim());
  acc.add(x, w);
  return acc.curve();
}

/// L(r) = (K(r) / omega_d)^(1/d).
inline SummaryCurve l_function(const PointPattern& x, const Window& w, const std::vector<double>& r_grid) {
  SecondOrderAccumulator acc(Statistic::kL, r_grid, x.dim());
  acc.add(x, w);
  return acc.curve();
}

inline SummaryCurve pooled_l_function(const std::vector<PointPattern>& xs, const Window& w,
                                      const std::vector<double>& r_grid) {
  SecondOrderAccumulator acc(Statistic::kL, r_grid, w.dim());
  for (const auto& x : xs) acc.add(x, w);
  return acc.curve();
}

/// Reduced-sample (border corrected) G and F, and J = (1 - G) / (1 - F).
class NearestNeighbourAccumulator {
 public:
  NearestNeighbourAccumulator(std::vector<double> r_grid, int dim, int f_grid_per_axis = 64)
      : r_(std::move(r_grid)), dim_(dim), f_grid_(f_grid_per_axis),
        g_num_(r_.size(), 0.0), g_den_(r_.size(), 0.0), f_num_(r_.size(), 0.0), f_den_(r_.size(), 0.0) {
    validate_r_grid(r_);
    require(dim == 2, "J-function estimator is implemented for d = 2");
    require(f_grid_per_axis >= 2, "J-function: empty-space grid needs >= 2 points per axis");
  }

  void add(const PointPattern& x, const Window& w) {
    require(x.dim() == dim_ && w.dim() == dim_, "summary: dimension mismatch");
    if (x.empty()) return;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (j != i) nn = std::min(nn, detail::distance(x[i], x[j]));
      }
      record(g_num_, g_den_, nn, w.boundary_distance(x[i]));
    }
    std::array<double, 2> u{};
    for (int a = 0; a < f_grid_; ++a) {
      u[0] = w.lower()[0] + (a + 0.5) * w.side(0) / f_grid_;
      for (int b = 0; b < f_grid_; ++b) {
        u[1] = w.lower()[1] + (b + 0.5) * w.side(1) / f_grid_;
        double e = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.size(); ++j) e = std::min(e, detail::distance(u, x[j]));
        record(f_num_, f_den_, e, w.boundary_distance(u));
      }
    }
  }

  [[nodiscard]] SummaryCurve curve(Statistic s) const {
    SummaryCurve out{s, r_, std::vector<double>(r_.size(), kUndefined)};
    for (std::size_t k = 0; k < r_.size(); ++k) {
      const double g = g_den_[k] > 0.0 ? g_num_[k] / g_den_[k] : kUndefined;
      const double f = f_den_[k] > 0.0 ? f_num_[k] / f_den_[k] : kUndefined;
      switch (s) {
        case Statistic::kG: out.values[k] = g; break;
        case Statistic::kF: out.values[k] = f; break;
        case Statistic::kJ:
          if (std::isfinite(g) && std::isfinite(f) && f < 1.0) out.values[k] = (1.0 - g) / (1.0 - f);
          break;
        default: throw DomainError("NearestNeighbourAccumulator: statistic must be G, F or J");
      }
    }
    return out;
  }

 private:
  void record(std::vector<double>& num, std::vector<double>& den, double dist, double border) const {
    for (std::size_t k = 0; k < r_.size(); ++k) {
      if (border < r_[k]) break;
      den[k] += 1.0;
      if (dist <= r_[k]) num[k] += 1.0;
    }
  }

  std::vector<double> r_;
  int dim_;
  int f_grid_;
  std::vector<double> g_num_, g_den_, f_num_, f_den_;
};

inline SummaryCurve j_function(const PointPattern& x, const Window& w, const std::vector<double>& r_grid,
                               int f_grid_per_axis = 64) {
  NearestNeighbourAccumulator acc(r_grid, x.dim(), f_grid_per_axis);
  acc.add(x, w);
  return acc.curve(Statistic::kJ);
}

// ---------------------------------------------------------------------------
// Theory curves matched to the estimators

/// Expected value of the kernel PCF estimator for a process with reduced PCF
/// `kernel`: int k_h(r - t) (t / r)^(d-1) g(t) dt over t >= 0.
inline double smoothed_pcf_expectation(const MixtureKernel& kernel, double bandwidth, double r) {
  require(bandwidth > 0.0, "smoothed_pcf_expectation: bandwidth must be > 0");
  if (r <= 0.0) return kUndefined;
  // Composite Gauss-Legendre, 8 panels of 8 nodes.
  static constexpr std::array<double, 8> node{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                              -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                              0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> weight{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                0.2223810344533745, 0.1012285362903763};
  const int d = kernel.dim();
  const double a = std::max(0.0, r - bandwidth);
  const double b = r + bandwidth;
  const int panels = 8;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + (b - a) * p / panels;
    const double hi = a + (b - a) * (p + 1) / panels;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (std::size_t k = 0; k < node.size(); ++k) {
      const double t = mid + half * node[k];
      sum += half * weight[k] * epanechnikov(r - t, bandwidth) * std::pow(t / r, d - 1) * (1.0 + kernel(t));
    }
  }
  return sum;
}

inline SummaryCurve smoothed_pcf_curve(const MixtureKernel& kernel, double bandwidth,
                                       const std::vector<double>& r_grid) {
  SummaryCurve out{Statistic::kPcf, r_grid, std::vector<double>(r_grid.size())};
  for (std::size_t k = 0; k < r_grid.size(); ++k) {
    out.values[k] = smoothed_pcf_expectation(kernel, bandwidth, r_grid[k]);
  }
  return out;
}

/// int_W int_W (g(x - y) - 1) dx dy for a box window, i.e. the excess of
/// E[N(N-1)] / rho^2 over |W|^2. Needs an integrable kernel (constant = 0).
inline double window_pair_excess(const MixtureKernel& kernel, const Window& w) {
  require(kernel.dim() == w.dim(), "window_pair_excess: dimension mismatch");
  require(kernel.constant() == 0.0, "window_pair_excess: kernel must be integrable");
  // int phi_v(t) (L - |t|)_+ dt over the real line.
  auto axis = [](double side, double v) {
    const double s = std::sqrt(v);
    const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi * v);
    const double phil = phi0 * std::exp(-side * side / (2.0 * v));
    const double half_mass = 0.5 * std::erf(side / (s * std::sqrt(2.0)));
    return 2.0 * (side * half_mass - v * (phi0 - phil));
  };
  double total = kernel.dirac() * w.volume();
  for (const auto& c : kernel.components()) {
    double prod = c.weight;
    for (int k = 0; k < w.dim(); ++k) prod *= axis(w.side(k), c.variance);
    total += prod;
  }
  return total;
}

/// Ratio-of-expectations approximation to the mean of the ratio-of-sums
/// pooled PCF estimator: the smoothed curve times |W|^2 / E[N(N-1)] rho^-2.
inline SummaryCurve expected_pooled_pcf_curve(const MixtureKernel& kernel, double bandwidth,
                                              const std::vector<double>& r_grid, const Window& w) {
  SummaryCurve out = smoothed_pcf_curve(kernel, bandwidth, r_grid);
  const double v2 = w.volume() * w.volume();
  const double factor = v2 / (v2 + window_pair_excess(kernel, w));
  for (auto& v : out.values) v *= factor;
  return out;
}

/// Theoretical L(r) for g - 1 = kernel in d = 2 (Gaussian components integrate in closed form).
inline SummaryCurve theory_l_curve(const MixtureKernel& kernel, const std::vector<double>& r_grid) {
  require(kernel.dim() == 2, "theory_l_curve: implemented for d = 2");
  require(kernel.constant() == 0.0, "theory_l_curve: kernel must be integrable");
  SummaryCurve out{Statistic::kL, r_grid, std::vector<double>(r_grid.size())};
  for (std::size_t k = 0; k < r_grid.size(); ++k) {
    const double r = r_grid[k];
    double kf = std::numbers::pi * r * r;
    for (const auto& c : kernel.components()) kf += c.weight * (1.0 - std::exp(-r * r / (2.0 * c.variance)));
    out.values[k] = std::sqrt(std::max(0.0, kf) / std::numbers::pi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global rank envelope

struct EnvelopeResult {
  std::vector<double> r;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> observed;
  bool inside = true;     // p_value > 1 - level
  bool exits_band = false;  // observed leaves [lower, upper] somewhere
  double level = 0.95;
  double p_value = 1.0;  // extreme rank length p-value of the observed curve
  std::size_t dropped = 0;  // r values removed because some curve was undefined
  std::string measure = "erl";
};

/// Global extreme rank length envelope at coverage `level`; r values where
/// any curve is undefined are removed.
inline EnvelopeResult global_rank_envelope(const SummaryCurve& observed,
                                           const std::vector<SummaryCurve>& simulations,
                                           double level = 0.95) {
  require(simulations.size() >= 2, "global_rank_envelope: at least two simulations required");
  require(level > 0.0 && level < 1.0, "global_rank_envelope: level must lie in (0,1)");
  for (const auto& s : simulations) {
    require(s.r == observed.r, "global_rank_envelope: r grids differ");
  }
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    bool ok = observed.defined(k);
    for (const auto& s : simulations) ok = ok && s.defined(k);
    if (ok) keep.push_back(k);
  }
  EnvelopeResult out;
  out.level = level;
  out.dropped = observed.size() - keep.size();
  if (keep.empty()) throw NumericError("global_rank_envelope: no r value where all curves are defined");

  const std::size_t n_curves = simulations.size() + 1;  // index 0 is the observed curve
  auto value = [&](std::size_t curve, std::size_t k) {
    return curve == 0 ? observed.values[k] : simulations[curve - 1].values[k];
  };
  const std::size_t m = keep.size();
  // Pointwise two-sided ranks.
  std::vector<std::vector<std::uint32_t>> ranks(n_curves, std::vector<std::uint32_t>(m));
  std::vector<double> col(n_curves);
  std::vector<double> sorted(n_curves);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n_curves; ++i) col[i] = value(i, keep[c]);
    sorted = col;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n_curves; ++i) {
      const auto below = std::upper_bound(sorted.begin(), sorted.end(), col[i]) - sorted.begin();
      const auto above = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), col[i]);
      ranks[i][c] = static_cast<std::uint32_t>(std::min(below, above));
    }
  }
  for (auto& v : ranks) std::sort(v.begin(), v.end());
  // Extreme rank length ordering: lexicographically smaller rank vectors are more extreme.
  std::vector<std::size_t> order(n_curves);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranks[a] < ranks[b]; });
  // measure[i] = #{j : ranks[j] <= ranks[i]} / n_curves
  std::vector<double> measure(n_curves);
  for (std::size_t pos = 0; pos < n_curves;) {
    std::size_t end = pos + 1;
    while (end < n_curves && ranks[order[end]] == ranks[order[pos]]) ++end;
    for (std::size_t t = pos; t < end; ++t) measure[order[t]] = static_cast<double>(end) / n_curves;
    pos = end;
  }
  out.p_value = measure[0];
  std::vector<double> sorted_measure = measure;
  std::sort(sorted_measure.begin(), sorted_measure.end());
  const auto k_alpha = static_cast<std::size_t>(std::floor((1.0 - level) * n_curves));
  const double threshold = sorted_measure[std::min(k_alpha, n_curves - 1)];

  out.r.resize(m);
  out.lower.assign(m, std::numeric_limits<double>::infinity());
  out.upper.assign(m, -std::numeric_limits<double>::infinity());
  out.observed.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    out.r[c] = observed.r[keep[c]];
    out.observed[c] = observed.values[keep[c]];
  }
  for (std::size_t i = 1; i < n_curves; ++i) {
    if (measure[i] < threshold) continue;
    for (std::size_t c = 0; c < m; ++c) {
      out.lower[c] = std::min(out.lower[c], value(i, keep[c]));
      out.upper[c] = std::max(out.upper[c], value(i, keep[c]));
    }
  }
  // Verdict from the p-value. With tied values (discrete summaries) the band
  // alone over-rejects.
  out.inside = out.p_value > 1.0 - level;
  for (std::size_t c = 0; c < m; ++c) {
    out.exits_band = out.exits_band || out.observed[c] < out.lower[c] || out.observed[c] > out.upper[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_number(std::ostream& os, double v) {
  if (!std::isfinite(v)) {
    os << "NA";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

inline void write_curve_csv(std::ostream& os, const SummaryCurve& curve) {
  os << "r,value\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    write_number(os, curve.r[k]);
    os << ',';
    write_number(os, curve.values[k]);
    os << '\n';
  }
}

inline void write_envelope_csv(std::ostream& os, const EnvelopeResult& env) {
  os << "r,lo,hi,observed\n";
  for (std::size_t k = 0; k < env.r.size(); ++k) {
    write_number(os, env.r[k]);
    os << ',';
    write_number(os, env.lower[k]);
    os << ',';
    write_number(os, env.upper[k]);
    os << ',';
    write_number(os, env.observed[k]);
    os << '\n';
  }
}

}  // namespace iclust
