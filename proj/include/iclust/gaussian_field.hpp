#pragma once

// Stationary Gaussian random fields with a Gaussian covariance on a periodic
// grid, by spectral synthesis with FFTW. The grid covers the target window
// plus a margin of five correlation lengths, so periodic wrap-around leaves
// correlations inside the window untouched up to exp(-25).

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "iclust/core.hpp"

namespace iclust {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

inline int fft_friendly_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

}  // namespace detail

/// Real field sampled at the nodes of a regular grid anchored at `origin`.
struct GridField {
  std::vector<double> origin;
  std::vector<double> spacing;
  std::vector<int> shape;  // nodes per axis, axis 0 fastest
  std::vector<double> values;

  [[nodiscard]] double at(int i, int j) const {
    return values[static_cast<std::size_t>(j) * static_cast<std::size_t>(shape[0]) +
                  static_cast<std::size_t>(i)];
  }

  /// Bilinear interpolation between the four surrounding nodes.
  [[nodiscard]] double interpolate(std::span<const double> x) const {
    const double gx = (x[0] - origin[0]) / spacing[0];
    const double gy = (x[1] - origin[1]) / spacing[1];
    const int i = std::clamp(static_cast<int>(std::floor(gx)), 0, shape[0] - 2);
    const int j = std::clamp(static_cast<int>(std::floor(gy)), 0, shape[1] - 2);
    const double tx = gx - i;
    const double ty = gy - j;
    return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
           (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
  }
};

/// Covariance variance * exp(-|x|^2 / scale^2) in d = 2.
struct GaussianCovariance {
  double variance;
  double scale;

  [[nodiscard]] double operator()(double r) const {
    return variance * std::exp(-r * r / (scale * scale));
  }
  /// Fourier transform with the exp(-2 pi i w.x) convention.
  [[nodiscard]] double spectral_density(double w2) const {
    return variance * std::numbers::pi * scale * scale *
           std::exp(-std::numbers::pi * std::numbers::pi * scale * scale * w2);
  }
};

/// Draws `count` independent fields covering `window` with grid spacing at
/// most `max_spacing`. Fields come in pairs from the real and imaginary parts
/// of one complex transform.
inline std::vector<GridField> synthesize_gaussian_fields(const GaussianCovariance& cov,
                                                         const Window& window,
                                                         double max_spacing, int count,
                                                         RandomStream rng) {
  require(window.dim() == 2, "Gaussian field synthesis is implemented for d = 2");
  require(cov.variance >= 0.0 && cov.scale > 0.0, "Gaussian field: invalid covariance");
  require(max_spacing > 0.0 && count >= 0, "Gaussian field: invalid grid settings");
  const double margin = 5.0 * cov.scale;
  std::array<int, 2> n{};
  std::array<double, 2> period{};
  std::array<double, 2> h{};
  for (int k = 0; k < 2; ++k) {
    const double extent = window.side(k) + margin;
    n[k] = detail::fft_friendly_size(static_cast<int>(std::ceil(extent / max_spacing)) + 1);
    h[k] = extent / (n[k] - 1);
    period[k] = h[k] * n[k];
  }
  const std::size_t total = static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]);
  const double cell = period[0] * period[1];

  // Per-mode standard deviation sqrt(S(w_k) / |T|).
  std::vector<double> amplitude(total);
  for (int j = 0; j < n[1]; ++j) {
    const int kj = j <= n[1] / 2 ? j : j - n[1];
    const double wy = kj / period[1];
    for (int i = 0; i < n[0]; ++i) {
      const int ki = i <= n[0] / 2 ? i : i - n[0];
      const double wx = ki / period[0];
      amplitude[static_cast<std::size_t>(j) * n[0] + i] =
          std::sqrt(cov.spectral_density(wx * wx + wy * wy) / cell);
    }
  }

  std::unique_ptr<fftw_complex[], detail::FftwFree> buf(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total)));
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    // FFTW is row-major: the slow axis (y) comes first.
    plan = fftw_plan_dft_2d(n[1], n[0], buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  std::vector<GridField> fields;
  fields.reserve(static_cast<std::size_t>(count));
  for (int pair = 0; 2 * pair < count; ++pair) {
    RandomStream modes = rng.split(StreamTag::kField, static_cast<std::uint64_t>(pair));
    for (std::size_t m = 0; m < total; ++m) {
      buf[m][0] = amplitude[m] * modes.normal();
      buf[m][1] = amplitude[m] * modes.normal();
    }
    fftw_execute(plan);
    for (int part = 0; part < 2 && 2 * pair + part < count; ++part) {
      GridField f;
      f.origin = window.lower();
      f.spacing = {h[0], h[1]};
      f.shape = {n[0], n[1]};
      f.values.resize(total);
      for (std::size_t m = 0; m < total; ++m) f.values[m] = buf[m][part];
      fields.push_back(std::move(f));
    }
  }
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return fields;
}

}  // namespace iclust
