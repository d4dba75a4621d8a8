#pragma once

// Independent numerical oracles shared by the unit tests and the acceptance
// binary. None of them call into the mixture algebra they check.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "iclust/mixture.hpp"

namespace oracle {

/// Radial density of N_2(variance) evaluated at distance r.
inline double gauss2(double r2, double variance) {
  return std::exp(-r2 / (2.0 * variance)) / (2.0 * std::numbers::pi * variance);
}

/// Samples an integrable 2-d mixture (Gaussian part only) on an n x n grid
/// of spacing h centred at the origin (node n/2 is the origin).
inline std::vector<double> sample_grid(const iclust::MixtureKernel& k, int n, double h) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = (i - n / 2) * h;
      const double y = (j - n / 2) * h;
      double v = 0.0;
      for (const auto& c : k.components()) v += c.weight * gauss2(x * x + y * y, c.variance);
      out[static_cast<std::size_t>(j) * n + i] = v;
    }
  }
  return out;
}

/// Numerical convolution of two 2-d Gaussian mixtures (with optional atoms)
/// by zero-padded FFT on a grid of spacing h and n nodes per axis, returned
/// at distances r_k = k h along the x axis for k = 0..count-1.
inline std::vector<double> fft_convolve_2d(const iclust::MixtureKernel& a, const iclust::MixtureKernel& b,
                                           int n, double h, int count) {
  const int m = 2 * n;
  const auto ga = sample_grid(a, n, h);
  const auto gb = sample_grid(b, n, h);
  const std::size_t total = static_cast<std::size_t>(m) * m;
  const std::size_t spectral = static_cast<std::size_t>(m) * (m / 2 + 1);
  std::vector<double> pa(total, 0.0), pb(total, 0.0), out(total, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      pa[static_cast<std::size_t>(j) * m + i] = ga[static_cast<std::size_t>(j) * n + i];
      pb[static_cast<std::size_t>(j) * m + i] = gb[static_cast<std::size_t>(j) * n + i];
    }
  }
  std::vector<std::complex<double>> fa(spectral), fb(spectral);
  auto* ca = reinterpret_cast<fftw_complex*>(fa.data());
  auto* cb = reinterpret_cast<fftw_complex*>(fb.data());
  fftw_plan p1 = fftw_plan_dft_r2c_2d(m, m, pa.data(), ca, FFTW_ESTIMATE);
  fftw_plan p2 = fftw_plan_dft_r2c_2d(m, m, pb.data(), cb, FFTW_ESTIMATE);
  fftw_execute(p1);
  fftw_execute(p2);
  for (std::size_t i = 0; i < spectral; ++i) fa[i] *= fb[i];
  fftw_plan p3 = fftw_plan_dft_c2r_2d(m, m, ca, out.data(), FFTW_ESTIMATE);
  fftw_execute(p3);
  fftw_destroy_plan(p1);
  fftw_destroy_plan(p2);
  fftw_destroy_plan(p3);
  // Output index (n/2 + n/2) is the origin of the full convolution.
  std::vector<double> res(static_cast<std::size_t>(count));
  const double scale = h * h / static_cast<double>(total);
  for (int k = 0; k < count; ++k) {
    const std::size_t idx = static_cast<std::size_t>(n) * m + static_cast<std::size_t>(n + k);
    double v = out[idx] * scale;
    double r2 = (k * h) * (k * h);
    // Atoms: delta_a * b + a * delta_b.
    for (const auto& c : b.components()) v += a.dirac() * c.weight * gauss2(r2, c.variance);
    for (const auto& c : a.components()) v += b.dirac() * c.weight * gauss2(r2, c.variance);
    res[static_cast<std::size_t>(k)] = v;
  }
  return res;
}

/// Composite Simpson rule with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
