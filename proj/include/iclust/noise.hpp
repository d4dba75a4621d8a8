#pragma once

// Stationary Poisson, Gaussian-kernel determinantal and weighted permanental
// point processes, used both as noise Z_n and as initial generations.
//
// Kernel convention: C(x) = (rho / alpha) * R(x) with R(x) = exp(-|x/tau|^2),
// so the reduced PCF is +R^2/alpha (permanental) or -R^2/alpha (determinantal).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "iclust/core.hpp"
#include "iclust/gaussian_field.hpp"
#include "iclust/mixture.hpp"

namespace iclust {

struct PoissonNoise {
  double rho;
};

struct GaussianDpp {
  double rho;
  double tau;
  int alpha = 1;  // superposition of alpha independent DPP(C / alpha)
};

struct WeightedPermanental {
  double rho;
  double tau;
  double alpha = 0.5;         // 2 * alpha must be a positive integer
  double grid_spacing = 0.0;  // 0 selects tau / 8
};

class NoiseSpec {
 public:
  using Kind = std::variant<PoissonNoise, GaussianDpp, WeightedPermanental>;

  NoiseSpec() : kind_(PoissonNoise{0.0}) {}
  NoiseSpec(Kind kind) : kind_(kind) { validate(); }  // NOLINT(google-explicit-constructor)

  static NoiseSpec none() { return {PoissonNoise{0.0}}; }
  static NoiseSpec poisson(double rho) { return {PoissonNoise{rho}}; }
  static NoiseSpec dpp(double rho, double tau, int alpha = 1) { return {GaussianDpp{rho, tau, alpha}}; }
  static NoiseSpec permanental(double rho, double tau, double alpha = 0.5) {
    return {WeightedPermanental{rho, tau, alpha}};
  }

  [[nodiscard]] const Kind& kind() const { return kind_; }

  [[nodiscard]] double rho() const {
    return std::visit([](const auto& k) { return k.rho; }, kind_);
  }

  [[nodiscard]] bool is_none() const {
    return std::holds_alternative<PoissonNoise>(kind_) && rho() == 0.0;
  }

  friend bool operator==(const NoiseSpec& a, const NoiseSpec& b) {
    if (a.kind_.index() != b.kind_.index()) return false;
    return std::visit(
        [&b](const auto& ka) {
          using T = std::decay_t<decltype(ka)>;
          const auto& kb = std::get<T>(b.kind_);
          if constexpr (std::is_same_v<T, PoissonNoise>) return ka.rho == kb.rho;
          if constexpr (std::is_same_v<T, GaussianDpp>)
            return ka.rho == kb.rho && ka.tau == kb.tau && ka.alpha == kb.alpha;
          if constexpr (std::is_same_v<T, WeightedPermanental>)
            return ka.rho == kb.rho && ka.tau == kb.tau && ka.alpha == kb.alpha &&
                   ka.grid_spacing == kb.grid_spacing;
        },
        a.kind_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          require(k.rho >= 0.0 && std::isfinite(k.rho), "noise: intensity must be >= 0");
          if constexpr (std::is_same_v<T, GaussianDpp>) {
            require(k.tau > 0.0, "determinantal noise: tau must be > 0");
            require(k.alpha >= 1, "determinantal noise: alpha must be a positive integer");
          } else if constexpr (std::is_same_v<T, WeightedPermanental>) {
            require(k.tau > 0.0, "permanental noise: tau must be > 0");
            const double twice = 2.0 * k.alpha;
            require(k.alpha > 0.0 && twice == std::round(twice),
                    "permanental noise: alpha must be a positive half-integer");
            require(k.grid_spacing >= 0.0, "permanental noise: grid spacing must be >= 0");
          }
        },
        kind_);
  }

  Kind kind_;
};

/// How the PCF constant b of g_Z - 1 = b f_Z * f_Z~ is normalised.
enum class PcfConvention {
  /// b fixed by g - 1 = +-R^2 / alpha exactly, so g(0) - 1 = +-1 / alpha.
  kKernelAnchored,
  /// The constants +-(sqrt(pi) tau)^2 / alpha quoted with the worked
  /// Gaussian examples; twice the kernel-anchored value in d = 2.
  kLiteratureDisplay,
};

/// g_Z - 1 = b * (f_Z * f_Z~) with f_Z ~ N_d(variance).
struct PcfCoefficient {
  double b;
  double fz_variance;

  /// The reduced PCF as a mixture kernel (f_Z * f_Z~ ~ N_d(2 * fz_variance)).
  [[nodiscard]] MixtureKernel kernel(int dim) const {
    if (b == 0.0) return MixtureKernel::zero(dim);
    return MixtureKernel::gaussian(b, 2.0 * fz_variance, dim);
  }
};

inline PcfCoefficient pcf_coefficient(const NoiseSpec& spec, int dim = 2,
                                      PcfConvention convention = PcfConvention::kKernelAnchored) {
  require(dim >= 1, "pcf_coefficient: dimension must be positive");
  return std::visit(
      [dim, convention](const auto& k) -> PcfCoefficient {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PoissonNoise>) {
          return {0.0, 1.0};
        } else {
          const double sign = std::is_same_v<T, GaussianDpp> ? -1.0 : 1.0;
          const double alpha = static_cast<double>(k.alpha);
          const double fz_variance = k.tau * k.tau / 8.0;
          // R^2 = exp(-2|x|^2/tau^2) = (pi tau^2 / 2)^(d/2) * N_d(tau^2/4)(x).
          if (convention == PcfConvention::kKernelAnchored) {
            return {sign * std::pow(std::numbers::pi * k.tau * k.tau / 2.0, dim / 2.0) / alpha,
                    fz_variance};
          }
          if (dim != 2) throw DomainError("pcf_coefficient: display constants are stated for d = 2");
          return {sign * std::numbers::pi * k.tau * k.tau / alpha, fz_variance};
        }
      },
      spec.kind());
}

/// Largest tau for which DPP_alpha with a Gaussian kernel exists in d = 2.
inline double dpp_max_tau(double rho, int alpha = 1) {
  require(rho > 0.0 && alpha >= 1, "dpp_max_tau: rho > 0 and alpha >= 1 required");
  return std::sqrt(alpha / (rho * std::numbers::pi));
}

// ---------------------------------------------------------------------------
// Samplers

inline void add_uniform_point(PointPattern& out, const Window& window, RandomStream& rng) {
  std::array<double, 8> buf{};
  std::vector<double> heap;
  std::span<double> x;
  if (window.dim() <= 8) {
    x = std::span<double>(buf.data(), static_cast<std::size_t>(window.dim()));
  } else {
    heap.resize(static_cast<std::size_t>(window.dim()));
    x = heap;
  }
  for (int k = 0; k < window.dim(); ++k) x[k] = rng.uniform(window.lower()[k], window.upper()[k]);
  out.push_back(x);
}

inline PointPattern sample_poisson(double rho, const Window& window, RandomStream rng) {
  require(rho >= 0.0 && std::isfinite(rho), "sample_poisson: intensity must be >= 0");
  PointPattern out(window.dim());
  const double mean = rho * window.volume();
  if (mean == 0.0) return out;
  const auto n = std::poisson_distribution<long>(mean)(rng);
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) add_uniform_point(out, window, rng);
  return out;
}

namespace detail {

struct FourierMode {
  int kx;
  int ky;
};

// Projection DPP on the torus W with orthonormal Fourier modes, sampled
// sequentially (Hough et al. 2006; Lavancier, Moller & Rubak 2015) with
// uniform proposals and rejection. The conditional density is tracked
// through an incremental Cholesky factor of the Gram matrix of the accepted
// feature vectors, G = L L^H, so a proposal x has residual
// |v(x)|^2 - |L^{-1} g(x)|^2 with g_j(x) = <v(x_j), v(x)>.
inline void sample_projection_dpp(const std::vector<FourierMode>& modes, const Window& window,
                                  RandomStream& rng, PointPattern& out) {
  const std::size_t n = modes.size();
  if (n == 0) return;
  const double lx = window.side(0);
  const double ly = window.side(1);
  const double x0 = window.lower()[0];
  const double y0 = window.lower()[1];
  int kx_min = 0, kx_max = 0, ky_min = 0, ky_max = 0;
  for (const auto& m : modes) {
    kx_min = std::min(kx_min, m.kx);
    kx_max = std::max(kx_max, m.kx);
    ky_min = std::min(ky_min, m.ky);
    ky_max = std::max(ky_max, m.ky);
  }
  std::vector<double> exr(static_cast<std::size_t>(kx_max - kx_min + 1));
  std::vector<double> exi(exr.size());
  std::vector<double> eyr(static_cast<std::size_t>(ky_max - ky_min + 1));
  std::vector<double> eyi(eyr.size());
  std::vector<double> vr(n), vi(n);
  // Unnormalised: |v_k| = 1, so the squared norm of v is n everywhere.
  auto feature = [&](double x, double y) {
    for (int k = kx_min; k <= kx_max; ++k) {
      const double a = 2.0 * std::numbers::pi * k * (x - x0) / lx;
      exr[static_cast<std::size_t>(k - kx_min)] = std::cos(a);
      exi[static_cast<std::size_t>(k - kx_min)] = std::sin(a);
    }
    for (int k = ky_min; k <= ky_max; ++k) {
      const double a = 2.0 * std::numbers::pi * k * (y - y0) / ly;
      eyr[static_cast<std::size_t>(k - ky_min)] = std::cos(a);
      eyi[static_cast<std::size_t>(k - ky_min)] = std::sin(a);
    }
    for (std::size_t m = 0; m < n; ++m) {
      const auto ix = static_cast<std::size_t>(modes[m].kx - kx_min);
      const auto iy = static_cast<std::size_t>(modes[m].ky - ky_min);
      vr[m] = exr[ix] * eyr[iy] - exi[ix] * eyi[iy];
      vi[m] = exr[ix] * eyi[iy] + exi[ix] * eyr[iy];
    }
  };

  // Accepted feature vectors (rows) and the packed lower factor L.
  std::vector<double> ar, ai;
  ar.reserve(n * n);
  ai.reserve(n * n);
  std::vector<double> lr, li, ldiag;
  lr.reserve(n * (n - 1) / 2);
  li.reserve(n * (n - 1) / 2);
  ldiag.reserve(n);
  auto gram = [&](std::size_t j) {
    const double* a_r = ar.data() + j * n;
    const double* a_i = ai.data() + j * n;
    double re0 = 0.0, re1 = 0.0, im0 = 0.0, im1 = 0.0;
    std::size_t m = 0;
    for (; m + 1 < n; m += 2) {
      re0 += a_r[m] * vr[m] + a_i[m] * vi[m];
      im0 += a_r[m] * vi[m] - a_i[m] * vr[m];
      re1 += a_r[m + 1] * vr[m + 1] + a_i[m + 1] * vi[m + 1];
      im1 += a_r[m + 1] * vi[m + 1] - a_i[m + 1] * vr[m + 1];
    }
    if (m < n) {
      re0 += a_r[m] * vr[m] + a_i[m] * vi[m];
      im0 += a_r[m] * vi[m] - a_i[m] * vr[m];
    }
    return std::pair{re0 + re1, im0 + im1};
  };

  const double total = static_cast<double>(n);
  std::vector<double> yr(n), yi(n);
  for (std::size_t accepted = 0; accepted < n;) {
    const double x = rng.uniform(x0, x0 + lx);
    const double y = rng.uniform(y0, y0 + ly);
    const double u = rng.uniform();
    feature(x, y);
    // Accept with probability (|v|^2 - |y|^2) / |v|^2, y = L^{-1} g.
    const double reject_above = (1.0 - u) * total;
    double captured = 0.0;
    bool rejected = false;
    for (std::size_t j = 0; j < accepted; ++j) {
      auto [gr, gi] = gram(j);
      const double* rr = lr.data() + j * (j - 1) / 2 * (j > 0);
      const double* ri = li.data() + j * (j - 1) / 2 * (j > 0);
      double sr0 = 0.0, si0 = 0.0, sr1 = 0.0, si1 = 0.0;
      std::size_t i = 0;
      for (; i + 1 < j; i += 2) {
        sr0 += rr[i] * yr[i] - ri[i] * yi[i];
        si0 += rr[i] * yi[i] + ri[i] * yr[i];
        sr1 += rr[i + 1] * yr[i + 1] - ri[i + 1] * yi[i + 1];
        si1 += rr[i + 1] * yi[i + 1] + ri[i + 1] * yr[i + 1];
      }
      if (i < j) {
        sr0 += rr[i] * yr[i] - ri[i] * yi[i];
        si0 += rr[i] * yi[i] + ri[i] * yr[i];
      }
      yr[j] = (gr - sr0 - sr1) / ldiag[j];
      yi[j] = (gi - si0 - si1) / ldiag[j];
      captured += yr[j] * yr[j] + yi[j] * yi[j];
      if (captured >= reject_above) {
        rejected = true;
        break;
      }
    }
    if (rejected) continue;
    const double residual = total - captured;
    if (!(residual > 1e-10 * total)) continue;
    // New row of L is conj(y), new diagonal sqrt(residual).
    for (std::size_t i = 0; i < accepted; ++i) {
      lr.push_back(yr[i]);
      li.push_back(-yi[i]);
    }
    ldiag.push_back(std::sqrt(residual));
    ar.insert(ar.end(), vr.begin(), vr.end());
    ai.insert(ai.end(), vi.begin(), vi.end());
    const std::array<double, 2> p{x, y};
    out.push_back(p);
    ++accepted;
  }
}

}  // namespace detail

/// Gaussian-kernel DPP_alpha on the periodically extended window (d = 2).
inline PointPattern sample_gaussian_dpp(const GaussianDpp& spec, const Window& window,
                                        RandomStream rng) {
  require(window.dim() == 2, "sample_gaussian_dpp: implemented for d = 2");
  PointPattern out(2);
  if (spec.rho == 0.0) return out;
  const double rho_component = spec.rho / spec.alpha;
  const double peak = rho_component * std::numbers::pi * spec.tau * spec.tau;
  if (peak > 1.0 + 1e-12) {
    throw ExistenceError("Gaussian DPP does not exist: tau exceeds sqrt(alpha / (rho pi))");
  }
  const double lx = window.side(0);
  const double ly = window.side(1);
  const double pi2tau2 = std::numbers::pi * std::numbers::pi * spec.tau * spec.tau;
  auto eigenvalue = [&](int kx, int ky) {
    const double wx = kx / lx;
    const double wy = ky / ly;
    return std::min(1.0, peak * std::exp(-pi2tau2 * (wx * wx + wy * wy)));
  };
  // Modes with |w| <= cutoff carry all but a 1e-7 fraction of the mass rho |W|.
  const double cutoff = std::sqrt(std::log(1e7) / pi2tau2);
  const int kx_max = static_cast<int>(std::ceil(cutoff * lx));
  const int ky_max = static_cast<int>(std::ceil(cutoff * ly));
  std::vector<std::pair<detail::FourierMode, double>> spectrum;
  double captured = 0.0;
  for (int ky = -ky_max; ky <= ky_max; ++ky) {
    for (int kx = -kx_max; kx <= kx_max; ++kx) {
      const double wx = kx / lx;
      const double wy = ky / ly;
      if (wx * wx + wy * wy > cutoff * cutoff) continue;
      const double lambda = eigenvalue(kx, ky);
      spectrum.push_back({{kx, ky}, lambda});
      captured += lambda;
    }
  }
  if (captured < (1.0 - 1e-6) * rho_component * window.volume()) {
    throw NumericError("sample_gaussian_dpp: spectral truncation captured too little mass");
  }
  for (int component = 0; component < spec.alpha; ++component) {
    RandomStream crng = rng.split(StreamTag::kNoise, static_cast<std::uint64_t>(component));
    std::vector<detail::FourierMode> chosen;
    for (const auto& [mode, lambda] : spectrum) {
      if (crng.uniform() < lambda) chosen.push_back(mode);
    }
    detail::sample_projection_dpp(chosen, window, crng, out);
  }
  return out;
}

/// Weighted permanental process with 2 * alpha a positive integer, as a Cox
/// process driven by a sum of 2 * alpha squared Gaussian fields (d = 2).
inline PointPattern sample_weighted_permanental(const WeightedPermanental& spec,
                                                const Window& window, RandomStream rng) {
  require(window.dim() == 2, "sample_weighted_permanental: implemented for d = 2");
  PointPattern out(2);
  if (spec.rho == 0.0) return out;
  const double spacing = spec.grid_spacing > 0.0 ? spec.grid_spacing : spec.tau / 8.0;
  if (spacing > spec.tau / 5.0) {
    throw ConfigurationError("permanental sampler: grid spacing coarser than tau / 5");
  }
  const int k = static_cast<int>(std::lround(2.0 * spec.alpha));
  // Each field has covariance C / 2 = rho / (2 alpha) R, so E Lambda = rho.
  const GaussianCovariance cov{spec.rho / (2.0 * spec.alpha), spec.tau};
  const auto fields =
      synthesize_gaussian_fields(cov, window, spacing, k, rng.split(StreamTag::kField));

  GridField intensity = fields.front();
  for (auto& v : intensity.values) v = 0.0;
  for (const auto& f : fields) {
    for (std::size_t m = 0; m < f.values.size(); ++m) intensity.values[m] += f.values[m] * f.values[m];
  }
  // Bilinear interpolation never exceeds the largest node value of its cell.
  const int nx = static_cast<int>(std::ceil(window.side(0) / intensity.spacing[0])) + 1;
  const int ny = static_cast<int>(std::ceil(window.side(1) / intensity.spacing[1])) + 1;
  double bound = 0.0;
  for (int j = 0; j <= std::min(ny, intensity.shape[1] - 1); ++j) {
    for (int i = 0; i <= std::min(nx, intensity.shape[0] - 1); ++i) bound = std::max(bound, intensity.at(i, j));
  }
  if (bound <= 0.0) return out;
  RandomStream prng = rng.split(StreamTag::kThinning);
  const auto proposals = sample_poisson(bound, window, prng.split(0));
  RandomStream accept = prng.split(1);
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (accept.uniform() * bound < intensity.interpolate(proposals[i])) out.push_back(proposals[i]);
  }
  return out;
}

/// One draw of the noise process on `window`.
inline PointPattern sample_noise(const NoiseSpec& spec, const Window& window, RandomStream rng) {
  return std::visit(
      [&](const auto& k) -> PointPattern {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PoissonNoise>) return sample_poisson(k.rho, window, rng);
        if constexpr (std::is_same_v<T, GaussianDpp>) return sample_gaussian_dpp(k, window, rng);
        if constexpr (std::is_same_v<T, WeightedPermanental>)
          return sample_weighted_permanental(k, window, rng);
      },
      spec.kind());
}

}  // namespace iclust
