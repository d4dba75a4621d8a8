#pragma once

// Closed-form intensities and reduced pair correlation functions of the chain
// when the initial generation, the noise and the displacement densities are
// isotropic Gaussian mixtures.
//
// Notation: for a generation with offspring mean beta, thinning p, retention q
// and displacement N_d(sigma^2), the propagation kernel is
//   P = (beta p f + q delta) * (beta p f~ + q delta)
//     = q^2 delta + 2 beta p q N(sigma^2) + (beta p)^2 N(2 sigma^2).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "iclust/chain.hpp"
#include "iclust/mixture.hpp"
#include "iclust/noise.hpp"

namespace iclust {

/// Reproduction and noise parameters of one generation (Gaussian displacement).
struct GenerationModel {
  double beta = 0.0;
  double nu = 0.0;
  double sigma2 = 1.0;  // per-coordinate variance of f
  double p = 1.0;
  double q = 0.0;
  double rho_z = 0.0;
  MixtureKernel noise_pcf;  // g_Z - 1

  [[nodiscard]] double c() const { return cluster_dispersion_c(beta, nu); }
  [[nodiscard]] double reproduction_mean() const { return beta * p + q; }

  void validate(int dim) const {
    require(beta >= 0.0 && nu >= 0.0, "GenerationModel: beta and nu must be >= 0");
    require(sigma2 > 0.0, "GenerationModel: sigma^2 must be > 0");
    require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0, "GenerationModel: p, q must lie in [0,1]");
    require(rho_z >= 0.0, "GenerationModel: rho_Z must be >= 0");
    require(noise_pcf.dim() == dim, "GenerationModel: noise kernel dimension mismatch");
    require(noise_pcf.dirac() == 0.0, "GenerationModel: noise PCF cannot carry an atom");
  }
};

struct PcfModelConfig {
  int dim = 2;
  double rho0 = 1.0;
  MixtureKernel initial_pcf;  // g_{G_0} - 1, affine: constant + Gaussians
  std::vector<GenerationModel> generations;

  void validate(int n) const {
    require(rho0 > 0.0, "PcfModelConfig: rho_{G_0} must be > 0");
    require(initial_pcf.dim() == dim, "PcfModelConfig: initial kernel dimension mismatch");
    require(initial_pcf.dirac() == 0.0, "PcfModelConfig: initial PCF cannot carry an atom");
    require(n >= 1, "pcf_generation_n: n must be >= 1");
    require(static_cast<int>(generations.size()) >= n,
            "pcf_generation_n: fewer generation models than requested generations");
    for (int i = 0; i < n; ++i) generations[static_cast<std::size_t>(i)].validate(dim);
  }
};

inline MixtureKernel propagation_kernel(const GenerationModel& g, int dim) {
  const double bp = g.beta * g.p;
  MixtureKernel k = MixtureKernel::delta(g.q * g.q, dim);
  if (bp * g.q != 0.0) k.add_gaussian(2.0 * bp * g.q, g.sigma2);
  if (bp != 0.0) k.add_gaussian(bp * bp, 2.0 * g.sigma2);
  return k;
}

/// Same-cluster kernel c (beta p)^2 f*f~ + beta p q (f + f~).
inline MixtureKernel cluster_kernel(const GenerationModel& g, int dim) {
  const double bp = g.beta * g.p;
  MixtureKernel k(dim);
  const double same = g.c() * bp * bp;
  if (same != 0.0) k.add_gaussian(same, 2.0 * g.sigma2);
  if (bp * g.q != 0.0) k.add_gaussian(2.0 * bp * g.q, g.sigma2);
  return k;
}

/// Intensities rho_{G_0}, ..., rho_{G_n}.
inline std::vector<double> intensities(const PcfModelConfig& cfg, int n) {
  std::vector<double> rho{cfg.rho0};
  std::vector<GenerationRates> rates;
  for (int i = 0; i < n; ++i) {
    const auto& g = cfg.generations[static_cast<std::size_t>(i)];
    rates.push_back({g.beta, g.p, g.q, g.rho_z});
    rho.push_back(intensity_after_n(cfg.rho0, rates));
  }
  return rho;
}

/// g_{G_n} - 1 assembled from its four groups: pairs with distinct generation-0
/// ancestors, pairs sharing an ancestor born in generation i - 1, pairs with
/// distinct ancestors from the noise of generation i, and pairs of Z_n.
inline MixtureKernel pcf_generation_n(const PcfModelConfig& cfg, int n,
                                      double prune_tol = MixtureKernel::kDefaultPrune) {
  cfg.validate(n);
  const int d = cfg.dim;
  const auto rho = intensities(cfg, n);
  const double rho_n = rho[static_cast<std::size_t>(n)];
  require(rho_n > 0.0, "pcf_generation_n: generation n has zero intensity");

  // suffix[i] = P_{i+1} * ... * P_n, suffix[n] = delta.
  std::vector<MixtureKernel> suffix(static_cast<std::size_t>(n) + 1, MixtureKernel(d));
  suffix[static_cast<std::size_t>(n)] = MixtureKernel::delta(1.0, d);
  for (int i = n; i >= 1; --i) {
    suffix[static_cast<std::size_t>(i - 1)] =
        mixture_convolve(propagation_kernel(cfg.generations[static_cast<std::size_t>(i - 1)], d),
                         suffix[static_cast<std::size_t>(i)], prune_tol);
  }

  MixtureKernel out(d);
  const double r0 = cfg.rho0 / rho_n;
  if (!cfg.initial_pcf.is_zero()) {
    out += mixture_convolve(cfg.initial_pcf, suffix[0], prune_tol) * (r0 * r0);
  }
  for (int i = 1; i <= n; ++i) {
    const auto& g = cfg.generations[static_cast<std::size_t>(i - 1)];
    const auto& tail = suffix[static_cast<std::size_t>(i)];
    const MixtureKernel cluster = cluster_kernel(g, d);
    if (!cluster.is_zero()) {
      out += mixture_convolve(cluster, tail, prune_tol) *
             (rho[static_cast<std::size_t>(i - 1)] / (rho_n * rho_n));
    }
    if (g.rho_z > 0.0 && !g.noise_pcf.is_zero()) {
      const double rz = g.rho_z / rho_n;
      out += mixture_convolve(g.noise_pcf, tail, prune_tol) * (rz * rz);
    }
  }
  out.normalize(prune_tol);
  if (out.dirac() != 0.0) {
    throw NumericError("pcf_generation_n: reduced PCF acquired an atom at the origin");
  }
  return out;
}

/// One generation of the PCF recursion, written term by term from the
/// decomposition of G_n into offspring, retained parents and noise.
inline MixtureKernel pcf_step(const MixtureKernel& prev_pcf, double rho_prev, const GenerationModel& g,
                              double prune_tol = MixtureKernel::kDefaultPrune) {
  const int d = prev_pcf.dim();
  g.validate(d);
  require(rho_prev > 0.0, "pcf_step: previous intensity must be > 0");
  const double bp = g.beta * g.p;
  const double rho_n = rho_prev * (bp + g.q) + g.rho_z;
  require(rho_n > 0.0, "pcf_step: next intensity must be > 0");

  const MixtureKernel f = MixtureKernel::gaussian(1.0, g.sigma2, d);
  const MixtureKernel f_ff = mixture_convolve(f, f, prune_tol);  // f * f~ (f symmetric)
  const MixtureKernel f_sym = f * 2.0;                         // f + f~

  MixtureKernel out(d);
  // Offspring pairs: different clusters, then the same cluster.
  const double w_off = rho_prev * bp / rho_n;
  if (w_off != 0.0) {
    MixtureKernel offspring = mixture_convolve(prev_pcf, f_ff, prune_tol);
    offspring += f_ff * (g.c() / rho_prev);
    out += offspring * (w_off * w_off);
  }
  // Retained parent pairs.
  const double w_ret = rho_prev * g.q / rho_n;
  if (w_ret != 0.0) out += prev_pcf * (w_ret * w_ret);
  // Noise pairs.
  const double w_noise = g.rho_z / rho_n;
  if (w_noise != 0.0) out += g.noise_pcf * (w_noise * w_noise);
  // Offspring with a retained parent, in both orders.
  const double w_cross = rho_prev * rho_prev * bp * g.q / (rho_n * rho_n);
  if (w_cross != 0.0) {
    MixtureKernel cross = mixture_convolve(prev_pcf, f_sym, prune_tol);
    cross += f_sym * (1.0 / rho_prev);
    out += cross * w_cross;
  }
  out.normalize(prune_tol);
  return out;
}

// ---------------------------------------------------------------------------
// Same reproduction system

struct SameSystem {
  int dim = 2;
  double beta = 0.0;
  double nu = 0.0;
  double sigma2 = 1.0;
  double p = 1.0;
  double q = 0.0;
  double rho_z = 0.0;
  MixtureKernel noise_pcf{2};  // b f_Z * f_Z~
  double rho_g = 0.0;          // only read when beta p + q = 1 and rho_Z = 0

  [[nodiscard]] GenerationModel generation() const {
    return {beta, nu, sigma2, p, q, rho_z, noise_pcf};
  }
  [[nodiscard]] double reproduction_mean() const { return beta * p + q; }
  [[nodiscard]] double c() const { return cluster_dispersion_c(beta, nu); }
  [[nodiscard]] double stationary_intensity() const {
    if (reproduction_mean() < 1.0) return rho_z / (1.0 - reproduction_mean());
    return rho_g;
  }

  /// Configuration with all generations equal.
  [[nodiscard]] PcfModelConfig model(const MixtureKernel& initial_pcf, int n) const {
    PcfModelConfig cfg;
    cfg.dim = dim;
    cfg.rho0 = stationary_intensity();
    cfg.initial_pcf = initial_pcf;
    cfg.generations.assign(static_cast<std::size_t>(n), generation());
    return cfg;
  }
};

/// Limit of g_{G_n} - 1 as n grows. In the finite-cluster regime
/// (beta p + q < 1, rho_Z > 0) this is a finite mixture truncated once the
/// remaining absolute weight falls below `tol`. In the infinite-cluster regime
/// (beta p + q = 1, rho_Z = 0, d >= 3) the weights do not decay and only a
/// pointwise evaluator with an explicit tail bound is available.
class PcfLimit {
 public:
  struct Value {
    double value;
    double tail_bound;
  };

  [[nodiscard]] bool finite_cluster() const { return finite_; }
  [[nodiscard]] const MixtureKernel& kernel() const {
    if (!finite_) throw DomainError("PcfLimit: infinite-cluster limit has no finite mixture");
    return kernel_;
  }
  /// Absolute weight left out by truncation.
  [[nodiscard]] double truncation_bound() const { return truncation_; }
  [[nodiscard]] int terms() const { return terms_; }

  [[nodiscard]] Value evaluate(double r, double tol = 1e-6, long max_terms = 1000000) const;

  friend PcfLimit pcf_limit(const SameSystem& sys, double tol, double prune_tol);

 private:
  bool finite_ = true;
  MixtureKernel kernel_{2};
  double truncation_ = 0.0;
  int terms_ = 0;
  SameSystem sys_;
};

inline PcfLimit pcf_limit(const SameSystem& sys, double tol = 1e-10,
                          double prune_tol = MixtureKernel::kDefaultPrune) {
  const int d = sys.dim;
  const GenerationModel g = sys.generation();
  g.validate(d);
  require(tol > 0.0, "pcf_limit: tolerance must be > 0");
  const double s = sys.reproduction_mean();
  PcfLimit out;
  out.sys_ = sys;
  if (s >= 1.0) {
    if (s > 1.0 || sys.rho_z != 0.0) {
      throw DomainError("pcf_limit: requires beta p + q < 1 with rho_Z > 0, or beta p + q = 1 with rho_Z = 0");
    }
    if (d <= 2) throw DivergenceError("pcf_limit: g_{G_n} diverges when beta p + q = 1 and d <= 2");
    require(sys.rho_g > 0.0, "pcf_limit: infinite-cluster mode needs rho_G > 0");
    out.finite_ = false;
    return out;
  }
  require(sys.rho_z > 0.0, "pcf_limit: finite-cluster regime requires rho_Z > 0");
  const double rho_g = sys.stationary_intensity();
  MixtureKernel head = cluster_kernel(g, d) * (1.0 / rho_g);
  const double rz = sys.rho_z / rho_g;
  head += sys.noise_pcf * (rz * rz);
  head.normalize(prune_tol);
  const double head_size = std::abs(head.constant()) + head.total_abs_weight();

  // sum_{i>=0} P^{*i}; P^{*i} has mass s^{2i}.
  const double ratio = s * s;
  const MixtureKernel step = propagation_kernel(g, d);
  MixtureKernel power = MixtureKernel::delta(1.0, d);
  MixtureKernel series = power;
  int terms = 1;
  auto tail = [&](int n_terms) { return head_size * std::pow(ratio, n_terms) / (1.0 - ratio); };
  while (tail(terms) >= tol) {
    power = mixture_convolve(power, step, prune_tol);
    series += power;
    series.normalize(prune_tol);
    ++terms;
  }
  out.kernel_ = mixture_convolve(head, series, prune_tol);
  out.truncation_ = tail(terms);
  out.terms_ = terms;
  return out;
}

inline PcfLimit::Value PcfLimit::evaluate(double r, double tol, long max_terms) const {
  if (finite_) return {kernel_(r), truncation_};
  // g - 1 = (1/rho_G) [c (beta p)^2 N(2 s2) + 2 beta p q N(s2)] * sum_i P^{*i},
  // P^{*i} = sum_k C(2i,k) q^(2i-k) (beta p)^k N(k s2).
  const SameSystem& sys = sys_;
  const int d = sys.dim;
  const double bp = sys.beta * sys.p;
  const double q = sys.q;
  const double c = sys.c();
  const double a_same = c * bp * bp / sys.rho_g;
  const double a_cross = 2.0 * bp * q / sys.rho_g;
  if (bp == 0.0 || (a_same == 0.0 && a_cross == 0.0)) return {0.0, 0.0};
  const double norm = std::pow(2.0 * std::numbers::pi * sys.sigma2, -0.5 * d);
  // Hoeffding: E[(m + K)^(-d/2)] <= m^(-d/2) e^(-i bp^2) + (m + i bp)^(-d/2), K ~ Bin(2i, bp).
  auto tail_bound = [&](long last) {
    const double e = std::exp(-bp * bp);
    double bound = 0.0;
    for (const auto& [a, m] : {std::pair{a_same, 2.0}, std::pair{a_cross, 1.0}}) {
      if (a == 0.0) continue;
      const double geometric = std::pow(m, -0.5 * d) * std::pow(e, last + 1) / (1.0 - e);
      const double power = std::pow(m + last * bp, 1.0 - 0.5 * d) / ((0.5 * d - 1.0) * bp);
      bound += std::abs(a) * norm * (geometric + power);
    }
    return bound;
  };
  double value = 0.0;
  long i = 0;
  for (; i <= max_terms; ++i) {
    const long n2 = 2 * i;
    if (q == 0.0 || bp == 1.0) {
      const double k = static_cast<double>(n2);
      value += a_same * isotropic_gaussian_density(r, (2.0 + k) * sys.sigma2, d) +
               a_cross * isotropic_gaussian_density(r, (1.0 + k) * sys.sigma2, d);
    } else {
      // Binomial weights in log space, skipping negligible ones.
      const double mean = n2 * bp;
      const double sd = std::sqrt(n2 * bp * q);
      const long lo = std::max(0L, static_cast<long>(std::floor(mean - 12.0 * sd - 1.0)));
      const long hi = std::min(n2, static_cast<long>(std::ceil(mean + 12.0 * sd + 1.0)));
      for (long k = lo; k <= hi; ++k) {
        const double logw = std::lgamma(n2 + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n2 - k + 1.0) +
                            (n2 - k) * std::log(q) + k * std::log(bp);
        const double w = std::exp(logw);
        value += w * (a_same * isotropic_gaussian_density(r, (2.0 + k) * sys.sigma2, d) +
                      a_cross * isotropic_gaussian_density(r, (1.0 + k) * sys.sigma2, d));
      }
    }
    if (tail_bound(i) < tol) break;
  }
  return {value, tail_bound(std::min(i, max_terms))};
}

/// Integral of the limiting reduced PCF,
/// (c (beta p)^2 + 2 beta p q) / (rho_G (1 - s^2)) + b rho_Z^2 / (rho_G^2 (1 - s^2)), s = beta p + q,
/// written in terms of rho_Z.
inline double gamma_index(double beta, double nu, double p, double q, double rho_z, double b) {
  require(beta >= 0.0 && nu >= 0.0 && p >= 0.0 && q >= 0.0, "gamma_index: parameters must be >= 0");
  const double bp = beta * p;
  const double s = bp + q;
  if (s >= 1.0) throw DomainError("gamma_index: beta p + q must be < 1");
  require(rho_z > 0.0, "gamma_index: rho_Z must be > 0");
  const double c = cluster_dispersion_c(beta, nu);
  return ((c * bp * bp + 2.0 * bp * q) / rho_z + b * (1.0 - s)) / (1.0 + s);
}

/// Reduced PCF of a noise or initial process as a mixture kernel.
inline MixtureKernel reduced_pcf(const NoiseSpec& spec, int dim = 2,
                                 PcfConvention convention = PcfConvention::kKernelAnchored) {
  return pcf_coefficient(spec, dim, convention).kernel(dim);
}

}  // namespace iclust
