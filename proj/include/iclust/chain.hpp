#pragma once

// One generation of the iterated cluster chain: independent clustering,
// p-thinning of the offspring, q-retention of the parents and superposition
// of independent noise. Randomness for parent i in generation n comes from the
// stream split(kParent, i), so results do not depend on the thread count.

#include <cmath>
#include <cstdint>
#include <vector>

#include "iclust/core.hpp"
#include "iclust/noise.hpp"
#include "iclust/parallel.hpp"

namespace iclust {

struct ChainParams {
  CountDistribution count;
  DisplacementDensity f = DisplacementDensity::gaussian_sd(0.1);
  double p = 1.0;  // offspring retention (thinning) probability
  double q = 0.0;  // parent retention probability
  NoiseSpec noise;

  [[nodiscard]] int dim() const { return f.dim(); }
  [[nodiscard]] double beta() const { return count.mean(); }
  [[nodiscard]] double nu() const { return count.variance(); }
  [[nodiscard]] double c() const { return cluster_dispersion_c(count); }
  /// Mean number of points a single point contributes to the next generation.
  [[nodiscard]] double reproduction_mean() const { return beta() * p + q; }

  void validate() const {
    require(p >= 0.0 && p <= 1.0, "ChainParams: p must lie in [0,1]");
    require(q >= 0.0 && q <= 1.0, "ChainParams: q must lie in [0,1]");
    require(beta() * p + q >= 0.0, "ChainParams: beta p + q must be >= 0");
  }

  friend bool operator==(const ChainParams&, const ChainParams&) = default;
};

enum class Origin : std::uint8_t { kOffspring, kRetained, kNoise };

/// One generation with per-point provenance (W_n, retained parents, Z_n).
struct GenerationTrace {
  PointPattern points;
  std::vector<Origin> origin;

  explicit GenerationTrace(int dim = 2) : points(dim) {}

  [[nodiscard]] std::size_t count(Origin o) const {
    return static_cast<std::size_t>(std::count(origin.begin(), origin.end(), o));
  }

  [[nodiscard]] PointPattern part(Origin o) const {
    PointPattern out(points.dim());
    for (std::size_t i = 0; i < origin.size(); ++i) {
      if (origin[i] == o) out.push_back(points[i]);
    }
    return out;
  }

  void add(const PointPattern& pattern, Origin o) {
    points.append(pattern);
    origin.insert(origin.end(), pattern.size(), o);
  }

  [[nodiscard]] GenerationTrace clipped(const Window& window) const {
    GenerationTrace out(points.dim());
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (window.contains(points[i])) {
        out.points.push_back(points[i]);
        out.origin.push_back(origin[i]);
      }
    }
    return out;
  }
};

/// Offspring (after thinning) and retained copy of a single parent.
struct ParentContribution {
  PointPattern offspring;
  bool retained = false;
};

inline ParentContribution reproduce_one(std::span<const double> parent, const ChainParams& params,
                                        RandomStream parent_rng) {
  const int d = params.dim();
  ParentContribution out{PointPattern(d), false};
  RandomStream count_rng = parent_rng.split(StreamTag::kOffspringCount);
  RandomStream move_rng = parent_rng.split(StreamTag::kDisplacement);
  RandomStream thin_rng = parent_rng.split(StreamTag::kThinning);
  RandomStream keep_rng = parent_rng.split(StreamTag::kRetention);
  const long n = sample_offspring_count(params.count, count_rng);
  std::vector<double> y(static_cast<std::size_t>(d));
  for (long j = 0; j < n; ++j) {
    sample_displacement(params.f, move_rng, y);
    // Thinning draw is consumed for every child so that p = 1 and p < 1 runs
    // on one seed see the same pre-thinning cluster.
    const bool keep = thin_rng.uniform() < params.p;
    if (!keep) continue;
    for (int k = 0; k < d; ++k) y[static_cast<std::size_t>(k)] += parent[k];
    out.offspring.push_back(y);
  }
  out.retained = params.q > 0.0 && keep_rng.uniform() < params.q;
  return out;
}

/// Offspring of all parents plus retained parents, without noise. The trace
/// is ordered by parent index regardless of scheduling.
inline GenerationTrace reproduce(const PointPattern& parents, const ChainParams& params,
                                 RandomStream rng, Exec exec = {}) {
  const int d = params.dim();
  std::vector<ParentContribution> parts(parents.size());
  parallel_for(parents.size(), exec.threads, [&](std::size_t i) {
    parts[i] = reproduce_one(parents[i], params, rng.split(StreamTag::kParent, i));
  });
  GenerationTrace trace(d);
  for (const auto& part : parts) trace.add(part.offspring, Origin::kOffspring);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].retained) {
      trace.points.push_back(parents[i]);
      trace.origin.push_back(Origin::kRetained);
    }
  }
  return trace;
}

inline GenerationTrace step_generation(const PointPattern& prev, const ChainParams& params,
                                       const Window& sim_window, RandomStream rng, Exec exec = {}) {
  params.validate();
  require(prev.dim() == params.dim() && sim_window.dim() == params.dim(),
          "step_generation: dimension mismatch");
  GenerationTrace trace = reproduce(prev, params, rng.split(StreamTag::kGeneration), exec);
  if (!params.noise.is_none()) {
    trace.add(sample_noise(params.noise, sim_window, rng.split(StreamTag::kNoise)), Origin::kNoise);
  }
  return trace;
}

/// Runs n_gens generations. Generation i is simulated on the target window
/// dilated by buffer_multiplier * sqrt(n_gens - i) * scale(f) and every
/// returned trace is clipped to the target window.
inline std::vector<GenerationTrace> simulate_chain(const PointPattern& initial,
                                                   const ChainParams& params, int n_gens,
                                                   const Window& target_window,
                                                   double buffer_multiplier, RandomStream rng,
                                                   Exec exec = {}) {
  params.validate();
  require(n_gens >= 1, "simulate_chain: n_gens must be >= 1");
  require(buffer_multiplier >= 0.0, "simulate_chain: buffer multiplier must be >= 0");
  const double scale = params.f.scale();
  auto window_at = [&](int gen) {
    return target_window.dilate(buffer_multiplier * std::sqrt(static_cast<double>(n_gens - gen)) * scale);
  };
  std::vector<GenerationTrace> out;
  out.reserve(static_cast<std::size_t>(n_gens));
  PointPattern current = clip(initial, window_at(0));
  for (int gen = 1; gen <= n_gens; ++gen) {
    const Window sim_window = window_at(gen);
    GenerationTrace trace =
        step_generation(current, params, sim_window, rng.split(StreamTag::kGeneration,
                                                                static_cast<std::uint64_t>(gen)),
                        exec);
    GenerationTrace kept = trace.clipped(sim_window);
    out.push_back(kept.clipped(target_window));
    current = std::move(kept.points);
  }
  return out;
}

/// rho_n = rho_{n-1} (beta_n p_n + q_n) + rho_{Z_n}.
struct GenerationRates {
  double beta;
  double p;
  double q;
  double rho_z;
};

/// Intensity after applying `per_gen` to an initial intensity rho0, by the
/// one-step recursion; the closed-form product expansion is evaluated as a
/// cross-check and must agree to 1e-12 relative.
inline double intensity_after_n(double rho0, const std::vector<GenerationRates>& per_gen) {
  require(rho0 > 0.0, "intensity_after_n: rho0 must be > 0");
  for (const auto& g : per_gen) {
    require(g.beta >= 0.0 && g.p >= 0.0 && g.q >= 0.0 && g.rho_z >= 0.0,
            "intensity_after_n: parameters must be non-negative");
  }
  double rho = rho0;
  for (const auto& g : per_gen) rho = rho * (g.beta * g.p + g.q) + g.rho_z;

  // rho_n = rho_Zn + sum_{i=0}^{n-1} rho_Zi prod_{j=i+1}^{n} (beta_j p_j + q_j), rho_Z0 = rho0.
  const std::size_t n = per_gen.size();
  double closed = n == 0 ? rho0 : per_gen[n - 1].rho_z;
  for (std::size_t i = 0; i < n; ++i) {
    double term = i == 0 ? rho0 : per_gen[i - 1].rho_z;
    for (std::size_t j = i; j < n; ++j) term *= per_gen[j].beta * per_gen[j].p + per_gen[j].q;
    closed += term;
  }
  if (std::abs(closed - rho) > 1e-12 * std::max(std::abs(rho), std::abs(closed))) {
    throw NumericError("intensity_after_n: recursion and closed form disagree");
  }
  return rho;
}

}  // namespace iclust
