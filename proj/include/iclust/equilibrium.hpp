#pragma once

// Approximate sampling of the time-stationary chain. The past is truncated at
// time -n, where n is the smallest horizon whose ignored intensity
// rho_G (beta p + q)^(n+1) is at most epsilon; noise born at time -i is only
// simulated on the target window dilated by buffer * sqrt(i) * sigma.

#include <cmath>
#include <limits>
#include <vector>

#include "iclust/chain.hpp"

namespace iclust {

/// Smallest m >= 0 with rho_g * s^(m+1) <= epsilon, where s = beta p + q.
inline int horizon(double rho_g, double reproduction_mean, double epsilon) {
  require(reproduction_mean >= 0.0, "horizon: beta p + q must be >= 0");
  if (reproduction_mean >= 1.0) throw DomainError("horizon: beta p + q >= 1 has no finite horizon");
  require(epsilon > 0.0, "horizon: epsilon must be > 0");
  require(rho_g > 0.0, "horizon: rho_G must be > 0");
  const double s = reproduction_mean;
  if (s == 0.0 || rho_g * s <= epsilon) return 0;
  auto ok = [&](int m) { return rho_g * std::pow(s, m + 1) <= epsilon; };
  int m = std::max(0, static_cast<int>(std::floor(std::log(epsilon / rho_g) / std::log(s))) - 2);
  while (m > 0 && ok(m - 1)) --m;
  while (!ok(m)) ++m;
  return m;
}

/// Upper bound |K| rho_G (beta p + q) / (1 - beta p - q) on the mean number
/// of family points in K descending from generation-0 ancestors.
inline double family_load_bound(double volume, double rho_g, double reproduction_mean) {
  require(volume >= 0.0 && rho_g >= 0.0 && reproduction_mean >= 0.0,
          "family_load_bound: arguments must be non-negative");
  if (reproduction_mean >= 1.0) throw DomainError("family_load_bound: beta p + q must be < 1");
  return volume * rho_g * reproduction_mean / (1.0 - reproduction_mean);
}

struct EquilibriumConfig {
  ChainParams params;
  Window window = Window::unit();
  double epsilon = 1e-3;
  double buffer_multiplier = 4.0;

  [[nodiscard]] double rho_g() const {
    return params.noise.rho() / (1.0 - params.reproduction_mean());
  }

  void validate() const {
    params.validate();
    if (params.reproduction_mean() >= 1.0) {
      throw DomainError("equilibrium: beta p + q must be < 1");
    }
    require(params.noise.rho() > 0.0, "equilibrium: noise intensity must be > 0");
    require(epsilon > 0.0, "equilibrium: epsilon must be > 0");
    require(buffer_multiplier >= 0.0, "equilibrium: buffer multiplier must be >= 0");
    require(window.dim() == params.dim(), "equilibrium: dimension mismatch");
  }

  [[nodiscard]] int horizon() const { return iclust::horizon(rho_g(), params.reproduction_mean(), epsilon); }
};

/// Approximate draw of G_0^st restricted to cfg.window. A retained parent is
/// carried into the next step as its own child.
inline PointPattern simulate_equilibrium(const EquilibriumConfig& cfg, RandomStream rng,
                                         Exec exec = {}) {
  cfg.validate();
  const int n = cfg.horizon();
  const double scale = cfg.params.f.scale();
  auto window_at = [&](int age) {
    return cfg.window.dilate(cfg.buffer_multiplier * std::sqrt(static_cast<double>(age)) * scale);
  };
  // Noise Z'_{-i} for i = n..0; drawn independently so any order gives the same result.
  std::vector<PointPattern> noise(static_cast<std::size_t>(n) + 1, PointPattern(cfg.params.dim()));
  parallel_for(noise.size(), exec.threads, [&](std::size_t age) {
    noise[age] = sample_noise(cfg.params.noise, window_at(static_cast<int>(age)),
                              rng.split(StreamTag::kNoise, age));
  });
  PointPattern current = std::move(noise[static_cast<std::size_t>(n)]);
  for (int age = n - 1; age >= 0; --age) {
    const Window w = window_at(age);
    GenerationTrace next = reproduce(current, cfg.params,
                                     rng.split(StreamTag::kTime, static_cast<std::uint64_t>(age)), exec);
    PointPattern kept = clip(next.points, w);
    kept.append(noise[static_cast<std::size_t>(age)]);
    current = std::move(kept);
  }
  return clip(current, cfg.window);
}

/// Descendants of one ancestor, generation by generation.
struct Family {
  std::vector<PointPattern> generations;  // generations[m - 1] holds W^(m)
  bool truncated = false;

  /// Index of the last non-empty generation (0 if none).
  [[nodiscard]] int extinction_generation() const {
    for (int m = static_cast<int>(generations.size()); m >= 1; --m) {
      if (!generations[static_cast<std::size_t>(m - 1)].empty()) return m;
    }
    return 0;
  }

  [[nodiscard]] std::size_t total_points() const {
    std::size_t s = 0;
    for (const auto& g : generations) s += g.size();
    return s;
  }
};

/// Iterates offspring plus retention from a single ancestor until extinction
/// (an empty generation, which is always recorded) or max_gen generations.
inline Family simulate_family(std::span<const double> ancestor, const ChainParams& params,
                              RandomStream rng, int max_gen) {
  params.validate();
  if (params.reproduction_mean() >= 1.0) {
    throw DomainError("simulate_family: beta p + q must be < 1 for almost sure extinction");
  }
  require(max_gen >= 1, "simulate_family: max_gen must be >= 1");
  require(static_cast<int>(ancestor.size()) == params.dim(), "simulate_family: dimension mismatch");
  Family family;
  PointPattern current(params.dim());
  current.push_back(ancestor);
  for (int m = 1; m <= max_gen; ++m) {
    GenerationTrace next =
        reproduce(current, params, rng.split(StreamTag::kGeneration, static_cast<std::uint64_t>(m)));
    family.generations.push_back(next.points);
    if (next.points.empty()) return family;
    current = std::move(next.points);
  }
  family.truncated = true;
  return family;
}

/// Family load of K: total number of family points in K (N) and the last
/// generation with a point in K (T, 0 if none).
struct FamilyLoad {
  std::size_t points_in_k = 0;
  int last_time_in_k = 0;
  bool truncated = false;
};

inline FamilyLoad family_load(const PointPattern& ancestors, const ChainParams& params,
                              const Window& k_window, RandomStream rng, int max_gen) {
  FamilyLoad load;
  for (std::size_t a = 0; a < ancestors.size(); ++a) {
    const Family fam = simulate_family(ancestors[a], params, rng.split(StreamTag::kParent, a), max_gen);
    load.truncated = load.truncated || fam.truncated;
    for (std::size_t m = 0; m < fam.generations.size(); ++m) {
      const auto& gen = fam.generations[m];
      for (std::size_t i = 0; i < gen.size(); ++i) {
        if (k_window.contains(gen[i])) {
          ++load.points_in_k;
          load.last_time_in_k = std::max(load.last_time_in_k, static_cast<int>(m) + 1);
        }
      }
    }
  }
  return load;
}

}  // namespace iclust
