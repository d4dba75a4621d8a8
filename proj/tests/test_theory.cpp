#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "iclust/theory.hpp"

using namespace iclust;

namespace {

GenerationModel fig_generation() {
  GenerationModel g;
  g.beta = 10.0;
  g.nu = 10.0;
  g.sigma2 = 1e-4;
  return g;
}

double sup_diff(const MixtureKernel& a, const MixtureKernel& b, double r_max = 1.0) {
  double m = 0.0;
  for (int k = 1; k <= 400; ++k) {
    const double r = r_max * k / 400.0;
    m = std::max(m, std::abs(a(r) - b(r)));
  }
  return m;
}

SameSystem case1(const MixtureKernel& noise) {
  SameSystem s;
  s.beta = 0.3;
  s.nu = 0.3;
  s.sigma2 = 0.01;
  s.rho_z = 70.0;
  s.noise_pcf = noise;
  return s;
}

}  // namespace

TEST(Theory, ZeroEverythingGivesZero) {
  PcfModelConfig cfg;
  cfg.rho0 = 50.0;
  cfg.initial_pcf = MixtureKernel(2);
  GenerationModel g;
  g.beta = 1.0;
  g.nu = 0.0;  // c = 0
  g.rho_z = 5.0;
  g.noise_pcf = MixtureKernel(2);
  cfg.generations.assign(4, g);
  EXPECT_TRUE(pcf_generation_n(cfg, 4).is_zero());
}

TEST(Theory, FigureConfigurationComponents) {
  const double tau = 0.1;
  const double a = std::numbers::pi * tau * tau / 2.0 / 0.5;  // permanental alpha = 1/2, anchored
  PcfModelConfig cfg;
  cfg.rho0 = 100.0;
  cfg.initial_pcf = MixtureKernel::gaussian(a, tau * tau / 4.0);
  cfg.generations = {fig_generation()};
  const auto k = pcf_generation_n(cfg, 1);
  ASSERT_EQ(k.components().size(), 2u);
  // Sorted by variance: 2 sigma^2, then 2 sigma^2 + tau^2 / 4.
  EXPECT_NEAR(k.components()[0].variance, 2e-4, 1e-15);
  EXPECT_NEAR(k.components()[0].weight, 1.0 / 100.0, 1e-15);
  EXPECT_NEAR(k.components()[1].variance, 2e-4 + tau * tau / 4.0, 1e-15);
  EXPECT_NEAR(k.components()[1].weight, a, 1e-14);
}

TEST(Theory, PcfStepOnlyClusterTerm) {
  GenerationModel g;
  g.beta = 1.0;
  g.nu = 1.0;  // Poisson: c = 1
  g.sigma2 = 0.02;
  const auto out = pcf_step(MixtureKernel(2), 40.0, g);
  ASSERT_EQ(out.components().size(), 1u);
  EXPECT_NEAR(out.components()[0].weight, 1.0 / 40.0, 1e-15);
  EXPECT_NEAR(out.components()[0].variance, 0.04, 1e-15);
  GenerationModel z;
  z.beta = 1.0;
  z.nu = 0.0;
  EXPECT_TRUE(pcf_step(MixtureKernel(2), 40.0, z).is_zero());
}

TEST(Theory, ClosedFormMatchesRecursion) {
  PcfModelConfig cfg;
  cfg.rho0 = 80.0;
  cfg.initial_pcf = MixtureKernel::gaussian(-0.3, 0.002) + MixtureKernel::constant_term(0.05);
  GenerationModel g;
  g.beta = 1.4;
  g.nu = 2.0;
  g.sigma2 = 0.003;
  g.p = 0.6;
  g.q = 0.25;
  g.rho_z = 12.0;
  g.noise_pcf = MixtureKernel::gaussian(0.5, 0.01);
  cfg.generations.assign(6, g);
  MixtureKernel k = cfg.initial_pcf;
  double rho = cfg.rho0;
  for (int n = 1; n <= 6; ++n) {
    k = pcf_step(k, rho, g);
    rho = rho * g.reproduction_mean() + g.rho_z;
    const auto direct = pcf_generation_n(cfg, n);
    EXPECT_NEAR(direct.constant(), k.constant(), 1e-12);
    EXPECT_LT(sup_diff(direct, k, 0.5), 1e-10) << n;
  }
}

TEST(Theory, NoiseOnlyLimitIsNoisePcf) {
  SameSystem s = case1(MixtureKernel::gaussian(-0.02, 0.001));
  s.beta = 0.0;
  s.nu = 0.0;
  const auto lim = pcf_limit(s);
  EXPECT_LT(sup_diff(lim.kernel(), s.noise_pcf), 1e-12);
}

TEST(Theory, LimitIsFixedPointAndAttractor) {
  const SameSystem s = case1(MixtureKernel(2));
  const auto lim = pcf_limit(s, 1e-12);
  const auto stepped = pcf_step(lim.kernel(), s.stationary_intensity(), s.generation());
  EXPECT_LT(sup_diff(stepped, lim.kernel()), 1e-10);
  for (const auto& init : {MixtureKernel(2), MixtureKernel::gaussian(3.0, 0.05), MixtureKernel::gaussian(-0.4, 0.001)}) {
    const auto g30 = pcf_generation_n(s.model(init, 30), 30);
    EXPECT_LT(sup_diff(g30, lim.kernel()), 1e-8);
  }
}

TEST(Theory, LimitRegimes) {
  SameSystem s = case1(MixtureKernel(2));
  s.beta = 1.0;
  s.nu = 1.0;
  s.rho_z = 0.0;
  s.rho_g = 100.0;
  EXPECT_THROW(pcf_limit(s), DivergenceError);
  s.beta = 1.2;
  EXPECT_THROW(pcf_limit(s), DomainError);
  SameSystem s3 = s;
  s3.beta = 1.0;
  s3.dim = 3;
  s3.noise_pcf = MixtureKernel(3);
  const auto lim = pcf_limit(s3);
  EXPECT_FALSE(lim.finite_cluster());
  EXPECT_THROW((void)lim.kernel(), DomainError);
  // q = 0, beta p = 1: g - 1 = (1/rho_G) sum_{i>=1} N_3(2 i sigma^2)(r). Direct sum up to
  // i = M, then the Euler-Maclaurin tail int_M^inf + f(M)/2.
  const double r = 0.05;
  const auto v = lim.evaluate(r, 1e-9, 1000000);
  const double s2 = s3.sigma2;
  auto term = [&](double i) { return isotropic_gaussian_density(r, 2.0 * i * s2, 3) / 100.0; };
  const long m = 200000;
  double direct = 0.0;
  for (long i = 1; i < m; ++i) direct += term(static_cast<double>(i));
  // int_M^inf (4 pi i s2)^(-3/2) exp(-r^2 / (4 i s2)) di, with exp ~ 1 - r^2/(4 i s2) at large i.
  const double a = std::pow(4.0 * std::numbers::pi * s2, -1.5) / 100.0;
  const double u = r * r / (4.0 * s2);
  const double tail = a * (2.0 / std::sqrt(static_cast<double>(m)) - u * (2.0 / 3.0) * std::pow(m, -1.5));
  direct += tail + 0.5 * term(static_cast<double>(m));
  // The series decays like i^(-1/2): the bound is honest but not small.
  EXPECT_GT(v.tail_bound, 0.0);
  EXPECT_LE(std::abs(v.value - direct), v.tail_bound + 1e-12);
  EXPECT_GT(v.value, 0.9 * direct);
}

TEST(Theory, GammaIndexPublishedValues) {
  const double pi = std::numbers::pi;
  auto sig3 = [](double x) {
    const double e = std::floor(std::log10(std::abs(x)));
    return std::round(x / std::pow(10.0, e - 2)) * std::pow(10.0, e - 2);
  };
  EXPECT_DOUBLE_EQ(sig3(gamma_index(0.3, 0.3, 1, 0, 70, 0.0)), 9.89e-4);
  EXPECT_DOUBLE_EQ(sig3(gamma_index(0.3, 0.3 + 9 * 0.09, 1, 0, 70, 2 * pi)), 3.39);
  EXPECT_DOUBLE_EQ(sig3(gamma_index(0.95, 0.95 + 4 * 0.9025, 1, 0, 5, 0.0)), 0.463);
  EXPECT_DOUBLE_EQ(sig3(gamma_index(0.95, 0.95 + 4 * 0.9025, 1, 0, 5, 2 * pi)), 0.624);
  EXPECT_THROW(gamma_index(1.0, 1.0, 1, 0, 5, 0.0), DomainError);
}

TEST(Theory, GammaEqualsLimitMass) {
  SameSystem s = case1(MixtureKernel::gaussian(-0.2, 0.003));
  s.q = 0.2;
  const auto lim = pcf_limit(s, 1e-13);
  const double b = s.noise_pcf.total_weight();
  EXPECT_NEAR(lim.kernel().total_weight(), gamma_index(s.beta, s.nu, s.p, s.q, s.rho_z, b), 1e-10);
}
