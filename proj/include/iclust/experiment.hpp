#pragma once

// JSON experiment configurations, named presets and the three commands
// behind the `iclust` tool: simulate, theory and validate.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iclust/chain.hpp"
#include "iclust/equilibrium.hpp"
#include "iclust/io.hpp"
#include "iclust/summaries.hpp"
#include "iclust/theory.hpp"

namespace iclust {

using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

/// Configuration error carrying the 1-based line of the offending key (0 if unknown).
struct ConfigError : ConfigurationError {
  ConfigError(const std::string& what, int line_no)
      : ConfigurationError(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
        line(line_no) {}
  int line;
};

struct InitialSpec {
  std::string kind = "poisson";  // poisson | dpp | permanental | grid | empty
  double rho = 100.0;
  double tau = 0.1;
  double alpha = 1.0;
  double spacing = 0.1;  // grid only

  friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct Variant {
  std::string name = "default";
  ChainParams params;
  InitialSpec initial;

  friend bool operator==(const Variant&, const Variant&) = default;
};

struct RunSpec {
  std::string mode = "chain";  // chain | equilibrium
  int generations = 1;
  double epsilon = 1e-3;
  Window window = Window::unit();
  int replicates = 1;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double buffer_multiplier = 4.0;

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct TheorySpec {
  std::vector<int> generations{1};
  bool limit = false;
  std::string convention = "anchored";  // anchored | display
  double limit_tolerance = 1e-10;

  friend bool operator==(const TheorySpec&, const TheorySpec&) = default;
};

struct ValidateSpec {
  int null_simulations = 499;
  double level = 0.95;
  double j_r_max = 0.08;

  friend bool operator==(const ValidateSpec&, const ValidateSpec&) = default;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> statistics{"pcf"};
  double r_max = 0.0;  // 0 selects a quarter of the shortest window side
  int r_steps = 512;
  double bandwidth = 0.0;  // 0 selects 0.15 / sqrt(intensity)

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ExperimentConfig {
  std::string name = "custom";
  std::vector<Variant> variants{Variant{}};
  RunSpec run;
  TheorySpec theory;
  ValidateSpec validate;
  OutputSpec output;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// ---------------------------------------------------------------------------
// JSON <-> config

namespace detail {

/// 1-based line of the key at the end of `path`, searching each key after the previous one.
inline int locate_line(const std::string& raw, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  bool found = false;
  for (const auto& key : path) {
    const auto hit = raw.find('"' + key + '"', pos);
    if (hit == std::string::npos) break;
    pos = hit;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(raw.begin(), raw.begin() + static_cast<long>(pos), '\n'));
}

struct Reader {
  const std::string* raw = nullptr;

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::string dotted;
    for (const auto& p : path) dotted += (dotted.empty() ? "" : ".") + p;
    throw ConfigError(dotted + ": " + what, raw ? locate_line(*raw, path) : 0);
  }

  template <class T>
  T get(const json& j, const std::vector<std::string>& path, const std::string& key, T fallback) const {
    if (!j.contains(key)) return fallback;
    auto p = path;
    p.push_back(key);
    try {
      return j.at(key).get<T>();
    } catch (const json::exception&) {
      fail(p, "has the wrong type");
    }
  }

  template <class T>
  T need(const json& j, const std::vector<std::string>& path, const std::string& key) const {
    auto p = path;
    p.push_back(key);
    if (!j.contains(key)) fail(p, "is required");
    return get<T>(j, path, key, T{});
  }

  void check(bool ok, const std::vector<std::string>& path, const std::string& what) const {
    if (!ok) fail(path, what);
  }
};

inline json count_to_json(const CountDistribution& c) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PoissonCount>) return {{"law", "poisson"}, {"mean", l.mean}};
        if constexpr (std::is_same_v<T, BernoulliCount>) return {{"law", "bernoulli"}, {"mean", l.prob}};
        if constexpr (std::is_same_v<T, NegativeBinomialCount>)
          return {{"law", "negative_binomial"}, {"mean", l.mean}, {"dispersion", l.dispersion}};
        if constexpr (std::is_same_v<T, FixedCount>) return {{"law", "fixed"}, {"k", l.k}};
      },
      c.law());
}

inline json noise_to_json(const NoiseSpec& n) {
  if (n.is_none()) return {{"kind", "none"}};
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PoissonNoise>) return {{"kind", "poisson"}, {"rho", k.rho}};
        if constexpr (std::is_same_v<T, GaussianDpp>)
          return {{"kind", "dpp"}, {"rho", k.rho}, {"tau", k.tau}, {"alpha", k.alpha}};
        if constexpr (std::is_same_v<T, WeightedPermanental>)
          return {{"kind", "permanental"}, {"rho", k.rho}, {"tau", k.tau}, {"alpha", k.alpha},
                  {"grid_spacing", k.grid_spacing}};
      },
      n.kind());
}

inline json model_to_json(const Variant& v) {
  json f;
  if (v.params.f.is_gaussian()) {
    f = {{"kind", "gaussian"}, {"sigma", v.params.f.scale()}};
  } else {
    f = {{"kind", "ball"}, {"radius", v.params.f.scale()}};
  }
  json init = {{"kind", v.initial.kind}};
  if (v.initial.kind == "grid") {
    init["spacing"] = v.initial.spacing;
  } else if (v.initial.kind != "empty") {
    init["rho"] = v.initial.rho;
    if (v.initial.kind != "poisson") {
      init["tau"] = v.initial.tau;
      init["alpha"] = v.initial.alpha;
    }
  }
  return {{"dim", v.params.dim()},     {"count", count_to_json(v.params.count)},
          {"displacement", f},         {"p", v.params.p},
          {"q", v.params.q},           {"noise", noise_to_json(v.params.noise)},
          {"initial", init}};
}

inline NoiseSpec noise_from_json(const Reader& rd, const json& j, const std::vector<std::string>& path,
                                 bool allow_empty_kind = false) {
  const auto kind = rd.get<std::string>(j, path, "kind", allow_empty_kind ? "empty" : "none");
  try {
    if (kind == "none" || kind == "empty") return NoiseSpec::none();
    const auto rho = rd.need<double>(j, path, "rho");
    if (kind == "poisson") return NoiseSpec::poisson(rho);
    if (kind == "dpp") {
      return NoiseSpec::dpp(rho, rd.need<double>(j, path, "tau"), rd.get<int>(j, path, "alpha", 1));
    }
    if (kind == "permanental") {
      WeightedPermanental w{rho, rd.need<double>(j, path, "tau"), rd.get<double>(j, path, "alpha", 0.5),
                            rd.get<double>(j, path, "grid_spacing", 0.0)};
      return NoiseSpec(w);
    }
  } catch (const DomainError& e) {
    rd.fail(path, e.what());
  }
  auto p = path;
  p.push_back("kind");
  rd.fail(p, "unknown process kind '" + kind + "'");
}

inline Variant model_from_json(const Reader& rd, const json& m, const std::vector<std::string>& path) {
  rd.check(m.is_object(), path, "must be an object");
  Variant v;
  const int dim = rd.get<int>(m, path, "dim", 2);
  rd.check(dim >= 1, path, "dim must be >= 1");

  auto cpath = path;
  cpath.push_back("count");
  const json count = m.value("count", json::object());
  const auto law = rd.get<std::string>(count, cpath, "law", "poisson");
  try {
    if (law == "poisson") {
      v.params.count = CountDistribution::poisson(rd.need<double>(count, cpath, "mean"));
    } else if (law == "bernoulli") {
      v.params.count = CountDistribution::bernoulli(rd.need<double>(count, cpath, "mean"));
    } else if (law == "negative_binomial") {
      const auto mean = rd.need<double>(count, cpath, "mean");
      if (count.contains("c")) {
        v.params.count = CountDistribution::negative_binomial_with_c(mean, rd.need<double>(count, cpath, "c"));
      } else {
        v.params.count = CountDistribution::negative_binomial(mean, rd.need<double>(count, cpath, "dispersion"));
      }
    } else if (law == "fixed") {
      v.params.count = CountDistribution::fixed(rd.need<long>(count, cpath, "k"));
    } else {
      auto p = cpath;
      p.push_back("law");
      rd.fail(p, "unknown count law '" + law + "'");
    }
  } catch (const DomainError& e) {
    rd.fail(cpath, e.what());
  }

  auto fpath = path;
  fpath.push_back("displacement");
  const json f = m.value("displacement", json::object());
  const auto fkind = rd.get<std::string>(f, fpath, "kind", "gaussian");
  try {
    if (fkind == "gaussian") {
      v.params.f = DisplacementDensity::gaussian_sd(rd.need<double>(f, fpath, "sigma"), dim);
    } else if (fkind == "ball") {
      v.params.f = DisplacementDensity::ball(rd.need<double>(f, fpath, "radius"), dim);
    } else {
      auto p = fpath;
      p.push_back("kind");
      rd.fail(p, "unknown displacement kind '" + fkind + "'");
    }
  } catch (const DomainError& e) {
    rd.fail(fpath, e.what());
  }

  v.params.p = rd.get<double>(m, path, "p", 1.0);
  v.params.q = rd.get<double>(m, path, "q", 0.0);
  auto ppath = path;
  ppath.push_back("p");
  rd.check(v.params.p >= 0.0 && v.params.p <= 1.0, ppath, "must lie in [0,1]");
  auto qpath = path;
  qpath.push_back("q");
  rd.check(v.params.q >= 0.0 && v.params.q <= 1.0, qpath, "must lie in [0,1]");

  auto npath = path;
  npath.push_back("noise");
  v.params.noise = noise_from_json(rd, m.value("noise", json::object()), npath);

  auto ipath = path;
  ipath.push_back("initial");
  const json init = m.value("initial", json::object());
  v.initial.kind = rd.get<std::string>(init, ipath, "kind", "poisson");
  auto kpath = ipath;
  kpath.push_back("kind");
  rd.check(v.initial.kind == "poisson" || v.initial.kind == "dpp" || v.initial.kind == "permanental" ||
               v.initial.kind == "grid" || v.initial.kind == "empty",
           kpath, "unknown initial process '" + v.initial.kind + "'");
  v.initial.rho = rd.get<double>(init, ipath, "rho", v.initial.rho);
  v.initial.tau = rd.get<double>(init, ipath, "tau", v.initial.tau);
  v.initial.alpha = rd.get<double>(init, ipath, "alpha", v.initial.kind == "permanental" ? 0.5 : 1.0);
  v.initial.spacing = rd.get<double>(init, ipath, "spacing", v.initial.spacing);
  rd.check(v.initial.rho > 0.0 && v.initial.tau > 0.0 && v.initial.spacing > 0.0 && v.initial.alpha > 0.0,
           ipath, "rho, tau, alpha and spacing must be > 0");
  if (v.initial.kind == "dpp") {
    rd.check(v.initial.alpha == std::round(v.initial.alpha), ipath, "determinantal alpha must be an integer");
  }
  if (v.initial.kind == "permanental") {
    rd.check(2.0 * v.initial.alpha == std::round(2.0 * v.initial.alpha), ipath,
             "permanental alpha must be a positive half-integer");
  }
  return v;
}

}  // namespace detail

inline json config_to_json(const ExperimentConfig& c) {
  json variants = json::array();
  for (const auto& v : c.variants) variants.push_back({{"name", v.name}, {"model", detail::model_to_json(v)}});
  json stats = c.output.statistics;
  return {
      {"name", c.name},
      {"variants", variants},
      {"run",
       {{"mode", c.run.mode},
        {"generations", c.run.generations},
        {"epsilon", c.run.epsilon},
        {"window", {{"lower", c.run.window.lower()}, {"upper", c.run.window.upper()}}},
        {"replicates", c.run.replicates},
        {"seed", c.run.seed},
        {"threads", c.run.threads},
        {"buffer_multiplier", c.run.buffer_multiplier}}},
      {"theory",
       {{"generations", c.theory.generations},
        {"limit", c.theory.limit},
        {"convention", c.theory.convention},
        {"limit_tolerance", c.theory.limit_tolerance}}},
      {"validate",
       {{"null_simulations", c.validate.null_simulations},
        {"level", c.validate.level},
        {"j_r_max", c.validate.j_r_max}}},
      {"output",
       {{"directory", c.output.directory},
        {"statistics", stats},
        {"r_grid", {{"max", c.output.r_max}, {"steps", c.output.r_steps}}},
        {"bandwidth", c.output.bandwidth}}},
  };
}

/// Builds a config from a parsed document; `raw` (the source text) is used
/// to report the line of an offending key.
inline ExperimentConfig config_from_json(const json& doc, const std::string& raw = {}) {
  detail::Reader rd{raw.empty() ? nullptr : &raw};
  rd.check(doc.is_object(), {}, "configuration must be a JSON object");
  ExperimentConfig c;
  c.name = rd.get<std::string>(doc, {}, "name", "custom");

  const json base = doc.value("model", json::object());
  c.variants.clear();
  if (doc.contains("variants")) {
    const json& vs = doc.at("variants");
    rd.check(vs.is_array() && !vs.empty(), {"variants"}, "must be a non-empty array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      json merged = base;
      merged.merge_patch(vs[i].value("model", json::object()));
      Variant v = detail::model_from_json(rd, merged, {"variants", "model"});
      v.name = rd.get<std::string>(vs[i], {"variants"}, "name", "variant" + std::to_string(i));
      c.variants.push_back(std::move(v));
    }
  } else {
    rd.check(doc.contains("model"), {"model"}, "is required");
    c.variants.push_back(detail::model_from_json(rd, base, {"model"}));
  }

  const json run = doc.value("run", json::object());
  c.run.mode = rd.get<std::string>(run, {"run"}, "mode", c.run.mode);
  rd.check(c.run.mode == "chain" || c.run.mode == "equilibrium", {"run", "mode"},
           "must be 'chain' or 'equilibrium'");
  c.run.generations = rd.get<int>(run, {"run"}, "generations", c.run.generations);
  rd.check(c.run.generations >= 1, {"run", "generations"}, "must be >= 1");
  c.run.epsilon = rd.get<double>(run, {"run"}, "epsilon", c.run.epsilon);
  rd.check(c.run.epsilon > 0.0, {"run", "epsilon"}, "must be > 0");
  if (run.contains("window")) {
    const json& w = run.at("window");
    try {
      c.run.window = Window(rd.need<std::vector<double>>(w, {"run", "window"}, "lower"),
                            rd.need<std::vector<double>>(w, {"run", "window"}, "upper"));
    } catch (const DomainError& e) {
      rd.fail({"run", "window"}, e.what());
    }
  } else {
    c.run.window = Window::unit(c.variants.front().params.dim());
  }
  c.run.replicates = rd.get<int>(run, {"run"}, "replicates", c.run.replicates);
  rd.check(c.run.replicates >= 1, {"run", "replicates"}, "must be >= 1");
  c.run.seed = rd.get<std::uint64_t>(run, {"run"}, "seed", c.run.seed);
  c.run.threads = rd.get<unsigned>(run, {"run"}, "threads", c.run.threads);
  c.run.buffer_multiplier = rd.get<double>(run, {"run"}, "buffer_multiplier", c.run.buffer_multiplier);
  rd.check(c.run.buffer_multiplier >= 0.0, {"run", "buffer_multiplier"}, "must be >= 0");
  for (const auto& v : c.variants) {
    rd.check(v.params.dim() == c.run.window.dim(), {"run", "window"}, "dimension differs from model.dim");
    if (c.run.mode == "equilibrium") {
      rd.check(v.params.reproduction_mean() < 1.0, {"model", "count"},
               "equilibrium requires beta p + q < 1 (variant " + v.name + ")");
      rd.check(v.params.noise.rho() > 0.0, {"model", "noise"},
               "equilibrium requires a noise process with rho > 0 (variant " + v.name + ")");
    }
  }

  const json th = doc.value("theory", json::object());
  c.theory.generations = rd.get<std::vector<int>>(th, {"theory"}, "generations", c.theory.generations);
  for (int n : c.theory.generations) rd.check(n >= 1, {"theory", "generations"}, "entries must be >= 1");
  c.theory.limit = rd.get<bool>(th, {"theory"}, "limit", c.theory.limit);
  c.theory.convention = rd.get<std::string>(th, {"theory"}, "convention", c.theory.convention);
  rd.check(c.theory.convention == "anchored" || c.theory.convention == "display", {"theory", "convention"},
           "must be 'anchored' or 'display'");
  c.theory.limit_tolerance = rd.get<double>(th, {"theory"}, "limit_tolerance", c.theory.limit_tolerance);
  rd.check(c.theory.limit_tolerance > 0.0, {"theory", "limit_tolerance"}, "must be > 0");

  const json va = doc.value("validate", json::object());
  c.validate.null_simulations = rd.get<int>(va, {"validate"}, "null_simulations", c.validate.null_simulations);
  rd.check(c.validate.null_simulations >= 2, {"validate", "null_simulations"}, "must be >= 2");
  c.validate.level = rd.get<double>(va, {"validate"}, "level", c.validate.level);
  rd.check(c.validate.level > 0.0 && c.validate.level < 1.0, {"validate", "level"}, "must lie in (0,1)");
  c.validate.j_r_max = rd.get<double>(va, {"validate"}, "j_r_max", c.validate.j_r_max);
  rd.check(c.validate.j_r_max > 0.0, {"validate", "j_r_max"}, "must be > 0");

  const json out = doc.value("output", json::object());
  c.output.directory = rd.get<std::string>(out, {"output"}, "directory", c.output.directory);
  c.output.statistics = rd.get<std::vector<std::string>>(out, {"output"}, "statistics", c.output.statistics);
  for (const auto& s : c.output.statistics) {
    rd.check(s == "pcf" || s == "L" || s == "J", {"output", "statistics"}, "unknown statistic '" + s + "'");
  }
  const json rg = out.value("r_grid", json::object());
  c.output.r_max = rd.get<double>(rg, {"output", "r_grid"}, "max", c.output.r_max);
  c.output.r_steps = rd.get<int>(rg, {"output", "r_grid"}, "steps", c.output.r_steps);
  rd.check(c.output.r_max >= 0.0 && c.output.r_steps >= 1, {"output", "r_grid"}, "needs max >= 0 and steps >= 1");
  c.output.bandwidth = rd.get<double>(out, {"output"}, "bandwidth", c.output.bandwidth);
  rd.check(c.output.bandwidth >= 0.0, {"output", "bandwidth"}, "must be >= 0");
  return c;
}

/// Parses configuration text. Syntax errors report line and column.
inline ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = text.substr(0, std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size()));
    const int line = 1 + static_cast<int>(std::count(upto.begin(), upto.end(), '\n'));
    const auto nl = upto.rfind('\n');
    const auto col = static_cast<int>(upto.size() - (nl == std::string::npos ? 0 : nl + 1)) + 1;
    throw ConfigError("column " + std::to_string(col) + ": JSON syntax error: " + e.what(), line);
  }
  return config_from_json(doc, text);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline json preset_document(const std::string& name) {
  const double pi = std::numbers::pi;
  // Section 3.2.2: G_1 from three stationary initial processes with intensity 100.
  const json fig_base = {
      {"dim", 2},
      {"count", {{"law", "poisson"}, {"mean", 10.0}}},
      {"displacement", {{"kind", "gaussian"}, {"sigma", 0.01}}},
      {"p", 1.0},
      {"q", 0.0},
      {"noise", {{"kind", "none"}}},
      {"initial", {{"kind", "poisson"}, {"rho", 100.0}}},
  };
  const json initial_variants = json::array({
      {{"name", "dpp"}, {"model", {{"initial", {{"kind", "dpp"}, {"tau", 1.0 / std::sqrt(100.0 * pi)}, {"alpha", 1}}}}}},
      {{"name", "poisson"}, {"model", {{"initial", {{"kind", "poisson"}}}}}},
      {{"name", "wper"}, {"model", {{"initial", {{"kind", "permanental"}, {"tau", 0.1}, {"alpha", 0.5}}}}}},
  });
  if (name == "fig1") {
    return {{"name", name}, {"model", fig_base}, {"variants", initial_variants},
            {"run", {{"mode", "chain"}, {"generations", 1}}},
            {"theory", {{"generations", {1}}}},
            {"output", {{"directory", "fig1"}, {"r_grid", {{"max", 0.25}, {"steps", 512}}}}}};
  }
  if (name == "fig2") {
    return {{"name", name}, {"model", fig_base}, {"variants", initial_variants},
            {"run", {{"mode", "chain"}, {"generations", 1}, {"replicates", 1}}},
            {"output", {{"directory", "fig2"}}}};
  }
  if (name == "fig2-dpp-centre") {
    return {{"name", name}, {"model", fig_base},
            {"variants", json::array({initial_variants[0]})},
            {"run", {{"mode", "chain"}, {"generations", 1}, {"replicates", 3}}},
            {"output", {{"directory", "fig2-dpp-centre"}}}};
  }
  // Section 4.1: same reproduction system, rho_G = 100, beta p = 0.8, rho_Z = 20.
  if (name == "fig3") {
    const json base = {
        {"dim", 2},
        {"count", {{"law", "poisson"}, {"mean", 0.8}}},
        {"displacement", {{"kind", "gaussian"}, {"sigma", 0.1}}},
        {"p", 1.0},
        {"q", 0.0},
        {"noise", {{"kind", "poisson"}, {"rho", 20.0}}},
        {"initial", {{"kind", "poisson"}, {"rho", 100.0}}},
    };
    const json variants = json::array({
        {{"name", "dpp"}, {"model", {{"noise", {{"kind", "dpp"}, {"tau", 1.0 / std::sqrt(20.0 * pi)}, {"alpha", 1}}}}}},
        {{"name", "poisson"}, {"model", json::object()}},
        {{"name", "wper"}, {"model", {{"noise", {{"kind", "permanental"}, {"tau", 0.1}, {"alpha", 0.5}}}}}},
    });
    return {{"name", name}, {"model", base}, {"variants", variants},
            {"run", {{"mode", "chain"}, {"generations", 16}}},
            {"theory", {{"generations", {8, 16}}, {"limit", true}}},
            {"output", {{"directory", "fig3"}, {"r_grid", {{"max", 0.5}, {"steps", 512}}}}}};
  }
  // Section 4.2, Cases 1 and 2 (equilibrium, rho_G = 100).
  const bool case1 = name.rfind("case1-", 0) == 0;
  const bool case2 = name.rfind("case2-", 0) == 0;
  if (case1 || case2) {
    const std::string noise = name.substr(6);
    const double beta = case1 ? 0.3 : 0.95;
    const double rho_z = 100.0 * (1.0 - beta);
    json count;
    json noise_json;
    if (noise == "poisson") {
      count = case1 ? json{{"law", "poisson"}, {"mean", beta}} : json{{"law", "negative_binomial"}, {"mean", beta}, {"c", 5.0}};
      noise_json = {{"kind", "poisson"}, {"rho", rho_z}};
    } else if (noise == "dpp") {
      count = case1 ? json{{"law", "bernoulli"}, {"mean", beta}} : json{{"law", "negative_binomial"}, {"mean", beta}, {"c", 5.0}};
      noise_json = {{"kind", "dpp"}, {"rho", rho_z}, {"tau", 1.0 / std::sqrt(rho_z * pi)}, {"alpha", 1}};
    } else if (noise == "wper") {
      count = {{"law", "negative_binomial"}, {"mean", beta}, {"c", case1 ? 10.0 : 5.0}};
      noise_json = {{"kind", "permanental"}, {"rho", rho_z}, {"tau", 1.0}, {"alpha", 0.5}};
    } else {
      throw ConfigError("unknown preset '" + name + "'", 0);
    }
    const json model = {
        {"dim", 2},
        {"count", count},
        {"displacement", {{"kind", "gaussian"}, {"sigma", case1 ? 0.1 : 0.01}}},
        {"p", 1.0},
        {"q", 0.0},
        {"noise", noise_json},
        {"initial", {{"kind", "poisson"}, {"rho", 100.0}}},
    };
    return {{"name", name}, {"variants", json::array({{{"name", noise}, {"model", model}}})},
            {"run", {{"mode", "equilibrium"}, {"epsilon", 1e-3}, {"replicates", 1}}},
            {"theory", {{"limit", true}}},
            {"validate", {{"null_simulations", 2499}, {"level", 0.95}}},
            {"output", {{"directory", name}, {"statistics", {"pcf", "L", "J"}}}}};
  }
  throw ConfigError("unknown preset '" + name + "'", 0);
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  return {"fig1",          "fig2",         "fig2-dpp-centre", "fig3",      "case1-poisson", "case1-dpp",
          "case1-wper",    "case2-poisson", "case2-dpp",      "case2-wper"};
}

inline ExperimentConfig preset(const std::string& name) {
  const json doc = detail::preset_document(name);
  return config_from_json(doc, doc.dump(2));
}

// ---------------------------------------------------------------------------
// Model helpers

inline NoiseSpec initial_process(const InitialSpec& init) {
  if (init.kind == "poisson") return NoiseSpec::poisson(init.rho);
  if (init.kind == "dpp") return NoiseSpec::dpp(init.rho, init.tau, static_cast<int>(std::lround(init.alpha)));
  if (init.kind == "permanental") return NoiseSpec::permanental(init.rho, init.tau, init.alpha);
  throw DomainError("initial process '" + init.kind + "' is not a stationary point process");
}

/// Deterministic initial pattern or a draw of the stationary initial process on `window`.
inline PointPattern sample_initial(const InitialSpec& init, const Window& window, RandomStream rng) {
  if (init.kind == "empty") return PointPattern(window.dim());
  if (init.kind == "grid") {
    require(window.dim() == 2, "grid initial pattern is implemented for d = 2");
    PointPattern out(2);
    for (double y = window.lower()[1] + 0.5 * init.spacing; y < window.upper()[1]; y += init.spacing) {
      for (double x = window.lower()[0] + 0.5 * init.spacing; x < window.upper()[0]; x += init.spacing) {
        const std::array<double, 2> p{x, y};
        out.push_back(p);
      }
    }
    return out;
  }
  return sample_noise(initial_process(init), window, rng);
}

inline PcfConvention convention_of(const TheorySpec& t) {
  return t.convention == "display" ? PcfConvention::kLiteratureDisplay : PcfConvention::kKernelAnchored;
}

inline GenerationModel generation_model(const ChainParams& params, PcfConvention conv) {
  if (!params.f.is_gaussian()) {
    throw DomainError("closed-form PCFs require an isotropic Gaussian displacement density");
  }
  const int d = params.dim();
  return {params.beta(), params.nu(), params.f.gaussian_variance(), params.p, params.q,
          params.noise.rho(), reduced_pcf(params.noise, d, conv)};
}

inline PcfModelConfig pcf_model(const Variant& v, int n, PcfConvention conv) {
  PcfModelConfig cfg;
  cfg.dim = v.params.dim();
  cfg.rho0 = v.initial.rho;
  cfg.initial_pcf = reduced_pcf(initial_process(v.initial), cfg.dim, conv);
  cfg.generations.assign(static_cast<std::size_t>(n), generation_model(v.params, conv));
  return cfg;
}

inline SameSystem same_system(const Variant& v, PcfConvention conv) {
  const auto g = generation_model(v.params, conv);
  SameSystem s;
  s.dim = v.params.dim();
  s.beta = g.beta;
  s.nu = g.nu;
  s.sigma2 = g.sigma2;
  s.p = g.p;
  s.q = g.q;
  s.rho_z = g.rho_z;
  s.noise_pcf = g.noise_pcf;
  return s;
}

/// Intensity of the simulated generation (G_n in chain mode, G^st in equilibrium mode).
inline double model_intensity(const Variant& v, const RunSpec& run) {
  if (run.mode == "equilibrium") return v.params.noise.rho() / (1.0 - v.params.reproduction_mean());
  double rho = 0.0;
  if (v.initial.kind == "grid") {
    rho = std::pow(v.initial.spacing, -v.params.dim());
  } else if (v.initial.kind != "empty") {
    rho = v.initial.rho;
  }
  for (int i = 0; i < run.generations; ++i) rho = rho * v.params.reproduction_mean() + v.params.noise.rho();
  return rho;
}

/// One replicate of the configured run: G_n (chain) or G_0^st (equilibrium).
inline PointPattern simulate_replicate(const Variant& v, const RunSpec& run, RandomStream rng, Exec exec = {}) {
  if (run.mode == "equilibrium") {
    EquilibriumConfig eq{v.params, run.window, run.epsilon, run.buffer_multiplier};
    return simulate_equilibrium(eq, rng, exec);
  }
  const Window start =
      run.window.dilate(run.buffer_multiplier * std::sqrt(static_cast<double>(run.generations)) * v.params.f.scale());
  const PointPattern initial = sample_initial(v.initial, start, rng.split(StreamTag::kInitial));
  auto traces = simulate_chain(initial, v.params, run.generations, run.window, run.buffer_multiplier,
                               rng.split(StreamTag::kGeneration), exec);
  return std::move(traces.back().points);
}

inline RandomStream replicate_stream(const ExperimentConfig& c, std::size_t variant, std::size_t replicate) {
  return RandomStream(c.run.seed).split(StreamTag::kReplicate, variant).split(replicate);
}

// ---------------------------------------------------------------------------
// Commands

struct CommandResult {
  std::vector<std::filesystem::path> files;
  json report;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string(), 0);
  out << text;
}

inline std::string variant_stem(const ExperimentConfig& c, const Variant& v) {
  return c.variants.size() == 1 && v.name == "default" ? c.name : v.name;
}

}  // namespace detail

/// Per-replicate pattern CSVs plus manifest.json.
inline CommandResult cmd_simulate(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CommandResult result;
  json files = json::array();
  for (std::size_t vi = 0; vi < c.variants.size(); ++vi) {
    const auto& v = c.variants[vi];
    std::vector<PointPattern> patterns(static_cast<std::size_t>(c.run.replicates), PointPattern(v.params.dim()));
    const Exec inner{1};
    parallel_for(patterns.size(), c.run.threads, [&](std::size_t r) {
      patterns[r] = simulate_replicate(v, c.run, replicate_stream(c, vi, r), inner);
    });
    for (std::size_t r = 0; r < patterns.size(); ++r) {
      const auto name = detail::variant_stem(c, v) + "_rep" + std::to_string(r + 1) + ".csv";
      std::ostringstream os;
      write_pattern_csv(os, patterns[r]);
      detail::write_text(out_dir / name, os.str());
      result.files.push_back(out_dir / name);
      files.push_back({{"variant", v.name}, {"replicate", r + 1}, {"file", name}, {"points", patterns[r].size()}});
    }
  }
  json manifest = {{"tool", "iclust"},  {"version", kVersion},       {"command", "simulate"},
                   {"seed", c.run.seed}, {"config", config_to_json(c)}, {"files", files}};
  if (c.run.mode == "equilibrium") {
    json horizons = json::object();
    for (const auto& v : c.variants) {
      horizons[v.name] = EquilibriumConfig{v.params, c.run.window, c.run.epsilon, c.run.buffer_multiplier}.horizon();
    }
    manifest["horizon"] = horizons;
  }
  detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  result.files.push_back(out_dir / "manifest.json");
  result.report = manifest;
  return result;
}

inline std::vector<double> theory_r_grid(const ExperimentConfig& c) {
  return default_r_grid(c.run.window, c.output.r_steps, c.output.r_max);
}

inline void write_g_csv(const std::filesystem::path& path, const MixtureKernel& k, const std::vector<double>& r) {
  std::ostringstream os;
  os << "r,g\n";
  for (double x : r) {
    os << format_double(x) << ',';
    if (x == 0.0 && k.dirac() != 0.0) {
      os << "NA\n";
    } else {
      os << format_double(1.0 + k(x)) << '\n';
    }
  }
  detail::write_text(path, os.str());
}

/// Closed-form g curves and kernels per variant; gamma for same-system limits.
inline CommandResult cmd_theory(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CommandResult result;
  const auto conv = convention_of(c.theory);
  const auto r = theory_r_grid(c);
  json report = {{"tool", "iclust"}, {"version", kVersion}, {"command", "theory"},
                 {"convention", c.theory.convention}, {"variants", json::object()}};
  for (const auto& v : c.variants) {
    const auto stem = detail::variant_stem(c, v);
    json entry = json::object();
    auto emit = [&](const std::string& tag, const MixtureKernel& k) {
      const auto csv = out_dir / (stem + "_" + tag + ".csv");
      const auto js = out_dir / (stem + "_" + tag + ".json");
      write_g_csv(csv, k, r);
      detail::write_text(js, kernel_to_json(k).dump(2) + "\n");
      result.files.push_back(csv);
      result.files.push_back(js);
    };
    if (c.run.mode == "chain") {
      for (int n : c.theory.generations) {
        const auto kernel = pcf_generation_n(pcf_model(v, n, conv), n);
        emit("g" + std::to_string(n), kernel);
        entry["generations"][std::to_string(n)] = {{"intensity", model_intensity(v, {c.run.mode, n})},
                                                    {"components", kernel.components().size()}};
      }
    }
    if (c.theory.limit || c.run.mode == "equilibrium") {
      const auto sys = same_system(v, conv);
      const auto limit = pcf_limit(sys, c.theory.limit_tolerance);
      emit("limit", limit.kernel());
      const auto sys_display = same_system(v, PcfConvention::kLiteratureDisplay);
      const double b = sys.noise_pcf.total_weight();
      const double b_display = sys_display.noise_pcf.total_weight();
      entry["limit"] = {
          {"rho_G", sys.stationary_intensity()},
          {"gamma", gamma_index(sys.beta, sys.nu, sys.p, sys.q, sys.rho_z, b)},
          {"gamma_display_constants", gamma_index(sys.beta, sys.nu, sys.p, sys.q, sys.rho_z, b_display)},
          {"kernel_total_weight", limit.kernel().total_weight()},
          {"truncation_bound", limit.truncation_bound()},
      };
    }
    report["variants"][v.name] = entry;
  }
  // gnuplot script over the curve files, with r on the x axis.
  std::ostringstream gp;
  gp << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'r'\nset ylabel 'g(r)'\nplot";
  bool first = true;
  for (const auto& f : result.files) {
    if (f.extension() != ".csv") continue;
    gp << (first ? " " : ", \\\n     ") << "'" << f.filename().string() << "' using 1:2 with lines title '"
       << f.stem().string() << "'";
    first = false;
  }
  gp << "\n";
  detail::write_text(out_dir / "plot.gp", gp.str());
  result.files.push_back(out_dir / "plot.gp");
  detail::write_text(out_dir / "theory.json", report.dump(2) + "\n");
  result.files.push_back(out_dir / "theory.json");
  result.report = report;
  return result;
}

// ---------------------------------------------------------------------------
// Validation against a Poisson null with matched intensity

struct StatisticSettings {
  Statistic statistic;
  std::vector<double> r;
  double bandwidth;
};

inline SummaryCurve compute_statistic(const StatisticSettings& s, const PointPattern& x, const Window& w) {
  switch (s.statistic) {
    case Statistic::kPcf: return empirical_pcf(x, w, s.bandwidth, s.r);
    case Statistic::kL: return l_function(x, w, s.r);
    case Statistic::kJ: return j_function(x, w, s.r);
    default: throw DomainError("unsupported statistic");
  }
}

inline Statistic statistic_from_name(const std::string& s) {
  if (s == "pcf") return Statistic::kPcf;
  if (s == "L") return Statistic::kL;
  if (s == "J") return Statistic::kJ;
  throw DomainError("unknown statistic " + s);
}

inline StatisticSettings statistic_settings(const ExperimentConfig& c, const std::string& name, double intensity) {
  const Statistic s = statistic_from_name(name);
  StatisticSettings out{s, {}, 0.0};
  if (s == Statistic::kJ) {
    out.r = default_r_grid(c.run.window, c.output.r_steps, c.validate.j_r_max);
  } else {
    out.r = default_r_grid(c.run.window, c.output.r_steps, c.output.r_max);
    out.r.erase(out.r.begin());  // r = 0 is undefined for the PCF and trivial for L
  }
  out.bandwidth = c.output.bandwidth > 0.0 ? c.output.bandwidth : default_bandwidth(intensity);
  return out;
}

/// Null curves for each statistic from `count` Poisson patterns of the given intensity.
inline std::vector<std::vector<SummaryCurve>> poisson_null_curves(const std::vector<StatisticSettings>& stats,
                                                                  double intensity, const Window& w, int count,
                                                                  RandomStream rng, unsigned threads) {
  std::vector<std::vector<SummaryCurve>> out(stats.size(), std::vector<SummaryCurve>(static_cast<std::size_t>(count)));
  parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
    const auto x = sample_poisson(intensity, w, rng.split(StreamTag::kNull, i));
    for (std::size_t s = 0; s < stats.size(); ++s) out[s][i] = compute_statistic(stats[s], x, w);
  });
  return out;
}

/// Each replicate is tested against the same Poisson null envelope; the
/// verdict is the majority over replicates.
inline CommandResult cmd_validate(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CommandResult result;
  json report = {{"tool", "iclust"}, {"version", kVersion}, {"command", "validate"},
                 {"seed", c.run.seed}, {"null_simulations", c.validate.null_simulations},
                 {"level", c.validate.level}, {"variants", json::object()}};
  for (std::size_t vi = 0; vi < c.variants.size(); ++vi) {
    const auto& v = c.variants[vi];
    const auto stem = detail::variant_stem(c, v);
    const double intensity = model_intensity(v, c.run);
    std::vector<StatisticSettings> stats;
    for (const auto& s : c.output.statistics) stats.push_back(statistic_settings(c, s, intensity));
    const auto null = poisson_null_curves(stats, intensity, c.run.window, c.validate.null_simulations,
                                          RandomStream(c.run.seed).split(StreamTag::kNull, vi), c.run.threads);
    std::vector<PointPattern> patterns(static_cast<std::size_t>(c.run.replicates), PointPattern(v.params.dim()));
    parallel_for(patterns.size(), c.run.threads, [&](std::size_t r) {
      patterns[r] = simulate_replicate(v, c.run, replicate_stream(c, vi, r));
    });
    json entry = {{"intensity", intensity}, {"statistics", json::object()}};
    for (std::size_t s = 0; s < stats.size(); ++s) {
      int inside = 0;
      json p_values = json::array();
      for (std::size_t r = 0; r < patterns.size(); ++r) {
        const auto observed = compute_statistic(stats[s], patterns[r], c.run.window);
        const auto env = global_rank_envelope(observed, null[s], c.validate.level);
        inside += env.inside ? 1 : 0;
        p_values.push_back(env.p_value);
        if (r == 0) {
          const auto base = stem + "_" + c.output.statistics[s];
          std::ostringstream env_csv, curve_csv;
          write_envelope_csv(env_csv, env);
          write_curve_csv(curve_csv, observed);
          detail::write_text(out_dir / (base + "_envelope.csv"), env_csv.str());
          detail::write_text(out_dir / (base + "_curve.csv"), curve_csv.str());
          result.files.push_back(out_dir / (base + "_envelope.csv"));
          result.files.push_back(out_dir / (base + "_curve.csv"));
        }
      }
      const int n = c.run.replicates;
      entry["statistics"][c.output.statistics[s]] = {
          {"inside", inside},
          {"replicates", n},
          {"verdict", 2 * inside > n ? "inside" : "outside"},
          {"p_values", p_values}};
    }
    report["variants"][v.name] = entry;
  }
  detail::write_text(out_dir / "verdicts.json", report.dump(2) + "\n");
  result.files.push_back(out_dir / "verdicts.json");
  result.report = report;
  return result;
}

}  // namespace iclust
