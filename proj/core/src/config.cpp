#include "bdsim/config.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace bdsim {
namespace {

Vec vec_from_floats(const std::vector<double>& xs, const char* what) {
  if (xs.empty() || xs.size() > kMaxDim)
    throw ConfigError(std::string(what) + " must have 1..3 entries");
  Vec v;
  v.dim = static_cast<int>(xs.size());
  for (int i = 0; i < v.dim; ++i) v.c[static_cast<size_t>(i)] = xs[static_cast<size_t>(i)];
  return v;
}

}  // namespace

ExperimentConfig ExperimentConfig::reference() {
  ExperimentConfig c;
  c.resolve();
  return c;
}

void ExperimentConfig::resolve() {
  if (beta_spec == "critical") {
    beta = critical_beta(first_eigenpair(domain).lambda(), offspring.mean());
  } else {
    beta = std::stod(beta_spec);
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  }
  if (!domain.contains(x0))
    throw ConfigError("x0 must lie inside the open domain");
  constants = model_constants(domain, offspring, x0);
}

ExperimentConfig ExperimentConfig::from_toml(const TomlDoc& doc) {
  ExperimentConfig c;

  const TomlTable& model = doc.section("model");
  auto get = [](const TomlTable& t, const char* key) -> const TomlValue* {
    const auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
  };

  std::vector<double> lo{0.0}, hi{3.141592653589793}, coeff;
  if (const TomlValue* v = get(model, "domain_lo")) lo = v->as_float_array();
  if (const TomlValue* v = get(model, "domain_hi")) hi = v->as_float_array();
  if (const TomlValue* v = get(model, "coeff")) coeff = v->as_float_array();
  if (lo.size() != hi.size())
    throw ConfigError("domain_lo and domain_hi must have the same length");
  std::vector<std::array<double, 2>> bounds;
  for (size_t i = 0; i < lo.size(); ++i)
    bounds.push_back({lo[i], hi[i]});
  c.domain = Domain::box(bounds, coeff);

  if (const TomlValue* v = get(model, "x0")) {
    c.x0 = vec_from_floats(v->as_float_array(), "x0");
  } else {
    Vec mid;
    mid.dim = c.domain.dim();
    for (int i = 0; i < mid.dim; ++i)
      mid.c[static_cast<size_t>(i)] = 0.5 * (c.domain.lo(i) + c.domain.hi(i));
    c.x0 = mid;
  }

  const TomlValue* ks = get(model, "offspring_k");
  const TomlValue* ps = get(model, "offspring_p");
  if ((ks == nullptr) != (ps == nullptr))
    throw ConfigError("offspring_k and offspring_p must be given together");
  if (ks != nullptr) {
    std::vector<int> kk;
    for (const TomlValue& v : ks->as_array())
      kk.push_back(static_cast<int>(v.as_int()));
    c.offspring = OffspringDistribution(kk, ps->as_float_array());
  }

  if (const TomlValue* v = get(model, "beta")) {
    if (v->is_string()) {
      if (v->as_string() != "critical")
        throw ConfigError("beta must be a number or \"critical\"");
      c.beta_spec = "critical";
    } else {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v->as_float());
      c.beta_spec = buf;
    }
  }

  const TomlTable& sim = doc.section("simulation");
  if (const TomlValue* v = get(sim, "h")) c.step.h = v->as_float();
  if (!(c.step.h > 0.0)) throw ConfigError("h must be positive");
  if (const TomlValue* v = get(sim, "bridge_correction"))
    c.step.bridge_correction = v->as_bool();
  if (const TomlValue* v = get(sim, "particle_cap")) c.particle_cap = v->as_int();
  if (c.particle_cap < 1) throw ConfigError("particle_cap must be >= 1");
  if (const TomlValue* v = get(sim, "path_stride"))
    c.path_stride = static_cast<int>(v->as_int());
  if (c.path_stride < 1) throw ConfigError("path_stride must be >= 1");

  const TomlTable& run = doc.section("run");
  if (const TomlValue* v = get(run, "seed"))
    c.seed = static_cast<uint64_t>(v->as_int());
  if (const TomlValue* v = get(run, "replicas")) c.replicas = v->as_int();
  if (c.replicas < 1) throw ConfigError("replicas must be >= 1");
  if (const TomlValue* v = get(run, "horizon")) c.horizon = v->as_float();
  if (!(c.horizon > 0.0)) throw ConfigError("horizon must be positive");

  const TomlTable& tol = doc.section("tolerances");
  if (const TomlValue* v = get(tol, "p_value")) c.tolerances.p_value = v->as_float();
  if (const TomlValue* v = get(tol, "z_limit")) c.tolerances.z_limit = v->as_float();
  if (const TomlValue* v = get(tol, "survival_rel"))
    c.tolerances.survival_rel = v->as_float();
  if (const TomlValue* v = get(tol, "var_rel")) c.tolerances.var_rel = v->as_float();
  if (const TomlValue* v = get(tol, "q90_norm")) c.tolerances.q90_norm = v->as_float();
  if (const TomlValue* v = get(tol, "exact_abs")) c.tolerances.exact_abs = v->as_float();
  if (const TomlValue* v = get(tol, "phase_flat")) c.tolerances.phase_flat = v->as_float();
  if (const TomlValue* v = get(tol, "phase_decay"))
    c.tolerances.phase_decay = v->as_float();

  c.resolve();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_toml(toml_parse_file(path));
}

SimulationParams ExperimentConfig::simulation_params() const {
  SimulationParams p;
  p.domain = domain;
  p.offspring = offspring;
  p.beta = beta;
  p.x0 = x0;
  p.horizon = horizon;
  p.particle_cap = particle_cap;
  p.step = step;
  p.path_stride = path_stride;
  return p;
}

std::string ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["model"]["domain_lo"] = nlohmann::json::array();
  j["model"]["domain_hi"] = nlohmann::json::array();
  j["model"]["coeff"] = nlohmann::json::array();
  for (int i = 0; i < domain.dim(); ++i) {
    j["model"]["domain_lo"].push_back(domain.lo(i));
    j["model"]["domain_hi"].push_back(domain.hi(i));
    j["model"]["coeff"].push_back(domain.coeff(i));
  }
  j["model"]["x0"] = nlohmann::json::array();
  for (int i = 0; i < x0.dim; ++i) j["model"]["x0"].push_back(x0[i]);
  j["model"]["offspring_k"] = nlohmann::json::array();
  j["model"]["offspring_p"] = nlohmann::json::array();
  for (int k = 0; k <= offspring.max_k(); ++k) {
    if (offspring.pmf(k) == 0.0) continue;
    j["model"]["offspring_k"].push_back(k);
    j["model"]["offspring_p"].push_back(offspring.pmf(k));
  }
  j["model"]["beta_spec"] = beta_spec;
  j["model"]["beta"] = beta;
  j["simulation"]["h"] = step.h;
  j["simulation"]["bridge_correction"] = step.bridge_correction;
  j["simulation"]["particle_cap"] = particle_cap;
  j["simulation"]["path_stride"] = path_stride;
  j["run"]["seed"] = seed;
  j["run"]["replicas"] = replicas;
  j["run"]["horizon"] = horizon;
  j["tolerances"]["p_value"] = tolerances.p_value;
  j["tolerances"]["z_limit"] = tolerances.z_limit;
  j["tolerances"]["survival_rel"] = tolerances.survival_rel;
  j["tolerances"]["var_rel"] = tolerances.var_rel;
  j["tolerances"]["q90_norm"] = tolerances.q90_norm;
  j["tolerances"]["exact_abs"] = tolerances.exact_abs;
  j["tolerances"]["phase_flat"] = tolerances.phase_flat;
  j["tolerances"]["phase_decay"] = tolerances.phase_decay;
  j["constants"]["lambda1"] = constants.lambda1;
  j["constants"]["beta_critical"] = constants.beta_critical;
  j["constants"]["int_phi"] = constants.int_phi;
  j["constants"]["int_phi3"] = constants.int_phi3;
  j["constants"]["b"] = constants.b;
  j["constants"]["sigma2"] = constants.sigma2;
  j["constants"]["phi_x0"] = constants.phi_x0;
  return j.dump(2);
}

}  // namespace bdsim
