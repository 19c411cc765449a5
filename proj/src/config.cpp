#include "mosquito/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "mosquito/io.hpp"

namespace mosquito {

using nlohmann::json;

namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "$" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

const json& require(const json& obj, const std::string& parent, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(join(parent, key), "missing required key");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

double number_or(const json& obj, const std::string& parent, const std::string& key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), join(parent, key)) : fallback;
}

int count(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

MortalityModel parse_mortality(const json& j) {
  const std::string path = "mu";
  reject_unknown(j, path, {"type", "m0", "c", "N"});
  MortalityModel m;
  const std::string type = text(require(j, path, "type"), "mu.type");
  m.m0 = number_or(j, path, "m0", 0.0);
  m.c = number_or(j, path, "c", 0.0);
  if (type == "constant") {
    m.kind = MortalityModel::Kind::constant;
    if (j.contains("N")) m.truncation = number(j.at("N"), "mu.N");
  } else if (type == "blowup") {
    m.kind = MortalityModel::Kind::blowup;
    if (!j.contains("N")) throw ConfigError("mu.N", "blowup mortality requires a truncation level N");
    m.truncation = number(j.at("N"), "mu.N");
    if (!(m.c >= 0.0)) throw ConfigError("mu.c", "must be nonnegative");
  } else {
    throw ConfigError("mu.type", "expected 'constant' or 'blowup'");
  }
  if (!(m.truncation > 0.0)) throw ConfigError("mu.N", "must be positive");
  return m;
}

FertilityModel parse_fertility(const json& j) {
  const std::string path = "beta";
  reject_unknown(j, path, {"type", "b0", "a_lo", "a_hi"});
  FertilityModel f;
  const std::string type = text(require(j, path, "type"), "beta.type");
  f.b0 = number_or(j, path, "b0", 0.0);
  if (type == "constant") {
    f.kind = FertilityModel::Kind::constant;
  } else if (type == "bump") {
    f.kind = FertilityModel::Kind::bump;
    f.a_lo = number(require(j, path, "a_lo"), "beta.a_lo");
    f.a_hi = number(require(j, path, "a_hi"), "beta.a_hi");
    if (!(f.a_hi > f.a_lo)) throw ConfigError("beta.a_hi", "must exceed beta.a_lo");
  } else {
    throw ConfigError("beta.type", "expected 'constant' or 'bump'");
  }
  return f;
}

Slice<double> parse_p0(const json& j, const Grid<double>& g, const std::filesystem::path& base) {
  const std::string path = "p0";
  reject_unknown(j, path, {"type", "value", "mean", "amplitude", "mode", "path"});
  const std::string type = text(require(j, path, "type"), "p0.type");
  Slice<double> p0(g.n_a + 1, g.n_x);
  if (type == "constant") {
    p0.setConstant(number(require(j, path, "value"), "p0.value"));
  } else if (type == "cosine") {
    const double mean = number_or(j, path, "mean", 1.0);
    const double amplitude = number_or(j, path, "amplitude", 0.5);
    const int mode = j.contains("mode") ? count(j.at("mode"), "p0.mode") : 1;
    for (int k = 0; k < g.n_x; ++k) {
      p0.col(k).setConstant(mean + amplitude * std::cos(2.0 * M_PI * mode * g.x_center(k) / kDayHours));
    }
  } else if (type == "csv") {
    const auto file = resolve(base, text(require(j, path, "path"), "p0.path"));
    try {
      p0 = io::read_age_slice_csv(file, g);
    } catch (const std::runtime_error& e) {
      throw ConfigError("p0.path", e.what());
    }
  } else {
    throw ConfigError("p0.type", "expected 'constant', 'cosine' or 'csv'");
  }
  return p0;
}

// Either a number or {"csv": path} holding a Field.
Field<double> parse_field_value(const json& j, const std::string& path, const Grid<double>& g,
                                const std::filesystem::path& base) {
  if (j.is_number()) return Field<double>(g, number(j, path));
  reject_unknown(j, path, {"csv"});
  const auto file = resolve(base, text(require(j, path, "csv"), join(path, "csv")));
  try {
    return io::read_field_csv(file, g);
  } catch (const std::runtime_error& e) {
    throw ConfigError(join(path, "csv"), e.what());
  }
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc, "", {"a_max", "t_max", "n_a", "n_x", "delta", "eta", "mu", "beta", "p0", "f", "bounds",
                           "birth_wrap", "forward", "sweep", "trials"});
  RunConfig cfg;
  cfg.source = doc;

  const double a_max = number(require(doc, "", "a_max"), "a_max");
  const double t_max = number(require(doc, "", "t_max"), "t_max");
  const int n_a = count(require(doc, "", "n_a"), "n_a");
  const int n_x = count(require(doc, "", "n_x"), "n_x");
  Grid<double> g;
  try {
    g = make_grid<double>(a_max, t_max, n_a, n_x);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("t_max", e.what());
  }

  const double delta = number(require(doc, "", "delta"), "delta");
  const double eta = number(require(doc, "", "eta"), "eta");
  bool wrap = false;
  if (doc.contains("birth_wrap")) {
    if (!doc.at("birth_wrap").is_boolean()) throw ConfigError("birth_wrap", "expected a boolean");
    wrap = doc.at("birth_wrap").get<bool>();
  }
  cfg.mortality = parse_mortality(require(doc, "", "mu"));
  cfg.fertility = parse_fertility(require(doc, "", "beta"));

  auto& d = cfg.data;
  d.grid = g;
  d.rates = make_vital_rates(g, cfg.mortality, cfg.fertility, delta, eta, wrap);
  d.p0 = parse_p0(require(doc, "", "p0"), g, base_dir);
  d.f = Field<double>(g);
  if (doc.contains("f")) {
    const json& f = doc.at("f");
    d.f = f.is_object() && f.contains("type")
              ? Field<double>(g, number(require(f, "f", "value"), "f.value"))
              : parse_field_value(f, "f", g, base_dir);
  }
  const json& bounds = require(doc, "", "bounds");
  reject_unknown(bounds, "bounds", {"sigma1", "sigma2"});
  d.bounds.sigma1 = parse_field_value(require(bounds, "bounds", "sigma1"), "bounds.sigma1", g, base_dir);
  d.bounds.sigma2 = parse_field_value(require(bounds, "bounds", "sigma2"), "bounds.sigma2", g, base_dir);

  if (doc.contains("forward")) {
    const json& j = doc.at("forward");
    reject_unknown(j, "forward", {"fp_tol", "fp_max_iter"});
    cfg.forward.fp_tol = number_or(j, "forward", "fp_tol", cfg.forward.fp_tol);
    if (j.contains("fp_max_iter")) cfg.forward.fp_max_iter = count(j.at("fp_max_iter"), "forward.fp_max_iter");
    if (!(cfg.forward.fp_tol > 0)) throw ConfigError("forward.fp_tol", "must be positive");
    if (cfg.forward.fp_max_iter < 1) throw ConfigError("forward.fp_max_iter", "must be at least 1");
  }
  if (doc.contains("sweep")) {
    const json& j = doc.at("sweep");
    reject_unknown(j, "sweep", {"omega", "tol", "max_iter", "band", "eps_fd"});
    auto& s = cfg.sweep;
    s.relaxation = number_or(j, "sweep", "omega", s.relaxation);
    s.u_tol = number_or(j, "sweep", "tol", s.u_tol);
    s.switch_band = number_or(j, "sweep", "band", s.switch_band);
    s.eps_fd = number_or(j, "sweep", "eps_fd", s.eps_fd);
    if (j.contains("max_iter")) s.max_iter = count(j.at("max_iter"), "sweep.max_iter");
    if (!(s.relaxation > 0 && s.relaxation <= 1)) throw ConfigError("sweep.omega", "must lie in (0, 1]");
    if (!(s.u_tol > 0)) throw ConfigError("sweep.tol", "must be positive");
    if (!(s.switch_band >= 0)) throw ConfigError("sweep.band", "must be nonnegative");
    if (s.max_iter < 1) throw ConfigError("sweep.max_iter", "must be at least 1");
  }
  if (doc.contains("trials")) {
    const json& j = doc.at("trials");
    reject_unknown(j, "trials", {"mu_max", "beta_max", "p0_max", "f_max", "b_max", "delta_max", "eta_min", "eta_max"});
    auto& t = cfg.trials;
    t.mu_max = number_or(j, "trials", "mu_max", t.mu_max);
    t.beta_max = number_or(j, "trials", "beta_max", t.beta_max);
    t.p0_max = number_or(j, "trials", "p0_max", t.p0_max);
    t.f_max = number_or(j, "trials", "f_max", t.f_max);
    t.b_max = number_or(j, "trials", "b_max", t.b_max);
    t.delta_max = number_or(j, "trials", "delta_max", t.delta_max);
    t.eta_min = number_or(j, "trials", "eta_min", t.eta_min);
    t.eta_max = number_or(j, "trials", "eta_max", t.eta_max);
    if (!(t.eta_min > 0 && t.eta_max <= kDayHours && t.eta_min <= t.eta_max)) {
      throw ConfigError("trials.eta_min", "eta range must lie in (0, 24]");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("$", "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

std::uint64_t config_digest(const json& doc) {
  const std::string canonical = doc.dump();  // nlohmann objects keep keys sorted
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json config_schema() {
  const json num = {{"type", "number"}};
  const json integer = {{"type", "integer"}};
  const json field_value = {{"oneOf", json::array({num, {{"type", "object"},
                                                         {"properties", {{"csv", {{"type", "string"}}}}},
                                                         {"required", {"csv"}},
                                                         {"additionalProperties", false}}})}};
  json schema = {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "mosquito-control run configuration"},
      {"type", "object"},
      {"additionalProperties", false},
      {"required", {"a_max", "t_max", "n_a", "n_x", "delta", "eta", "mu", "beta", "p0", "bounds"}},
      {"properties",
       {{"a_max", num},
        {"t_max", {{"type", "number"}, {"description", "integer multiple of a_max / n_a"}}},
        {"n_a", {{"type", "integer"}, {"minimum", 2}}},
        {"n_x", {{"type", "integer"}, {"minimum", 2}}},
        {"delta", {{"type", "number"}, {"minimum", 0}}},
        {"eta", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 24}}},
        {"birth_wrap", {{"type", "boolean"}, {"default", false}}},
        {"mu",
         {{"type", "object"},
          {"properties",
           {{"type", {{"enum", {"constant", "blowup"}}}}, {"m0", num}, {"c", num}, {"N", num}}},
          {"required", {"type"}}}},
        {"beta",
         {{"type", "object"},
          {"properties", {{"type", {{"enum", {"constant", "bump"}}}}, {"b0", num}, {"a_lo", num}, {"a_hi", num}}},
          {"required", {"type"}}}},
        {"p0",
         {{"type", "object"},
          {"properties",
           {{"type", {{"enum", {"constant", "cosine", "csv"}}}},
            {"value", num},
            {"mean", num},
            {"amplitude", num},
            {"mode", integer},
            {"path", {{"type", "string"}}}}},
          {"required", {"type"}}}},
        {"f", field_value},
        {"bounds",
         {{"type", "object"},
          {"properties", {{"sigma1", field_value}, {"sigma2", field_value}}},
          {"required", {"sigma1", "sigma2"}}}},
        {"forward",
         {{"type", "object"}, {"properties", {{"fp_tol", num}, {"fp_max_iter", integer}}}}},
        {"sweep",
         {{"type", "object"},
          {"properties",
           {{"omega", {{"type", "number"}, {"default", 0.5}}},
            {"tol", {{"type", "number"}, {"default", 1e-10}}},
            {"max_iter", {{"type", "integer"}, {"default", 200}}},
            {"band", {{"type", "number"}, {"default", 1e-8}}},
            {"eps_fd", {{"type", "number"}, {"default", 1e-4}}}}}}},
        {"trials",
         {{"type", "object"},
          {"description", "ranges for latin-hypercube draws in randomized verification"},
          {"properties",
           {{"mu_max", {{"type", "number"}, {"default", 1.5}}},
            {"beta_max", {{"type", "number"}, {"default", 2.0}}},
            {"p0_max", {{"type", "number"}, {"default", 2.0}}},
            {"f_max", {{"type", "number"}, {"default", 0.5}}},
            {"b_max", {{"type", "number"}, {"default", 2.0}}},
            {"delta_max", {{"type", "number"}, {"default", 1.0}}},
            {"eta_min", {{"type", "number"}, {"default", 0.5}}},
            {"eta_max", {{"type", "number"}, {"default", 12.0}}}}}}}}}};
  return schema;
}

}  // namespace mosquito
