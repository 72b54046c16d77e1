#include "anosov/cli.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace anosov::cli {

using nlohmann::json;

namespace {

std::string describe(const json& v) {
  std::string s = v.dump();
  return s.size() > 60 ? s.substr(0, 57) + "..." : s;
}

double as_number(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError(key + ": expected a number, got " + describe(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key + ": must be finite");
  return x;
}

double positive(const std::string& key, const json& v) {
  const double x = as_number(key, v);
  if (!(x > 0.0)) throw ConfigError(key + ": must be > 0");
  return x;
}

int as_int(const std::string& key, const json& v, int lo) {
  if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer, got " + describe(v));
  const auto x = v.get<long long>();
  if (x < lo || x > 1'000'000'000) throw ConfigError(key + ": out of range");
  return static_cast<int>(x);
}

std::uint64_t as_seed(const std::string& key, const json& v) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ConfigError(key + ": expected a non-negative integer, got " + describe(v));
  return v.get<std::uint64_t>();
}

std::vector<double> as_numbers(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError(key + ": expected an array of numbers");
  std::vector<double> out;
  for (const json& x : v) out.push_back(as_number(key, x));
  return out;
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) throw ConfigError(key + ": expected a string, got " + describe(v));
  return v.get<std::string>();
}

struct Field {
  KeyInfo info;
  std::function<void(ExperimentConfig&, const json&)> set;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {{"backend", "string", "\"algebraic\""},
       [](ExperimentConfig& c, const json& v) {
         c.backend = as_string("backend", v);
         if (c.backend != "algebraic" && c.backend != "perturbed" && c.backend != "suspension" &&
             c.backend != "hopf")
           throw ConfigError("backend: expected algebraic, perturbed, suspension or hopf");
       }},
      {{"algebraic.lambda0", "number", "1.0"},
       [](ExperimentConfig& c, const json& v) { c.lambda0 = positive("algebraic.lambda0", v); }},
      {{"perturbed.centers", "array of [x, y]", "[]"},
       [](ExperimentConfig& c, const json& v) {
         if (!v.is_array()) throw ConfigError("perturbed.centers: expected an array of [x, y]");
         c.conformal.centers.clear();
         for (const json& p : v) {
           if (!p.is_array() || p.size() != 2)
             throw ConfigError("perturbed.centers: each centre must be [x, y]");
           c.conformal.centers.emplace_back(as_number("perturbed.centers", p[0]),
                                            as_number("perturbed.centers", p[1]));
         }
       }},
      {{"perturbed.amplitudes", "array of number", "[]"},
       [](ExperimentConfig& c, const json& v) {
         c.conformal.amplitudes = as_numbers("perturbed.amplitudes", v);
       }},
      {{"perturbed.width", "number", "1.0"},
       [](ExperimentConfig& c, const json& v) {
         c.conformal.width = positive("perturbed.width", v);
       }},
      {{"perturbed.max_amplitude", "number", "0.1"},
       [](ExperimentConfig& c, const json& v) {
         c.conformal.max_amplitude = positive("perturbed.max_amplitude", v);
       }},
      {{"perturbed.warmup", "number", "20.0"},
       [](ExperimentConfig& c, const json& v) {
         c.perturbed_warmup = positive("perturbed.warmup", v);
       }},
      {{"perturbed.dt_max", "number", "0.01"},
       [](ExperimentConfig& c, const json& v) {
         c.perturbed_dt_max = positive("perturbed.dt_max", v);
       }},
      {{"suspension.epsilon", "number", "0.02"},
       [](ExperimentConfig& c, const json& v) {
         c.suspension.epsilon = as_number("suspension.epsilon", v);
       }},
      {{"suspension.delta", "number", "0.3"},
       [](ExperimentConfig& c, const json& v) {
         c.suspension.delta = as_number("suspension.delta", v);
       }},
      {{"suspension.warmup_iterations", "integer", "50"},
       [](ExperimentConfig& c, const json& v) {
         c.suspension.warmup_iterations = as_int("suspension.warmup_iterations", v, 1);
       }},
      {{"orbit.dt", "number", "0.01"},
       [](ExperimentConfig& c, const json& v) { c.dt = positive("orbit.dt", v); }},
      {{"orbit.duration", "number", "100.0"},
       [](ExperimentConfig& c, const json& v) { c.duration = positive("orbit.duration", v); }},
      {{"orbit.ensemble", "integer", "4"},
       [](ExperimentConfig& c, const json& v) { c.ensemble = as_int("orbit.ensemble", v, 1); }},
      {{"orbit.seed", "integer", "1"},
       [](ExperimentConfig& c, const json& v) { c.seed = as_seed("orbit.seed", v); }},
      {{"orbit.seeds", "array of integer", "[] (use seed, seed+1, ...)"},
       [](ExperimentConfig& c, const json& v) {
         if (!v.is_array()) throw ConfigError("orbit.seeds: expected an array of integers");
         c.seeds.clear();
         for (const json& s : v) c.seeds.push_back(as_seed("orbit.seeds", s));
       }},
      {{"metric.f", "array of number", "[] (f = 0)"},
       [](ExperimentConfig& c, const json& v) { c.metric_f = as_numbers("metric.f", v); }},
      {{"metric.theta", "array of number", "[] (theta = pi/2)"},
       [](ExperimentConfig& c, const json& v) { c.metric_theta = as_numbers("metric.theta", v); }},
      {{"metric.basis_width", "number", "0.4"},
       [](ExperimentConfig& c, const json& v) {
         c.basis_width = positive("metric.basis_width", v);
       }},
      {{"metric.theta_margin", "number", "0.1"},
       [](ExperimentConfig& c, const json& v) {
         c.theta_margin = positive("metric.theta_margin", v);
         if (c.theta_margin >= M_PI / 2) throw ConfigError("metric.theta_margin: must be < pi/2");
       }},
      {{"realize.eta", "array of number", "[] (eta = 0)"},
       [](ExperimentConfig& c, const json& v) { c.realize_eta = as_numbers("realize.eta", v); }},
      {{"realize.sigma", "array of number", "[] (sigma = 0)"},
       [](ExperimentConfig& c, const json& v) {
         c.realize_sigma = as_numbers("realize.sigma", v);
       }},
      {{"uniformize.T", "array of number", "[1, 4, 16, 64]"},
       [](ExperimentConfig& c, const json& v) {
         c.uniformize_T = as_numbers("uniformize.T", v);
         if (c.uniformize_T.empty()) throw ConfigError("uniformize.T: must not be empty");
         for (double t : c.uniformize_T)
           if (!(t > 0.0)) throw ConfigError("uniformize.T: entries must be > 0");
       }},
      {{"uniformize.eps_policy", "string", "\"spread\""},
       [](ExperimentConfig& c, const json& v) {
         c.eps_policy = as_string("uniformize.eps_policy", v);
         if (c.eps_policy != "spread" && c.eps_policy != "inverse_square" &&
             c.eps_policy != "fixed")
           throw ConfigError("uniformize.eps_policy: expected spread, inverse_square or fixed");
       }},
      {{"uniformize.eps", "number", "0 (required when eps_policy is fixed)"},
       [](ExperimentConfig& c, const json& v) { c.eps = positive("uniformize.eps", v); }},
      {{"uniformize.horizon", "number", "horizon_factor max(T, 1/eps), capped by the orbit"},
       [](ExperimentConfig& c, const json& v) { c.horizon = positive("uniformize.horizon", v); }},
      {{"uniformize.horizon_factor", "number", "5"},
       [](ExperimentConfig& c, const json& v) {
         c.horizon_factor = as_number("uniformize.horizon_factor", v);
         if (!(c.horizon_factor >= 5.0)) throw ConfigError("uniformize.horizon_factor: must be >= 5");
       }},
      {{"uniformize.tolerance", "number", "1e-4"},
       [](ExperimentConfig& c, const json& v) {
         c.uniformize_tolerance = positive("uniformize.tolerance", v);
       }},
      {{"optimize.budget", "integer", "0 (no optimization)"},
       [](ExperimentConfig& c, const json& v) {
         c.optimize_budget = as_int("optimize.budget", v, 0);
       }},
      {{"optimize.step", "number", "0.05"},
       [](ExperimentConfig& c, const json& v) { c.optimize_step = positive("optimize.step", v); }},
      {{"optimize.samples_per_orbit", "integer", "2000"},
       [](ExperimentConfig& c, const json& v) {
         c.samples_per_orbit = as_int("optimize.samples_per_orbit", v, 1);
       }},
      {{"output.dir", "string", "\"out\""},
       [](ExperimentConfig& c, const json& v) { c.output_dir = as_string("output.dir", v); }},
      {{"output.stride", "integer", "1"},
       [](ExperimentConfig& c, const json& v) { c.output_stride = as_int("output.stride", v, 1); }},
  };
  return f;
}

void flatten(const json& v, const std::string& prefix, std::map<std::string, json>& out) {
  if (v.is_object()) {
    for (const auto& [k, x] : v.items()) flatten(x, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  if (out.count(prefix)) throw ConfigError("duplicate key: " + prefix);
  out[prefix] = v;
}

}  // namespace

const std::vector<KeyInfo>& config_schema() {
  static const std::vector<KeyInfo> schema = [] {
    std::vector<KeyInfo> s;
    for (const Field& f : fields()) s.push_back(f.info);
    return s;
  }();
  return schema;
}

std::vector<std::uint64_t> ExperimentConfig::orbit_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int k = 0; k < ensemble; ++k) out.push_back(seed + static_cast<std::uint64_t>(k));
  return out;
}

Eigen::Index ExperimentConfig::samples() const {
  return static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  std::map<std::string, json> flat;
  flatten(doc, "", flat);
  std::map<std::string, const Field*> known;
  for (const Field& f : fields()) known[f.info.key] = &f;
  for (const auto& [k, v] : flat) {
    if (!known.count(k)) throw ConfigError("unknown config key: " + k);
  }
  ExperimentConfig c;
  for (const auto& [k, v] : flat) known[k]->set(c, v);

  if (c.conformal.centers.size() != c.conformal.amplitudes.size())
    throw ConfigError("perturbed.centers and perturbed.amplitudes differ in length");
  if (c.eps_policy == "fixed" && !(c.eps > 0.0))
    throw ConfigError("uniformize.eps is required when uniformize.eps_policy is fixed");
  std::vector<std::uint64_t> s = c.orbit_seeds();
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    throw ConfigError("orbit.seeds: seeds must be distinct");
  const double steps = c.duration / c.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("orbit.duration must be a multiple of orbit.dt");
  if (steps < 2) throw ConfigError("orbit.duration must cover at least two steps");
  if (steps > 5e8) throw ConfigError("orbit.duration / orbit.dt is too large");

  json echo = json::object();
  for (const auto& [k, v] : flat) echo[k] = v;
  c.echo = echo;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string raw = buf.str();
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = parse_config(doc);
  c.config_hash = git_blob_hash(raw);
  return c;
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

}  // namespace anosov::cli
