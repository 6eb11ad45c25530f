#pragma once

// Experiment and analytic-run configuration: a strict JSON schema with a
// canonical serialized form. Parsing rejects unknown or ill-typed fields with
// their full path, serialize(parse(text)) is the identity on canonical text,
// and run ids are derived by hashing the canonical form together with the
// seed.

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwp/common.hpp"
#include "brwp/rng.hpp"
#include "brwp/samplers.hpp"

namespace brwp {

using Json = nlohmann::ordered_json;

namespace detail {

// Strict field access on one JSON object. Every accessor marks its key as
// consumed; finish() rejects whatever was not consumed, so schema and parser
// cannot drift apart silently.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw std::invalid_argument("config: " + path_ + " must be an object");
  }

  std::string where(const char* key) const { return path_ + "." + key; }

  bool has(const char* key) const { return j_.contains(key); }

  const Json& required(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end())
      throw std::invalid_argument("config: missing field " + where(key));
    return *it;
  }

  const Json* optional(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const char* key) { return as_number(required(key), key); }

  double number_or(const char* key, double fallback) {
    const Json* v = optional(key);
    return v ? as_number(*v, key) : fallback;
  }

  long integer(const char* key) { return as_integer(required(key), key); }

  long integer_or(const char* key, long fallback) {
    const Json* v = optional(key);
    return v ? as_integer(*v, key) : fallback;
  }

  std::uint64_t counter(const char* key) {
    const Json& v = required(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw std::invalid_argument("config: " + where(key) + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::uint64_t counter_or(const char* key, std::uint64_t fallback) {
    return optional(key) ? counter(key) : fallback;
  }

  std::string text(const char* key) {
    const Json& v = required(key);
    if (!v.is_string())
      throw std::invalid_argument("config: " + where(key) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) {
    const Json& v = required(key);
    if (!v.is_array() || v.empty())
      throw std::invalid_argument("config: " + where(key) + " must be a nonempty array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const Json& item : v) out.push_back(as_number(item, key));
    return out;
  }

  void reject(const char* key, const std::string& why) {
    if (j_.contains(key))
      throw std::invalid_argument("config: field " + where(key) + " " + why);
    seen_.insert(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw std::invalid_argument("config: unknown field " + path_ + "." + it.key());
  }

 private:
  double as_number(const Json& v, const char* key) const {
    if (!v.is_number())
      throw std::invalid_argument("config: " + where(key) + " must be a number");
    return v.get<double>();
  }

  long as_integer(const Json& v, const char* key) const {
    if (!v.is_number_integer() && !v.is_number_unsigned())
      throw std::invalid_argument("config: " + where(key) + " must be an integer");
    return v.get<long>();
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

// Target description. "kind" selects the family; the remaining fields depend
// on it:
//   quadratic            eigenvalues (+ optional rotation_seed)
//   gaussian_mixture     center
//   bimodal              dim
//   logistic_regression  samples, dim, alpha, data_seed, theta_gen
struct PotentialConfig {
  std::string kind;
  std::vector<double> eigenvalues;
  std::optional<std::uint64_t> rotation_seed;
  std::vector<double> center;
  long dim = 0;
  long samples = 0;
  double alpha = 0.0;
  std::uint64_t data_seed = 0;
  std::vector<double> theta_gen;
};

inline PotentialConfig parse_potential_config(const Json& j, const std::string& path) {
  detail::Fields f(j, path);
  PotentialConfig out;
  out.kind = f.text("kind");
  if (out.kind == "quadratic") {
    out.eigenvalues = f.numbers("eigenvalues");
    for (double v : out.eigenvalues)
      if (v <= 0.0)
        throw std::invalid_argument("config: " + f.where("eigenvalues") +
                                    " entries must be positive");
    if (f.has("rotation_seed")) out.rotation_seed = f.counter("rotation_seed");
    out.dim = static_cast<long>(out.eigenvalues.size());
  } else if (out.kind == "gaussian_mixture") {
    out.center = f.numbers("center");
    out.dim = static_cast<long>(out.center.size());
  } else if (out.kind == "bimodal") {
    out.dim = f.integer("dim");
    if (out.dim < 1)
      throw std::invalid_argument("config: " + f.where("dim") + " must be >= 1");
  } else if (out.kind == "logistic_regression") {
    out.samples = f.integer("samples");
    out.dim = f.integer("dim");
    out.alpha = f.number("alpha");
    out.data_seed = f.counter("data_seed");
    if (out.samples < 1 || out.dim < 1)
      throw std::invalid_argument("config: " + path + " needs samples >= 1 and dim >= 1");
    if (out.alpha <= 0.0)
      throw std::invalid_argument("config: " + f.where("alpha") + " must be positive");
    if (f.has("theta_gen")) {
      out.theta_gen = f.numbers("theta_gen");
      if (static_cast<long>(out.theta_gen.size()) != out.dim)
        throw std::invalid_argument("config: " + f.where("theta_gen") + " must have dim entries");
    } else {
      f.optional("theta_gen");
      out.theta_gen.assign(static_cast<std::size_t>(out.dim), 1.0);
    }
  } else {
    throw std::invalid_argument("config: " + f.where("kind") + " has unknown value '" + out.kind +
                                "'");
  }
  f.finish();
  return out;
}

inline Json to_json(const PotentialConfig& p) {
  Json j;
  j["kind"] = p.kind;
  if (p.kind == "quadratic") {
    j["eigenvalues"] = p.eigenvalues;
    if (p.rotation_seed) j["rotation_seed"] = *p.rotation_seed;
  } else if (p.kind == "gaussian_mixture") {
    j["center"] = p.center;
  } else if (p.kind == "bimodal") {
    j["dim"] = p.dim;
  } else if (p.kind == "logistic_regression") {
    j["samples"] = p.samples;
    j["dim"] = p.dim;
    j["alpha"] = p.alpha;
    j["data_seed"] = p.data_seed;
    j["theta_gen"] = p.theta_gen;
  }
  return j;
}

// Isotropic Gaussian initialization N(mean, variance I).
struct InitConfig {
  std::vector<double> mean;
  double variance = 1.0;
};

struct ExperimentConfig {
  std::string name;
  Method method = Method::brwp;
  PotentialConfig potential;
  SamplerConfig sampler;
  long particles = 0;
  long iterations = 0;
  InitConfig init;
  long snapshot_stride = 10;
};

inline ExperimentConfig parse_experiment_config(const Json& j,
                                                const std::string& path = "experiment") {
  detail::Fields f(j, path);
  ExperimentConfig out;
  out.name = f.text("name");
  if (out.name.empty())
    throw std::invalid_argument("config: " + f.where("name") + " must be nonempty");
  out.method = parse_method(f.text("method"));
  out.potential = parse_potential_config(f.required("potential"), f.where("potential"));

  {
    detail::Fields s(f.required("sampler"), f.where("sampler"));
    out.sampler.eta = s.number("eta");
    out.sampler.beta = s.number("beta");
    if (out.sampler.eta <= 0.0 || out.sampler.beta <= 0.0)
      throw std::invalid_argument("config: " + f.where("sampler") +
                                  " needs positive eta and beta");
    if (out.method == Method::brwp) {
      out.sampler.horizon = s.number("horizon");
      if (out.sampler.horizon <= 0.0)
        throw std::invalid_argument("config: " + s.where("horizon") + " must be positive");
      const std::string mode = s.text("normalizer");
      if (mode == "monte_carlo") {
        out.sampler.normalizer = NormalizerMode::monte_carlo;
        out.sampler.mc_samples = static_cast<int>(s.integer("mc_samples"));
        if (out.sampler.mc_samples < 1)
          throw std::invalid_argument("config: " + s.where("mc_samples") + " must be >= 1");
      } else if (mode == "exact") {
        out.sampler.normalizer = NormalizerMode::exact;
        s.reject("mc_samples", "is only valid with the monte_carlo normalizer");
      } else {
        throw std::invalid_argument("config: " + s.where("normalizer") +
                                    " must be 'monte_carlo' or 'exact'");
      }
      out.sampler.subsample = static_cast<Eigen::Index>(s.integer_or("subsample", 0));
      if (out.sampler.subsample < 0)
        throw std::invalid_argument("config: " + s.where("subsample") + " must be >= 0");
    } else {
      for (const char* key : {"horizon", "normalizer", "mc_samples", "subsample"})
        s.reject(key, "is only valid for method 'brwp'");
    }
    s.finish();
  }

  out.particles = f.integer("particles");
  if (out.particles < 1)
    throw std::invalid_argument("config: " + f.where("particles") + " must be >= 1");
  out.iterations = f.integer("iterations");
  if (out.iterations < 0)
    throw std::invalid_argument("config: " + f.where("iterations") + " must be >= 0");

  {
    detail::Fields init(f.required("init"), f.where("init"));
    out.init.mean = init.numbers("mean");
    out.init.variance = init.number("variance");
    if (out.init.variance <= 0.0)
      throw std::invalid_argument("config: " + init.where("variance") + " must be positive");
    init.finish();
  }
  if (static_cast<long>(out.init.mean.size()) != out.potential.dim)
    throw std::invalid_argument("config: " + f.where("init") + ".mean must have " +
                                std::to_string(out.potential.dim) + " entries");

  out.sampler.seed = f.counter("seed");
  out.snapshot_stride = f.integer_or("snapshot_stride", 10);
  if (out.snapshot_stride < 1)
    throw std::invalid_argument("config: " + f.where("snapshot_stride") + " must be >= 1");
  f.finish();
  return out;
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["method"] = method_name(c.method);
  j["potential"] = to_json(c.potential);
  Json s;
  s["eta"] = c.sampler.eta;
  s["beta"] = c.sampler.beta;
  if (c.method == Method::brwp) {
    s["horizon"] = c.sampler.horizon;
    s["normalizer"] =
        c.sampler.normalizer == NormalizerMode::exact ? "exact" : "monte_carlo";
    if (c.sampler.normalizer == NormalizerMode::monte_carlo)
      s["mc_samples"] = c.sampler.mc_samples;
    s["subsample"] = static_cast<long>(c.sampler.subsample);
  }
  j["sampler"] = s;
  j["particles"] = c.particles;
  j["iterations"] = c.iterations;
  Json init;
  init["mean"] = c.init.mean;
  init["variance"] = c.init.variance;
  j["init"] = init;
  j["seed"] = c.sampler.seed;
  j["snapshot_stride"] = c.snapshot_stride;
  return j;
}

// Closed-form study configuration. "analysis" selects what to run:
//   recurrence_1d   mean/variance recurrences over a list of horizons
//   mixing          commuting mixing-time certificate and iterated tv bound
//   ode             non-commuting smoothed-covariance flow, random inits
struct AnalyticConfig {
  std::string name;
  std::string analysis;
  // recurrence_1d
  double a = 1.0;
  double init_mean = 0.0;
  double init_variance = 1.0;
  std::vector<double> horizons;
  // shared
  double beta = 1.0;
  long iterations = 0;
  // mixing
  std::vector<double> eigenvalues;
  double horizon = 0.0;
  std::optional<double> eta;  // recurrence_1d: required; mixing: absent = certified cap
  std::vector<double> init_variances;
  double delta = 0.0;
  // ode
  std::uint64_t rotation_seed = 0;
  std::uint64_t init_seed = 0;
  long trajectories = 0;
  double init_eigen_min = 0.0;
  double init_eigen_max = 0.0;
  double dt = 0.0;
  double t_end = 0.0;
  long output_stride = 100;
};

inline AnalyticConfig parse_analytic_config(const Json& j, const std::string& path = "analytic") {
  detail::Fields f(j, path);
  AnalyticConfig out;
  out.name = f.text("name");
  if (out.name.empty())
    throw std::invalid_argument("config: " + f.where("name") + " must be nonempty");
  out.analysis = f.text("analysis");
  if (out.analysis == "recurrence_1d") {
    out.a = f.number("a");
    out.beta = f.number("beta");
    out.eta = f.number("eta");
    out.init_mean = f.number("init_mean");
    out.init_variance = f.number("init_variance");
    out.horizons = f.numbers("horizons");
    out.iterations = f.integer("iterations");
    if (out.a < 0.0)
      throw std::invalid_argument("config: " + f.where("a") + " must be >= 0");
    if (out.beta <= 0.0 || *out.eta <= 0.0 || out.init_variance <= 0.0)
      throw std::invalid_argument("config: " + path +
                                  " needs positive beta, eta, init_variance");
    for (double t : out.horizons)
      if (t <= 0.0)
        throw std::invalid_argument("config: " + f.where("horizons") +
                                    " entries must be positive");
    if (out.iterations < 1)
      throw std::invalid_argument("config: " + f.where("iterations") + " must be >= 1");
  } else if (out.analysis == "mixing") {
    out.eigenvalues = f.numbers("eigenvalues");
    out.beta = f.number("beta");
    out.horizon = f.number("horizon");
    if (f.has("eta")) out.eta = f.number("eta");
    else f.optional("eta");
    out.init_variances = f.numbers("init_variances");
    out.delta = f.number("delta");
    out.iterations = f.integer("iterations");
    if (out.init_variances.size() != out.eigenvalues.size())
      throw std::invalid_argument("config: " + f.where("init_variances") +
                                  " must match eigenvalues in length");
    for (double v : out.eigenvalues)
      if (v <= 0.0)
        throw std::invalid_argument("config: " + f.where("eigenvalues") +
                                    " entries must be positive");
    for (double v : out.init_variances)
      if (v <= 0.0)
        throw std::invalid_argument("config: " + f.where("init_variances") +
                                    " entries must be positive");
    if (out.beta <= 0.0 || out.horizon <= 0.0 || out.delta <= 0.0 || out.iterations < 1)
      throw std::invalid_argument("config: " + path +
                                  " needs positive beta, horizon, delta and iterations >= 1");
  } else if (out.analysis == "ode") {
    out.eigenvalues = f.numbers("eigenvalues");
    out.rotation_seed = f.counter("rotation_seed");
    out.beta = f.number("beta");
    out.horizon = f.number("horizon");
    out.trajectories = f.integer("trajectories");
    out.init_seed = f.counter("init_seed");
    out.init_eigen_min = f.number("init_eigen_min");
    out.init_eigen_max = f.number("init_eigen_max");
    out.dt = f.number("dt");
    out.t_end = f.number("t_end");
    out.output_stride = f.integer_or("output_stride", 100);
    for (double v : out.eigenvalues)
      if (v <= 0.0)
        throw std::invalid_argument("config: " + f.where("eigenvalues") +
                                    " entries must be positive");
    if (out.beta <= 0.0 || out.horizon <= 0.0 || out.dt <= 0.0 || out.t_end <= 0.0)
      throw std::invalid_argument("config: " + path +
                                  " needs positive beta, horizon, dt, t_end");
    if (out.trajectories < 1 || out.output_stride < 1)
      throw std::invalid_argument("config: " + path +
                                  " needs trajectories >= 1 and output_stride >= 1");
    if (!(out.init_eigen_min > 0.0) || out.init_eigen_max < out.init_eigen_min)
      throw std::invalid_argument("config: " + path +
                                  " needs 0 < init_eigen_min <= init_eigen_max");
  } else {
    throw std::invalid_argument("config: " + f.where("analysis") + " has unknown value '" +
                                out.analysis + "'");
  }
  f.finish();
  return out;
}

inline Json to_json(const AnalyticConfig& c) {
  Json j;
  j["name"] = c.name;
  j["analysis"] = c.analysis;
  if (c.analysis == "recurrence_1d") {
    j["a"] = c.a;
    j["beta"] = c.beta;
    j["eta"] = *c.eta;
    j["init_mean"] = c.init_mean;
    j["init_variance"] = c.init_variance;
    j["horizons"] = c.horizons;
    j["iterations"] = c.iterations;
  } else if (c.analysis == "mixing") {
    j["eigenvalues"] = c.eigenvalues;
    j["beta"] = c.beta;
    j["horizon"] = c.horizon;
    if (c.eta) j["eta"] = *c.eta;
    j["init_variances"] = c.init_variances;
    j["delta"] = c.delta;
    j["iterations"] = c.iterations;
  } else if (c.analysis == "ode") {
    j["eigenvalues"] = c.eigenvalues;
    j["rotation_seed"] = c.rotation_seed;
    j["beta"] = c.beta;
    j["horizon"] = c.horizon;
    j["trajectories"] = c.trajectories;
    j["init_seed"] = c.init_seed;
    j["init_eigen_min"] = c.init_eigen_min;
    j["init_eigen_max"] = c.init_eigen_max;
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["output_stride"] = c.output_stride;
  }
  return j;
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }
inline std::string serialize_config(const AnalyticConfig& c) { return to_json(c).dump(2) + "\n"; }

inline Json parse_json_text(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw std::invalid_argument("config: " + what + " is not valid JSON");
  return j;
}

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  return parse_experiment_config(parse_json_text(text, "experiment config"));
}

inline AnalyticConfig parse_analytic_config(const std::string& text) {
  return parse_analytic_config(parse_json_text(text, "analytic config"));
}

// Forty-hex run identifier: five lanes of the counter mix chained over the
// canonical config text. Stable across platforms; two configs differing in
// any canonical byte get unrelated ids.
inline std::string run_id(const std::string& canonical_config) {
  std::uint64_t lane[5];
  for (std::uint64_t k = 0; k < 5; ++k) lane[k] = detail::mix64(0x9e3779b97f4a7c15ull * (k + 1));
  std::uint64_t pos = 0;
  for (unsigned char byte : canonical_config) {
    const std::uint64_t k = pos % 5;
    lane[k] = detail::mix64(lane[k] ^ (static_cast<std::uint64_t>(byte) + 0xff51afd7ed558ccdull +
                                       (pos << 8)));
    ++pos;
  }
  std::string out;
  out.reserve(40);
  for (std::uint64_t k = 0; k < 5; ++k) {
    const std::uint64_t v = detail::mix64(lane[k] ^ pos);
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08llx",
                  static_cast<unsigned long long>(v & 0xffffffffull));
    out += buf;
  }
  return out;
}

}  // namespace brwp
