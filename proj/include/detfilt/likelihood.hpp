// Copyright 2026 The detfilt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Proxy-likelihood estimators for the predictive likelihood
//   p(z_k | x_{k-1}) = ∫ p(z_k | x_k) p(x_k | x_{k-1}) dx_k :
//
//   Pointwise   — evaluate the observation density at the noiseless
//                 prediction; ignores transition uncertainty.
//   MonteCarlo  — average M observation-density evaluations at sampled
//                 transitions; unbiased, variance ~ 1/M.
//   UxHw        — deterministic distribution arithmetic: lift the particle
//                 to a quantized value, add quantized transition noise, push
//                 through the observation map, add quantized observation
//                 noise, and read the reconstructed density at z.
//   VarSum      — moment-matched parametric density with linearized variance
//                 (h'(f(x)))^2 var_trans + var_obs.
//   GroundTruth — MonteCarlo at a large fixed iteration count behind a
//                 compute-once cache, the common reference for all methods.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "detfilt/csv.hpp"
#include "detfilt/errors.hpp"
#include "detfilt/noise.hpp"
#include "detfilt/numeric.hpp"
#include "detfilt/quantized_dist.hpp"
#include "detfilt/statespace.hpp"

namespace detfilt {

enum class Method { Pointwise, MonteCarlo, UxHw, VarSum, GroundTruth };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Pointwise: return "pointwise";
    case Method::MonteCarlo: return "mc";
    case Method::UxHw: return "uxhw";
    case Method::VarSum: return "varsum";
    case Method::GroundTruth: return "ground_truth";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  if (s == "pointwise") return Method::Pointwise;
  if (s == "mc") return Method::MonteCarlo;
  if (s == "uxhw") return Method::UxHw;
  if (s == "varsum") return Method::VarSum;
  if (s == "ground_truth") return Method::GroundTruth;
  throw config_error("unknown estimator method: " + std::string(s));
}

inline bool method_is_stochastic(Method m) {
  return m == Method::MonteCarlo || m == Method::GroundTruth;
}

struct EstimatorSpec {
  Method method = Method::Pointwise;
  long param = 0;  // M for MonteCarlo/GroundTruth, eta for UxHw
  std::uint64_t seed = 0;

  void validate() const {
    if (method == Method::MonteCarlo || method == Method::GroundTruth) {
      if (param < 1) throw config_error("Monte Carlo iteration count must be >= 1");
    }
    if (method == Method::UxHw) {
      if (!is_power_of_two(param) || param < 2) {
        throw config_error("uxhw resolution must be a power of two >= 2");
      }
    }
  }
};

// Observation density at the noiseless one-step prediction.
inline double lik_pointwise(double z, double x, int k, const SystemConfig& cfg) {
  const double predicted = cfg.observation_ideal(cfg.transition_ideal(x, k));
  return pdf_noise(cfg.observation_noise(), z - predicted);
}

// Monte Carlo average of observation-density evaluations at noisy
// transitions. Zero is a legitimate return when every sampled prediction
// misses a bounded observation support.
inline double lik_mc(double z, double x, int k, const SystemConfig& cfg, long m,
                     Rng& rng) {
  if (m < 1) throw config_error("Monte Carlo iteration count must be >= 1");
  const double expected_x = cfg.transition_ideal(x, k);
  CompensatedSum accum;
  for (long j = 0; j < m; ++j) {
    const double sim_x = expected_x + sample_noise(cfg.transition_noise(), rng);
    accum.add(pdf_noise(cfg.observation_noise(), z - cfg.observation_ideal(sim_x)));
  }
  return accum.value() / static_cast<double>(m);
}

struct McEstimate {
  double mean;
  double draw_stddev;  // sample stddev of the per-draw density values
  double standard_error() const { return draw_stddev; }
};

// lik_mc with per-draw dispersion, for error bars and self-consistency
// checks. standard_error() is draw_stddev already divided by sqrt(M).
inline McEstimate lik_mc_stats(double z, double x, int k,
                               const SystemConfig& cfg, long m, Rng& rng) {
  if (m < 1) throw config_error("Monte Carlo iteration count must be >= 1");
  const double expected_x = cfg.transition_ideal(x, k);
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (long j = 0; j < m; ++j) {
    const double sim_x = expected_x + sample_noise(cfg.transition_noise(), rng);
    const double p =
        pdf_noise(cfg.observation_noise(), z - cfg.observation_ideal(sim_x));
    sum.add(p);
    sum_sq.add(p * p);
  }
  const double n = static_cast<double>(m);
  const double mean = sum.value() / n;
  const double var =
      m > 1 ? std::max(0.0, (sum_sq.value() - n * mean * mean) / (n - 1.0)) : 0.0;
  return McEstimate{mean, std::sqrt(var / n)};
}

// Deterministic estimator on the quantized-distribution engine. Follows the
// source composition literally: value + transition noise, observation map,
// + observation noise, density read at z. No reordering or fusion, so each
// stage stays auditable against the engine's own operations.
inline double lik_uxhw(double z, double x, int k, const SystemConfig& cfg,
                       int eta) {
  const QuantizedDist x_density =
      add_independent(delta_dist(cfg.transition_ideal(x, k), eta),
                      quantize_parametric(cfg.transition_noise(), eta));
  const QuantizedDist z_density = add_independent(
      map_unary(x_density, [&cfg](double v) { return cfg.observation_ideal(v); }),
      quantize_parametric(cfg.observation_noise(), eta));
  return evaluate_pdf(z_density, z);
}

// Linearized moment-matched density: mean h(f(x)), variance
// (h'(f(x)))^2 var_trans + var_obs. Evaluated as a Laplacian when both noise
// families are Laplacian, as a Gaussian otherwise.
inline double lik_varsum(double z, double x, int k, const SystemConfig& cfg) {
  const double predicted_x = cfg.transition_ideal(x, k);
  const double mean = cfg.observation_ideal(predicted_x);
  const double slope = cfg.observation_derivative(predicted_x);
  const double variance = slope * slope * variance_noise(cfg.transition_noise()) +
                          variance_noise(cfg.observation_noise());
  if (!(variance > 0.0)) {
    throw numeric_error("varsum variance degenerated to zero");
  }
  const bool laplacian =
      cfg.transition_noise().family == NoiseFamily::Laplacian &&
      cfg.observation_noise().family == NoiseFamily::Laplacian;
  if (laplacian) {
    const double b = std::sqrt(variance / 2.0);
    return pdf_noise(NoiseSpec(NoiseFamily::Laplacian, mean, b), z);
  }
  return pdf_noise(NoiseSpec(NoiseFamily::Gaussian, mean, std::sqrt(variance)), z);
}

// Dispatch for the four per-particle estimators. rng is consumed only by
// MonteCarlo, which keeps replay of the other streams untouched when methods
// are swapped under one seed.
inline double estimate_likelihood(const EstimatorSpec& spec, double z, double x,
                                  int k, const SystemConfig& cfg, Rng& rng) {
  switch (spec.method) {
    case Method::Pointwise: return lik_pointwise(z, x, k, cfg);
    case Method::MonteCarlo: return lik_mc(z, x, k, cfg, spec.param, rng);
    case Method::UxHw:
      return lik_uxhw(z, x, k, cfg, static_cast<int>(spec.param));
    case Method::VarSum: return lik_varsum(z, x, k, cfg);
    case Method::GroundTruth:
      return lik_mc(z, x, k, cfg, spec.param, rng);
  }
  throw config_error("unknown estimator method");
}

// Compute-once reference store. Linearizable: concurrent callers asking for
// one key all receive the single computed value, and the computation runs
// exactly once. Persists to CSV so grid reruns skip recomputation.
class GroundTruthCache {
 public:
  struct Key {
    std::string config_id;
    double x;
    int k;
    double z;
    long m_gt;
    std::uint64_t seed;

    friend bool operator<(const Key& a, const Key& b) {
      return std::tie(a.config_id, a.x, a.k, a.z, a.m_gt, a.seed) <
             std::tie(b.config_id, b.x, b.k, b.z, b.m_gt, b.seed);
    }
  };

  double evaluate(const Key& key, const SystemConfig& cfg) {
    std::promise<double> promise;
    std::shared_future<double> fut;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        fut = promise.get_future().share();
        entries_.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      Rng rng(key.seed);
      promise.set_value(lik_mc(key.z, key.x, key.k, cfg, key.m_gt, rng));
    }
    return fut.get();
  }

  void insert(const Key& key, double value) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::promise<double> promise;
    promise.set_value(value);
    entries_.emplace(key, promise.get_future().share());
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

  static constexpr const char* kCsvHeader = "config_id,x,k,z,m_gt,seed,value";

  // Rows are written in key order; rewriting the file is deterministic for a
  // given set of resolved entries.
  void save_csv(const std::string& path) const {
    std::vector<std::pair<Key, double>> rows;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      rows.reserve(entries_.size());
      for (const auto& [key, fut] : entries_) {
        if (fut.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
          rows.emplace_back(key, fut.get());
        }
      }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write ground-truth cache: " + path);
    out << kCsvHeader << "\n";
    for (const auto& [key, value] : rows) {
      out << key.config_id << ',' << format_g17(key.x) << ',' << key.k << ','
          << format_g17(key.z) << ',' << key.m_gt << ',' << key.seed << ','
          << format_g17(value) << "\n";
    }
  }

  void load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;  // a missing cache is an empty cache
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
      throw validation_error("unrecognized ground-truth cache header in " + path);
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 7) {
        throw validation_error("malformed ground-truth cache row: " + line);
      }
      Key key;
      key.config_id = std::string(fields[0]);
      key.x = parse_double(fields[1]);
      key.k = static_cast<int>(parse_long(fields[2]));
      key.z = parse_double(fields[3]);
      key.m_gt = parse_long(fields[4]);
      key.seed = static_cast<std::uint64_t>(parse_long(fields[5]));
      insert(key, parse_double(fields[6]));
    }
  }

 private:
  mutable std::mutex mutex_;
  std::map<Key, std::shared_future<double>> entries_;
};

// Ground-truth evaluation through a cache, using a dedicated recorded seed.
inline double lik_ground_truth(GroundTruthCache& cache, const std::string& config_id,
                               double z, double x, int k, const SystemConfig& cfg,
                               long m_gt, std::uint64_t seed) {
  if (m_gt < 100000) {
    throw config_error("ground-truth iteration count must be >= 1e5");
  }
  return cache.evaluate(GroundTruthCache::Key{config_id, x, k, z, m_gt, seed}, cfg);
}

}  // namespace detfilt
