// Copyright 2026 The detfilt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bootstrap and predictive-lookahead auxiliary particle filters.
//
// Both variants resample every step, and per-step estimates are the weighted
// posterior means taken before that resampling. The auxiliary variant selects
// parent particles with lookahead weights proportional to a per-particle
// proxy likelihood m (any estimator from likelihood.hpp) and corrects the
// second-stage weights by 1/m(parent) so the filter still targets the true
// posterior; the correction can be switched off to study the uncorrected
// form.
//
// Randomness discipline: each trial owns named streams (propagation,
// selection, resampling, reset, estimator). Swapping the proxy-likelihood
// estimator only touches the estimator stream, so two filters run on the
// same seed see identical trajectories, propagation noise, and resampling
// draws — the comparison isolates the estimator.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "detfilt/errors.hpp"
#include "detfilt/likelihood.hpp"
#include "detfilt/numeric.hpp"
#include "detfilt/rng.hpp"
#include "detfilt/statespace.hpp"

namespace detfilt {

struct ParticleSet {
  std::vector<double> positions;
  std::vector<double> weights;
  int step = 0;
};

// Effective sample size, numerically stable normalized form (sum w)^2 / sum
// w^2. Scale-invariant; all-zero weights are a collapse signal, not a number.
inline double ess(std::span<const double> weights) {
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (double w : weights) {
    if (w < 0.0) throw config_error("negative particle weight");
    sum.add(w);
    sum_sq.add(w * w);
  }
  if (sum_sq.value() <= 0.0) {
    throw collapse_error("effective sample size undefined: all weights zero");
  }
  const double s = sum.value();
  return s * s / sum_sq.value();
}

// Systematic resampling: one uniform offset, n_out equally spaced points
// through the cumulative weights. The count of index i is floor(n_out w_i)
// or ceil(n_out w_i), and the returned indices are nondecreasing.
inline std::vector<int> resample_systematic(std::span<const double> weights,
                                            int n_out, Rng& rng) {
  if (n_out < 1) throw config_error("resample output count must be >= 1");
  CompensatedSum total;
  for (double w : weights) {
    if (w < 0.0) throw config_error("negative particle weight");
    total.add(w);
  }
  const double sum = total.value();
  if (sum <= 0.0) {
    throw collapse_error("cannot resample collapsed weights");
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw config_error("resample expects normalized weights");
  }
  const double offset = rng.next_double();
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_out));
  std::size_t i = 0;
  double cum = weights[0];
  for (int j = 0; j < n_out; ++j) {
    const double target = (static_cast<double>(j) + offset) /
                          static_cast<double>(n_out) * sum;
    while (target > cum && i + 1 < weights.size()) {
      ++i;
      cum += weights[i];
    }
    out.push_back(static_cast<int>(i));
  }
  return out;
}

// Named per-trial randomness streams (see header comment).
struct FilterStreams {
  Rng propagate;
  Rng select;
  Rng resample;
  Rng reset;
  Rng estimator;

  static FilterStreams for_trial(std::uint64_t seed) {
    return FilterStreams{Rng(derive_stream(seed, 1)), Rng(derive_stream(seed, 2)),
                         Rng(derive_stream(seed, 3)), Rng(derive_stream(seed, 4)),
                         Rng(derive_stream(seed, 5))};
  }
};

struct StepDiag {
  bool weight_collapse = false;
  bool likelihood_zero = false;
};

namespace detail {

inline void normalize_weights(std::vector<double>& weights) {
  CompensatedSum total;
  for (double w : weights) total.add(w);
  const double sum = total.value();
  for (double& w : weights) w /= sum;
}

// Reset path: reinitialize all particles from a Gaussian prior centered at
// the last estimate with the transition noise scale, uniform weights.
inline void reset_from_prior(ParticleSet& ps, const SystemConfig& cfg,
                             double center, Rng& reset_rng) {
  const NoiseSpec prior(NoiseFamily::Gaussian, center,
                        cfg.transition_noise().scale);
  for (double& p : ps.positions) p = sample_noise(prior, reset_rng);
  const double w = 1.0 / static_cast<double>(ps.positions.size());
  for (double& x : ps.weights) x = w;
}

inline double weighted_mean(const ParticleSet& ps) {
  CompensatedSum sum;
  for (std::size_t i = 0; i < ps.positions.size(); ++i) {
    sum.add(ps.weights[i] * ps.positions[i]);
  }
  return sum.value();
}

}  // namespace detail

// One bootstrap step: propagate every particle through the noisy transition,
// weight by the observation density, normalize. All-zero weights trigger the
// reset path (recorded in diag) instead of failing.
inline ParticleSet step_bootstrap(const ParticleSet& ps, double z,
                                  const SystemConfig& cfg, FilterStreams& streams,
                                  StepDiag& diag, double last_estimate) {
  const int k = ps.step + 1;
  const std::size_t n = ps.positions.size();
  ParticleSet next;
  next.step = k;
  next.positions.resize(n);
  next.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    next.positions[i] = cfg.transition_ideal(ps.positions[i], k) +
                        sample_noise(cfg.transition_noise(), streams.propagate);
    next.weights[i] =
        ps.weights[i] *
        pdf_noise(cfg.observation_noise(), z - cfg.observation_ideal(next.positions[i]));
  }
  CompensatedSum total;
  for (double w : next.weights) total.add(w);
  if (total.value() <= 0.0) {
    diag.weight_collapse = true;
    detail::reset_from_prior(next, cfg, last_estimate, streams.reset);
    return next;
  }
  detail::normalize_weights(next.weights);
  return next;
}

// One predictive-lookahead auxiliary step. Stage 1 scores every particle
// with the proxy likelihood and selects parents by systematic resampling of
// the lookahead weights; stage 2 propagates the parents and weights them by
// the observation density over the parent's proxy value. Degenerate cases:
// all proxies zero falls back to bootstrap weighting for the step (counted
// as a likelihood-zero event); all second-stage weights zero runs the same
// reset path as the bootstrap filter.
inline ParticleSet step_apf_predictive(const ParticleSet& ps, double z,
                                       const SystemConfig& cfg,
                                       const EstimatorSpec& estimator,
                                       FilterStreams& streams, StepDiag& diag,
                                       double last_estimate,
                                       bool second_stage_correction = true) {
  if (estimator.method == Method::GroundTruth) {
    throw config_error("ground-truth estimator is not a filter proxy");
  }
  const int k = ps.step + 1;
  const std::size_t n = ps.positions.size();

  std::vector<double> proxy(n);
  for (std::size_t i = 0; i < n; ++i) {
    proxy[i] =
        estimate_likelihood(estimator, z, ps.positions[i], k, cfg, streams.estimator);
  }

  std::vector<double> lookahead(n);
  for (std::size_t i = 0; i < n; ++i) lookahead[i] = ps.weights[i] * proxy[i];
  CompensatedSum lookahead_total;
  for (double w : lookahead) lookahead_total.add(w);

  bool proxy_collapsed = false;
  if (lookahead_total.value() <= 0.0) {
    diag.likelihood_zero = true;
    proxy_collapsed = true;
    lookahead = ps.weights;  // uniform pre-selection == bootstrap step
  }
  detail::normalize_weights(lookahead);
  const std::vector<int> parents =
      resample_systematic(lookahead, static_cast<int>(n), streams.select);

  ParticleSet next;
  next.step = k;
  next.positions.resize(n);
  next.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int j = parents[i];
    next.positions[i] = cfg.transition_ideal(ps.positions[j], k) +
                        sample_noise(cfg.transition_noise(), streams.propagate);
    double w = pdf_noise(cfg.observation_noise(),
                         z - cfg.observation_ideal(next.positions[i]));
    if (second_stage_correction && !proxy_collapsed) w /= proxy[j];
    next.weights[i] = w;
  }
  CompensatedSum total;
  for (double w : next.weights) total.add(w);
  if (total.value() <= 0.0) {
    diag.weight_collapse = true;
    detail::reset_from_prior(next, cfg, last_estimate, streams.reset);
    return next;
  }
  detail::normalize_weights(next.weights);
  return next;
}

enum class FilterVariant { Bootstrap, ApfPredictive };

inline const char* to_string(FilterVariant v) {
  return v == FilterVariant::Bootstrap ? "bootstrap" : "apf";
}

inline FilterVariant filter_variant_from_string(std::string_view s) {
  if (s == "bootstrap") return FilterVariant::Bootstrap;
  if (s == "apf") return FilterVariant::ApfPredictive;
  throw config_error("unknown filter variant: " + std::string(s));
}

struct FilterResult {
  std::vector<double> estimates;
  double rmse = 0.0;
  std::vector<double> ess_trace;
  int weight_collapse_count = 0;
  int likelihood_zero_count = 0;
  int reset_count = 0;

  double mean_ess() const { return mean_of(ess_trace); }
};

// Full filter run over a trajectory. Returns per-step estimates (weighted
// means before resampling), the trajectory RMSE, the ESS trace, and collapse
// counters. Bit-identical for identical inputs and seed.
inline FilterResult run_filter(const SystemConfig& cfg, const Trajectory& traj,
                               FilterVariant variant, const EstimatorSpec& estimator,
                               int particle_count, std::uint64_t seed,
                               bool apf_second_stage_correction = true) {
  if (particle_count < 1) throw config_error("particle count must be >= 1");
  if (traj.states.size() != traj.observations.size() || traj.states.empty()) {
    throw config_error("trajectory states/observations mismatch");
  }
  const std::size_t n = static_cast<std::size_t>(particle_count);
  FilterStreams streams = FilterStreams::for_trial(seed);

  ParticleSet ps;
  ps.step = 0;
  ps.positions.resize(n);
  ps.weights.assign(n, 1.0 / static_cast<double>(n));
  detail::reset_from_prior(ps, cfg, cfg.initial_state(), streams.reset);

  FilterResult result;
  result.estimates.reserve(traj.states.size());
  result.ess_trace.reserve(traj.states.size());
  double last_estimate = cfg.initial_state();

  for (std::size_t t = 0; t < traj.observations.size(); ++t) {
    const double z = traj.observations[t];
    StepDiag diag;
    ps = variant == FilterVariant::Bootstrap
             ? step_bootstrap(ps, z, cfg, streams, diag, last_estimate)
             : step_apf_predictive(ps, z, cfg, estimator, streams, diag,
                                   last_estimate, apf_second_stage_correction);
    if (diag.weight_collapse) {
      ++result.weight_collapse_count;
      ++result.reset_count;
    }
    if (diag.likelihood_zero) ++result.likelihood_zero_count;

    const double estimate = detail::weighted_mean(ps);
    result.estimates.push_back(estimate);
    result.ess_trace.push_back(ess(ps.weights));

    const std::vector<int> parents =
        resample_systematic(ps.weights, particle_count, streams.resample);
    std::vector<double> resampled(n);
    for (std::size_t i = 0; i < n; ++i) {
      resampled[i] = ps.positions[static_cast<std::size_t>(parents[i])];
    }
    ps.positions = std::move(resampled);
    ps.weights.assign(n, 1.0 / static_cast<double>(n));
    last_estimate = estimate;
  }

  CompensatedSum sq;
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    const double e = traj.states[t] - result.estimates[t];
    sq.add(e * e);
  }
  result.rmse = std::sqrt(sq.value() / static_cast<double>(traj.states.size()));
  return result;
}

}  // namespace detfilt
