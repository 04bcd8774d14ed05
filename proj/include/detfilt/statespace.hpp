// Copyright 2026 The detfilt Authors
// SPDX-License-Identifier: Apache-2.0
//
// One-dimensional additive-noise state-space models:
//   x_k = f(x_{k-1}, k) + v_k,   z_k = h(x_k) + w_k,
// with the step index k starting at 1 for the first transition. The bundled
// instances are the Gordon–Salmond–Smith benchmark system and a linear probe
// model used as a Kalman-checkable baseline.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "detfilt/errors.hpp"
#include "detfilt/noise.hpp"
#include "detfilt/rng.hpp"

namespace detfilt {

class SystemConfig {
 public:
  using TransitionFn = std::function<double(double, int)>;
  using ObservationFn = std::function<double(double)>;

  // The observation derivative must match the observation map; it is checked
  // by central differences over a fixed probe grid at construction.
  SystemConfig(TransitionFn transition, ObservationFn observation,
               ObservationFn observation_derivative, NoiseSpec transition_noise,
               NoiseSpec observation_noise, double initial_state = 0.0)
      : transition_(std::move(transition)),
        observation_(std::move(observation)),
        observation_derivative_(std::move(observation_derivative)),
        transition_noise_(transition_noise),
        observation_noise_(observation_noise),
        initial_state_(initial_state) {
    verify_derivative();
  }

  double transition_ideal(double x, int k) const { return transition_(x, k); }
  double observation_ideal(double x) const { return observation_(x); }
  double observation_derivative(double x) const {
    return observation_derivative_(x);
  }
  const NoiseSpec& transition_noise() const { return transition_noise_; }
  const NoiseSpec& observation_noise() const { return observation_noise_; }
  double initial_state() const { return initial_state_; }

 private:
  void verify_derivative() const {
    static constexpr double probes[] = {-20.0, -5.0, -2.0, -1.0, -0.4,
                                        0.4,   1.0,  2.0,  5.0,  20.0};
    for (double x : probes) {
      const double step = 1e-6 * std::max(1.0, std::abs(x));
      const double fd =
          (observation_(x + step) - observation_(x - step)) / (2.0 * step);
      const double d = observation_derivative_(x);
      if (std::abs(fd - d) > 1e-5 * std::max(1.0, std::abs(d))) {
        throw config_error(
            "observation derivative disagrees with finite differences at x=" +
            std::to_string(x));
      }
    }
  }

  TransitionFn transition_;
  ObservationFn observation_;
  ObservationFn observation_derivative_;
  NoiseSpec transition_noise_;
  NoiseSpec observation_noise_;
  double initial_state_;
};

// Gordon–Salmond–Smith transition: x/2 + 25x/(1+x^2) + 8 cos(1.2 k).
inline double gss_transition_ideal(double x, int k) {
  return 0.5 * x + 25.0 * x / (1.0 + x * x) +
         8.0 * std::cos(1.2 * static_cast<double>(k));
}

// Quadratic observation map x^2 / 20 and its derivative x / 10.
inline double gss_observation_ideal(double x) { return x * x / 20.0; }
inline double gss_observation_derivative(double x) { return x / 10.0; }

inline SystemConfig gss_system(NoiseSpec transition_noise,
                               NoiseSpec observation_noise,
                               double initial_state = 0.0) {
  return SystemConfig(&gss_transition_ideal, &gss_observation_ideal,
                      &gss_observation_derivative, transition_noise,
                      observation_noise, initial_state);
}

// Linear probe model f(x) = x, h(x) = x. Its predictive likelihood has a
// closed form under Gaussian noise, and a Kalman filter is exact on it.
inline SystemConfig linear_system(NoiseSpec transition_noise,
                                  NoiseSpec observation_noise,
                                  double initial_state = 0.0) {
  return SystemConfig([](double x, int) { return x; },
                      [](double x) { return x; }, [](double) { return 1.0; },
                      transition_noise, observation_noise, initial_state);
}

struct Trajectory {
  std::vector<double> states;        // x_1 .. x_T
  std::vector<double> observations;  // z_1 .. z_T
  std::uint64_t seed = 0;
};

// Simulates T steps from the configured initial state. One rng stream,
// alternating transition/observation draws; same config and seed regenerate
// the identical trajectory bit for bit.
inline Trajectory simulate_trajectory(const SystemConfig& config, int steps,
                                      std::uint64_t seed) {
  if (steps < 1) throw config_error("trajectory needs at least one step");
  Trajectory traj;
  traj.seed = seed;
  traj.states.reserve(static_cast<std::size_t>(steps));
  traj.observations.reserve(static_cast<std::size_t>(steps));
  Rng rng(seed);
  double x = config.initial_state();
  for (int k = 1; k <= steps; ++k) {
    x = config.transition_ideal(x, k) + sample_noise(config.transition_noise(), rng);
    const double z =
        config.observation_ideal(x) + sample_noise(config.observation_noise(), rng);
    traj.states.push_back(x);
    traj.observations.push_back(z);
  }
  return traj;
}

}  // namespace detfilt
