// Copyright 2026 The detfilt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parametric noise families with one shared scale convention:
//   Gaussian  — scale is the standard deviation,
//   Laplacian — scale is the diversity b in (1/2b) exp(-|x-loc|/b),
//   Uniform   — scale is the total support length, i.e.
//               Uniform(loc - scale/2, loc + scale/2).
// Sampling is inverse-CDF so one uniform draw produces one variate for every
// family; replay across families stays aligned draw-for-draw.

#pragma once

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "detfilt/errors.hpp"
#include "detfilt/rng.hpp"

namespace detfilt {

enum class NoiseFamily { Gaussian, Laplacian, Uniform };

inline const char* to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::Gaussian: return "Gaussian";
    case NoiseFamily::Laplacian: return "Laplacian";
    case NoiseFamily::Uniform: return "Uniform";
  }
  return "?";
}

inline NoiseFamily noise_family_from_string(std::string_view s) {
  if (s == "Gaussian" || s == "gaussian") return NoiseFamily::Gaussian;
  if (s == "Laplacian" || s == "laplacian") return NoiseFamily::Laplacian;
  if (s == "Uniform" || s == "uniform") return NoiseFamily::Uniform;
  throw config_error("unknown noise family: " + std::string(s));
}

struct NoiseSpec {
  NoiseFamily family;
  double location;
  double scale;

  NoiseSpec(NoiseFamily f, double loc, double s)
      : family(f), location(loc), scale(s) {
    if (!(std::isfinite(loc) && std::isfinite(s)) || s <= 0.0) {
      throw config_error("noise scale must be finite and > 0");
    }
  }
};

inline double pdf_noise(const NoiseSpec& spec, double v) {
  const double d = v - spec.location;
  switch (spec.family) {
    case NoiseFamily::Gaussian: {
      const double u = d / spec.scale;
      return std::exp(-0.5 * u * u) /
             (spec.scale * std::sqrt(2.0 * std::numbers::pi));
    }
    case NoiseFamily::Laplacian:
      return std::exp(-std::abs(d) / spec.scale) / (2.0 * spec.scale);
    case NoiseFamily::Uniform:
      // Closed support; the boundary carries the interior height.
      return std::abs(d) <= 0.5 * spec.scale ? 1.0 / spec.scale : 0.0;
  }
  return 0.0;
}

// Inverse CDF, defined on p in (0, 1).
inline double quantile_noise(const NoiseSpec& spec, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw config_error("quantile probability must lie in (0, 1)");
  }
  switch (spec.family) {
    case NoiseFamily::Gaussian:
      return spec.location +
             spec.scale * std::numbers::sqrt2 * boost::math::erf_inv(2.0 * p - 1.0);
    case NoiseFamily::Laplacian:
      return p < 0.5 ? spec.location + spec.scale * std::log(2.0 * p)
                     : spec.location - spec.scale * std::log(2.0 * (1.0 - p));
    case NoiseFamily::Uniform:
      return spec.location + spec.scale * (p - 0.5);
  }
  return spec.location;
}

inline double sample_noise(const NoiseSpec& spec, Rng& rng) {
  return quantile_noise(spec, rng.next_open_double());
}

// Analytic variance under the scale convention above.
inline double variance_noise(const NoiseSpec& spec) {
  switch (spec.family) {
    case NoiseFamily::Gaussian: return spec.scale * spec.scale;
    case NoiseFamily::Laplacian: return 2.0 * spec.scale * spec.scale;
    case NoiseFamily::Uniform: return spec.scale * spec.scale / 12.0;
  }
  return 0.0;
}

}  // namespace detfilt
