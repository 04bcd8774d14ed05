// Copyright 2026 The detfilt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic arithmetic on quantized one-dimensional distributions.
//
// A random variable is represented as an equal-mass Dirac mixture: eta atoms
// placed at quantile midpoints of the source density, eta a power of two.
// Every operation is a pure function closed over this representation — the
// atom count never grows past eta, so cost and memory per operation are fixed
// by the resolution knob alone. Addition assumes independent operands: it
// forms the eta^2 cross-product mixture and requantizes back to eta atoms by
// equal-mass grouping, which preserves the mean exactly and is the engine's
// fidelity bottleneck. Density evaluation reconstructs a piecewise-uniform
// pdf over midpoint cells; on quantized Uniform inputs the interior density
// is exact.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "detfilt/errors.hpp"
#include "detfilt/noise.hpp"
#include "detfilt/numeric.hpp"

namespace detfilt {

struct Atom {
  double position;
  double mass;
};

// Per-thread event counters for the degenerate paths that stay silent in the
// return value (underfull requantization, zero-width pdf sentinel).
struct EngineCounters {
  std::uint64_t underfull_requantize = 0;
  std::uint64_t degenerate_pdf_evals = 0;
};

inline EngineCounters& engine_counters() {
  thread_local EngineCounters counters;
  return counters;
}

// Density returned when a zero-width distribution is evaluated at its own
// support point. Finite by design so downstream weight normalization stays
// finite.
inline constexpr double kDegenerateDensitySentinel = 1e15;

inline constexpr double kMassTolerance = 1e-12;

class QuantizedDist {
 public:
  // Validates all representation invariants: eta a positive power of two,
  // 1 <= atom count <= eta, positions nondecreasing and finite, masses in
  // (0, 1] summing to 1 within kMassTolerance.
  static QuantizedDist from_atoms(std::vector<Atom> atoms, int eta) {
    if (!is_power_of_two(eta)) {
      throw config_error("eta must be a positive power of two, got " +
                         std::to_string(eta));
    }
    if (atoms.empty() || static_cast<int>(atoms.size()) > eta) {
      throw config_error("atom count must lie in [1, eta]");
    }
    CompensatedSum mass;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const Atom& a = atoms[i];
      if (!std::isfinite(a.position)) {
        throw numeric_error("non-finite atom position at index " +
                            std::to_string(i));
      }
      if (!(a.mass > 0.0 && a.mass <= 1.0 + kMassTolerance)) {
        throw config_error("atom mass out of (0, 1] at index " +
                           std::to_string(i));
      }
      if (i > 0 && a.position < atoms[i - 1].position) {
        throw config_error("atom positions must be nondecreasing");
      }
      mass.add(a.mass);
    }
    if (std::abs(mass.value() - 1.0) > kMassTolerance) {
      throw config_error("atom masses must sum to 1");
    }
    return QuantizedDist(std::move(atoms), eta);
  }

  int eta() const { return eta_; }
  std::span<const Atom> atoms() const { return atoms_; }
  int atom_count() const { return static_cast<int>(atoms_.size()); }

  // True when degenerate merging left fewer distinct support points than eta.
  bool underfull() const { return atom_count() < eta_; }

 private:
  QuantizedDist(std::vector<Atom> atoms, int eta)
      : atoms_(std::move(atoms)), eta_(eta) {}

  std::vector<Atom> atoms_;
  int eta_;
};

namespace detail {

inline void sort_atoms(std::vector<Atom>& atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
    if (a.position != b.position) return a.position < b.position;
    return a.mass < b.mass;
  });
}

// Collapse runs of exactly-equal positions into single atoms.
inline void merge_equal_positions(std::vector<Atom>& atoms) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (out > 0 && atoms[i].position == atoms[out - 1].position) {
      atoms[out - 1].mass += atoms[i].mass;
    } else {
      atoms[out++] = atoms[i];
    }
  }
  atoms.resize(out);
}

}  // namespace detail

// Equal-mass regrouping of a sorted weighted-atom sequence down to eta atoms.
// The sequence is partitioned into eta contiguous groups of mass 1/eta, an
// atom's mass splitting across a boundary when it straddles one; each output
// atom sits at the mass-weighted mean of its group. The total mean is
// preserved. Fewer input atoms than eta is a degenerate input: the atoms are
// returned unchanged and the event is counted in engine_counters().
inline QuantizedDist requantize(std::vector<Atom> atoms, int eta) {
  if (!is_power_of_two(eta)) {
    throw config_error("eta must be a positive power of two, got " +
                       std::to_string(eta));
  }
  if (atoms.empty()) throw config_error("requantize needs at least one atom");
  const std::size_t n = atoms.size();
  if (static_cast<int>(n) < eta) {
    ++engine_counters().underfull_requantize;
    return QuantizedDist::from_atoms(std::move(atoms), eta);
  }

  const double group_mass = 1.0 / static_cast<double>(eta);
  std::vector<Atom> out;
  out.reserve(static_cast<std::size_t>(eta));

  std::size_t idx = 0;
  double remaining = atoms[0].mass;  // unconsumed mass of atoms[idx]
  CompensatedSum consumed;           // total mass consumed so far
  for (int g = 0; g < eta; ++g) {
    // Boundaries are recomputed per group so split errors do not accumulate.
    const double boundary =
        (g == eta - 1) ? std::numeric_limits<double>::infinity()
                       : static_cast<double>(g + 1) * group_mass;
    CompensatedSum weighted;
    CompensatedSum mass;
    while (idx < n) {
      const double room = boundary - consumed.value();
      if (room <= 0.0 && mass.value() > 0.0) break;
      const double take = std::min(remaining, std::max(room, 0.0));
      // Take the whole remainder when the boundary is unreachable (last
      // group) or the split would be vanishing.
      const double t = (g == eta - 1) ? remaining : take;
      if (t <= 0.0) break;
      weighted.add(t * atoms[idx].position);
      mass.add(t);
      consumed.add(t);
      remaining -= t;
      if (remaining <= 0.0) {
        ++idx;
        remaining = idx < n ? atoms[idx].mass : 0.0;
      }
      if (g < eta - 1 && consumed.value() >= boundary) break;
    }
    const double m = mass.value();
    const double pos = m > 0.0 ? weighted.value() / m
                               : (out.empty() ? atoms.back().position
                                              : out.back().position);
    out.push_back(Atom{pos, group_mass});
  }
  return QuantizedDist::from_atoms(std::move(out), eta);
}

// Quantization of a parametric density: eta atoms of mass 1/eta at the
// analytic quantile midpoints F^-1((2i+1)/(2 eta)).
inline QuantizedDist quantize_parametric(const NoiseSpec& spec, int eta) {
  if (!is_power_of_two(eta) || eta < 2) {
    throw config_error("quantization resolution must be a power of two >= 2");
  }
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(eta));
  const double mass = 1.0 / static_cast<double>(eta);
  for (int i = 0; i < eta; ++i) {
    const double p =
        (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(eta));
    atoms.push_back(Atom{quantile_noise(spec, p), mass});
  }
  return QuantizedDist::from_atoms(std::move(atoms), eta);
}

// Lift a point value into the representation: eta coincident atoms. Keeps the
// resolution of both operands equal so additions stay well-formed.
inline QuantizedDist delta_dist(double x, int eta) {
  if (!is_power_of_two(eta) || eta < 2) {
    throw config_error("quantization resolution must be a power of two >= 2");
  }
  if (!std::isfinite(x)) throw numeric_error("delta position must be finite");
  std::vector<Atom> atoms(static_cast<std::size_t>(eta),
                          Atom{x, 1.0 / static_cast<double>(eta)});
  return QuantizedDist::from_atoms(std::move(atoms), eta);
}

// Affine map x -> offset + factor * x. A negative factor reverses the atom
// order to restore sortedness; factor 0 would collapse the distribution and
// is rejected.
inline QuantizedDist shift_scale(const QuantizedDist& d, double offset,
                                 double factor) {
  if (factor == 0.0) {
    throw config_error(
        "shift_scale factor must be nonzero (use map_unary for constants)");
  }
  std::vector<Atom> atoms(d.atoms().begin(), d.atoms().end());
  for (Atom& a : atoms) a.position = offset + factor * a.position;
  if (factor < 0.0) std::reverse(atoms.begin(), atoms.end());
  return QuantizedDist::from_atoms(std::move(atoms), d.eta());
}

// Sum of independent operands: cross-product mixture of the two atom sets,
// sorted and requantized back to the shared resolution. Mean-preserving.
inline QuantizedDist add_independent(const QuantizedDist& a,
                                     const QuantizedDist& b) {
  if (a.eta() != b.eta()) {
    throw config_error("operands must share one resolution, got " +
                       std::to_string(a.eta()) + " and " +
                       std::to_string(b.eta()));
  }
  std::vector<Atom> cross;
  cross.reserve(static_cast<std::size_t>(a.atom_count()) *
                static_cast<std::size_t>(b.atom_count()));
  for (const Atom& x : a.atoms()) {
    for (const Atom& y : b.atoms()) {
      cross.push_back(Atom{x.position + y.position, x.mass * y.mass});
    }
  }
  detail::sort_atoms(cross);
  if (static_cast<int>(cross.size()) <= a.eta()) {
    // Degenerate operands (coincident atoms) cannot underfill: merge keeps
    // the support, from_atoms revalidates.
    return QuantizedDist::from_atoms(std::move(cross), a.eta());
  }
  return requantize(std::move(cross), a.eta());
}

// Push atoms through a scalar function g. Masses are untouched; atoms mapped
// to exactly-equal positions merge, and a reduced count is handed back to
// requantize (which keeps it unchanged but records the degeneracy). Within-
// cell curvature of g is ignored by construction; the error shrinks with eta.
template <class G>
QuantizedDist map_unary(const QuantizedDist& d, G&& g) {
  std::vector<Atom> atoms(d.atoms().begin(), d.atoms().end());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double y = g(atoms[i].position);
    if (!std::isfinite(y)) {
      throw numeric_error("map produced non-finite value at atom " +
                          std::to_string(i) + " (position " +
                          std::to_string(atoms[i].position) + ")");
    }
    atoms[i].position = y;
  }
  detail::sort_atoms(atoms);
  const std::size_t before = atoms.size();
  detail::merge_equal_positions(atoms);
  if (atoms.size() < before) {
    return requantize(std::move(atoms), d.eta());
  }
  return QuantizedDist::from_atoms(std::move(atoms), d.eta());
}

// Piecewise-uniform density reconstruction. Cell boundaries sit at midpoints
// between consecutive distinct atom positions; the outermost cells extend
// outward by half the adjacent gap; density inside a cell is mass / width,
// zero outside. Integrates to one by construction. A zero-width support
// yields the finite sentinel at its own position.
inline double evaluate_pdf(const QuantizedDist& d, double z) {
  std::vector<Atom> atoms(d.atoms().begin(), d.atoms().end());
  detail::merge_equal_positions(atoms);
  const std::size_t n = atoms.size();
  if (n == 1) {
    ++engine_counters().degenerate_pdf_evals;
    return z == atoms[0].position ? kDegenerateDensitySentinel : 0.0;
  }
  std::vector<double> bounds(n + 1);
  bounds[0] = atoms[0].position - 0.5 * (atoms[1].position - atoms[0].position);
  for (std::size_t i = 1; i < n; ++i) {
    bounds[i] = 0.5 * (atoms[i - 1].position + atoms[i].position);
  }
  bounds[n] =
      atoms[n - 1].position + 0.5 * (atoms[n - 1].position - atoms[n - 2].position);
  if (z < bounds[0] || z > bounds[n]) return 0.0;
  // Cells are right-open except the last, which is closed at the top edge.
  auto it = std::upper_bound(bounds.begin(), bounds.end(), z);
  std::size_t cell = static_cast<std::size_t>(it - bounds.begin());
  cell = cell == 0 ? 0 : cell - 1;
  if (cell >= n) cell = n - 1;
  const double width = bounds[cell + 1] - bounds[cell];
  return atoms[cell].mass / width;
}

struct Moments {
  double mean;
  double variance;
};

// Exact discrete moments of the mixture.
inline Moments moments(const QuantizedDist& d) {
  CompensatedSum m1;
  for (const Atom& a : d.atoms()) m1.add(a.mass * a.position);
  const double mean = m1.value();
  CompensatedSum m2;
  for (const Atom& a : d.atoms()) {
    const double c = a.position - mean;
    m2.add(a.mass * c * c);
  }
  return Moments{mean, m2.value()};
}

}  // namespace detfilt
