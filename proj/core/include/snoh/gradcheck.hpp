#pragma once

#include "snoh/engine.hpp"

#include <array>

namespace snoh {

struct GradCheckOptions {
  int trials = 50;        // valid instances to check
  int max_nodes = 12;
  int max_depth = 4;
  double tolerance = 1e-4;
  double step = 1e-3;     // central-difference step
  std::uint64_t seed = 20240501;
};

struct GradCheckCell {
  double max_rel_err = 0.0;
  std::int64_t targets = 0;
};

struct GradCheckResult {
  // Indexed by Variant (GCN, ResGCN, JKNet).
  std::array<GradCheckCell, 3> weight;
  std::array<GradCheckCell, 3> adjacency;
  int instances = 0;
  // Instances regenerated because a ReLU pre-activation sat inside the
  // finite-difference window (the central difference is invalid there).
  int resampled = 0;

  double max_rel_err() const;
  bool pass(double tolerance) const { return instances > 0 && max_rel_err() < tolerance; }
};

// Compares analytic weight and adjacency-entry gradients against central
// finite differences on random masked-graph instances of all three variants.
// Relative error uses a scale floor: |a-f| / max(|a|, |f|, 1e-2).
GradCheckResult gradcheck(const GradCheckOptions& opts);

double gradcheck_rel_err(double analytic, double numeric);

}  // namespace snoh
