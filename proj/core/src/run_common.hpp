#pragma once

// Internal helpers shared by the training-run implementations.

#include "snoh/engine.hpp"
#include "snoh/report.hpp"

#include <chrono>

namespace snoh::detail {

inline void require_split(const Graph& g) {
  if (g.split().train.empty() || g.split().val.empty() || g.split().test.empty()) {
    throw ConfigError("training requires non-empty train/val/test splits");
  }
}

inline void record_epoch(ReportBuilder& report, int epoch, const ForwardTape& tape,
                         const Graph& g) {
  const auto tr = loss_and_accuracy(tape, g, g.split().train);
  const auto va = loss_and_accuracy(tape, g, g.split().val);
  const auto te = loss_and_accuracy(tape, g, g.split().test);
  report.add_epoch(epoch, tr.loss, tr.accuracy, va.accuracy, te.accuracy);
}

// Mean cosine distance per layer from one tape; zero-norm rows feed the
// report diagnostics counter.
inline std::vector<double> mean_distances(const ForwardTape& tape, int depth,
                                          std::int64_t* zero_norm_rows) {
  std::vector<double> means(depth, 0.0);
  for (int l = 0; l < depth; ++l) {
    const auto d = cosine_distance_per_node(tape, l, zero_norm_rows);
    double sum = 0.0;
    for (double v : d) sum += v;
    means[l] = d.empty() ? 0.0 : sum / static_cast<double>(d.size());
  }
  return means;
}

class WallClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Annotates numeric aborts with the epoch they happened in.
template <class Fn>
void epoch_guard(int epoch, Fn&& fn) {
  try {
    fn();
  } catch (NumericError& err) {
    err.set_epoch(epoch);
    throw;
  }
}

}  // namespace snoh::detail
