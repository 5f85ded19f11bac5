#ifndef DRS_CALIBRATION_HPP
#define DRS_CALIBRATION_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace drs {

struct ScoredOutcome {
  double score = 0.0;  // predicted reliability / confidence in [0,1]
  bool correct = false;
};

struct CalibrationBin {
  std::size_t begin = 0;  // [begin, end) in score-sorted order
  std::size_t end = 0;
  double mean_score = 0.0;  // f_b
  double accuracy = 0.0;    // acc_b
  std::size_t count() const { return end - begin; }

  friend bool operator==(const CalibrationBin&, const CalibrationBin&) = default;
};

struct CalibrationResult {
  std::size_t sample_count = 0;  // N
  std::vector<CalibrationBin> bins;
  double ece = 0.0;

  std::size_t bin_count() const { return bins.size(); }
  friend bool operator==(const CalibrationResult&, const CalibrationResult&) = default;
};

// Sizes of B near-equal contiguous bins over N samples; the first N mod B
// bins hold one extra sample.
std::vector<std::size_t> equal_count_sizes(std::size_t n, std::size_t bins);

// Expected calibration error with equal-count bins. The bin count is the
// largest B (searched from N down) whose per-bin accuracies are
// non-decreasing in score order; B = 1 always qualifies.
//   ECE = (1/N) * sum_b |f_b - acc_b| * S_b
// Samples are stably sorted by score, so tied scores keep input order.
CalibrationResult adaptive_ece(std::span<const ScoredOutcome> outcomes);

// Same estimator with a caller-chosen bin count and no monotonicity search.
CalibrationResult fixed_bin_ece(std::span<const ScoredOutcome> outcomes, std::size_t bins);

// Independent re-derivation of adaptive_ece: builds the full binning for
// every B from N to 1 and keeps the largest admissible one.
CalibrationResult brute_force_binning_oracle(std::span<const ScoredOutcome> outcomes);

}  // namespace drs

#endif  // DRS_CALIBRATION_HPP
