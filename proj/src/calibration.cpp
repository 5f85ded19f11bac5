#include "drs/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "drs/error.hpp"

namespace drs {
namespace {

void check_inputs(std::span<const ScoredOutcome> outcomes) {
  if (outcomes.size() < 2) throw DataError("calibration needs at least two samples");
  for (const ScoredOutcome& o : outcomes) {
    if (!(o.score >= 0.0 && o.score <= 1.0)) throw DataError("calibration scores must lie in [0,1]");
  }
}

std::vector<ScoredOutcome> sorted_by_score(std::span<const ScoredOutcome> outcomes) {
  std::vector<ScoredOutcome> sorted(outcomes.begin(), outcomes.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score < b.score; });
  return sorted;
}

CalibrationResult summarize(const std::vector<ScoredOutcome>& sorted, const std::vector<std::size_t>& sizes) {
  CalibrationResult out;
  out.sample_count = sorted.size();
  double weighted_gap = 0.0;
  std::size_t begin = 0;
  for (std::size_t size : sizes) {
    CalibrationBin bin;
    bin.begin = begin;
    bin.end = begin + size;
    double score_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = bin.begin; i < bin.end; ++i) {
      score_sum += sorted[i].score;
      correct += sorted[i].correct ? 1 : 0;
    }
    const double n = static_cast<double>(size);
    bin.mean_score = score_sum / n;
    bin.accuracy = static_cast<double>(correct) / n;
    weighted_gap += std::abs(bin.mean_score - bin.accuracy) * n;
    out.bins.push_back(bin);
    begin = bin.end;
  }
  out.ece = weighted_gap / static_cast<double>(sorted.size());
  return out;
}

}  // namespace

std::vector<std::size_t> equal_count_sizes(std::size_t n, std::size_t bins) {
  if (bins < 1 || bins > n) throw ConfigError("bin count must lie in [1, N]");
  std::vector<std::size_t> sizes(bins, n / bins);
  for (std::size_t b = 0; b < n % bins; ++b) ++sizes[b];
  return sizes;
}

CalibrationResult adaptive_ece(std::span<const ScoredOutcome> outcomes) {
  check_inputs(outcomes);
  const std::vector<ScoredOutcome> sorted = sorted_by_score(outcomes);
  const std::size_t n = sorted.size();
  std::vector<std::size_t> correct_prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) correct_prefix[i + 1] = correct_prefix[i] + (sorted[i].correct ? 1 : 0);

  for (std::size_t bins = n; bins >= 1; --bins) {
    const std::size_t base = n / bins;
    const std::size_t extra = n % bins;
    bool monotone = true;
    double previous = -1.0;
    std::size_t begin = 0;
    for (std::size_t b = 0; b < bins && monotone; ++b) {
      const std::size_t size = base + (b < extra ? 1 : 0);
      const double acc =
          static_cast<double>(correct_prefix[begin + size] - correct_prefix[begin]) / static_cast<double>(size);
      monotone = acc >= previous;
      previous = acc;
      begin += size;
    }
    if (monotone) return summarize(sorted, equal_count_sizes(n, bins));
  }
  throw DataError("unreachable: a single bin is always monotone");
}

CalibrationResult fixed_bin_ece(std::span<const ScoredOutcome> outcomes, std::size_t bins) {
  check_inputs(outcomes);
  return summarize(sorted_by_score(outcomes), equal_count_sizes(outcomes.size(), bins));
}

CalibrationResult brute_force_binning_oracle(std::span<const ScoredOutcome> outcomes) {
  check_inputs(outcomes);
  const std::size_t n = outcomes.size();
  // Sort (score, input index) pairs; the index breaks ties.
  std::vector<std::pair<double, std::size_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) keyed[i] = {outcomes[i].score, i};
  std::sort(keyed.begin(), keyed.end());

  std::vector<CalibrationResult> admissible;
  for (std::size_t bins = n; bins >= 1; --bins) {
    // Bin of sorted position i: the first (n mod B) bins have base+1 slots.
    const std::size_t base = n / bins;
    const std::size_t extra = n % bins;
    auto bin_of = [&](std::size_t i) {
      const std::size_t big = extra * (base + 1);
      return i < big ? i / (base + 1) : extra + (i - big) / base;
    };
    std::vector<double> score_sum(bins, 0.0);
    std::vector<std::size_t> correct(bins, 0);
    std::vector<std::size_t> count(bins, 0);
    std::vector<std::size_t> first(bins, n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t b = bin_of(i);
      const ScoredOutcome& o = outcomes[keyed[i].second];
      score_sum[b] += o.score;
      correct[b] += o.correct ? 1 : 0;
      first[b] = std::min(first[b], i);
      ++count[b];
    }
    CalibrationResult candidate;
    candidate.sample_count = n;
    bool monotone = true;
    double gap = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      CalibrationBin bin;
      bin.begin = first[b];
      bin.end = first[b] + count[b];
      bin.mean_score = score_sum[b] / static_cast<double>(count[b]);
      bin.accuracy = static_cast<double>(correct[b]) / static_cast<double>(count[b]);
      if (b > 0 && bin.accuracy < candidate.bins.back().accuracy) monotone = false;
      gap += std::abs(bin.mean_score - bin.accuracy) * static_cast<double>(count[b]);
      candidate.bins.push_back(bin);
    }
    candidate.ece = gap / static_cast<double>(n);
    if (monotone) admissible.push_back(std::move(candidate));
  }
  return *std::max_element(admissible.begin(), admissible.end(),
                           [](const CalibrationResult& a, const CalibrationResult& b) {
                             return a.bin_count() < b.bin_count();
                           });
}

}  // namespace drs
