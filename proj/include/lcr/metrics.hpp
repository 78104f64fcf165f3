#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcr/extractor.hpp"
#include "lcr/rational.hpp"

namespace lcr {

enum class VtEligibility {
  AnswerFound,  // only traces whose thinking contains the reference answer
  AllNonEmpty,  // every trace with non-empty thinking
};

struct VtOptions {
  VtEligibility eligibility = VtEligibility::AnswerFound;
  bool token_weighted = false;  // sum(valid) / sum(total) instead of the mean of ratios
  MatchOptions match;
};

struct VtItem {
  std::string benchmark;
  Trace trace;
  AnswerKey key;
};

/// Means are nullopt when no trace is eligible.
struct CorpusVt {
  std::optional<double> mean;
  std::map<std::string, std::optional<double>> per_benchmark;
  std::size_t eligible = 0;
  std::size_t empty_thinking = 0;
};

CorpusVt corpus_vt(std::span<const VtItem> items, const VtOptions& options = {});

struct BenchReport {
  std::string benchmark;
  double accuracy = 0.0;
  double mean_length = 0.0;
  std::size_t n_samples = 0;
};

struct BenchDelta {
  std::string benchmark;
  double delta_acc = 0.0;
  double delta_len = 0.0;
};

struct DeltaReport {
  double avg_acc = 0.0;
  double avg_len = 0.0;
  std::vector<BenchDelta> per_benchmark;  // in the order of `model`
};

/// Per benchmark (model - base) / base for accuracy and length, averaged over
/// benchmarks. Benchmark sets must match and base values must be non-zero.
DeltaReport avg_deltas(std::span<const BenchReport> model, std::span<const BenchReport> base);

/// Benchmark rows from sampled outputs: accuracy is averaged pass@1, length
/// the mean |o| over all samples (or over correct samples only).
std::vector<BenchReport> bench_reports(std::span<const VtItem> items, bool correct_only_length = false);

/// Unbiased pass@k estimate 1 - C(n-c, k) / C(n, k).
double pass_at_k(std::size_t n, std::size_t c, std::size_t k);
Rational pass_at_k_exact(std::size_t n, std::size_t c, std::size_t k);

}  // namespace lcr
