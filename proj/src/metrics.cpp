#include "lcr/metrics.hpp"

#include <set>
#include <stdexcept>

namespace lcr {

namespace {

struct VtAccumulator {
  double ratio_sum = 0.0;
  double valid_sum = 0.0;
  double total_sum = 0.0;
  std::size_t n = 0;

  void add(const VTStat& s) {
    ratio_sum += s.vt;
    valid_sum += static_cast<double>(s.valid_tokens);
    total_sum += static_cast<double>(s.total_tokens);
    ++n;
  }

  std::optional<double> mean(bool token_weighted) const {
    if (n == 0) return std::nullopt;
    return token_weighted ? valid_sum / total_sum : ratio_sum / static_cast<double>(n);
  }
};

void check_pass_args(std::size_t n, std::size_t c, std::size_t k) {
  if (c > n) throw std::invalid_argument("pass@k: c > n");
  if (k < 1 || k > n) throw std::invalid_argument("pass@k: k must lie in [1, n]");
}

}  // namespace

CorpusVt corpus_vt(std::span<const VtItem> items, const VtOptions& options) {
  CorpusVt out;
  VtAccumulator all;
  std::map<std::string, VtAccumulator> by_bench;
  for (const auto& item : items) {
    by_bench.try_emplace(item.benchmark);
    if (item.trace.thinking.empty()) {
      ++out.empty_thinking;
      continue;
    }
    const CompressedTrace c = compress(item.trace, item.key, options.match);
    if (options.eligibility == VtEligibility::AnswerFound && !c.answer_found_in_thinking) continue;
    const auto stat = vt_rate(item.trace, c);
    all.add(*stat);
    by_bench[item.benchmark].add(*stat);
  }
  out.eligible = all.n;
  out.mean = all.mean(options.token_weighted);
  for (const auto& [name, acc] : by_bench) out.per_benchmark[name] = acc.mean(options.token_weighted);
  return out;
}

DeltaReport avg_deltas(std::span<const BenchReport> model, std::span<const BenchReport> base) {
  std::map<std::string, const BenchReport*> base_by_name;
  for (const auto& b : base) {
    if (!base_by_name.emplace(b.benchmark, &b).second)
      throw std::invalid_argument("duplicate base benchmark: " + b.benchmark);
  }
  std::set<std::string> model_names;
  for (const auto& m : model) {
    if (!model_names.insert(m.benchmark).second) throw std::invalid_argument("duplicate model benchmark: " + m.benchmark);
  }
  if (model.empty() || model_names.size() != base_by_name.size())
    throw std::invalid_argument("benchmark sets differ between model and base");

  DeltaReport out;
  for (const auto& m : model) {
    const auto it = base_by_name.find(m.benchmark);
    if (it == base_by_name.end()) throw std::invalid_argument("benchmark missing from base: " + m.benchmark);
    const BenchReport& b = *it->second;
    if (b.accuracy == 0.0 || b.mean_length == 0.0)
      throw std::invalid_argument("zero base value for benchmark: " + m.benchmark);
    BenchDelta d{m.benchmark, (m.accuracy - b.accuracy) / b.accuracy, (m.mean_length - b.mean_length) / b.mean_length};
    out.avg_acc += d.delta_acc;
    out.avg_len += d.delta_len;
    out.per_benchmark.push_back(std::move(d));
  }
  out.avg_acc /= static_cast<double>(model.size());
  out.avg_len /= static_cast<double>(model.size());
  return out;
}

std::vector<BenchReport> bench_reports(std::span<const VtItem> items, bool correct_only_length) {
  struct Acc {
    std::size_t n = 0;
    std::size_t correct = 0;
    double len_sum = 0.0;
    std::size_t len_n = 0;
  };
  std::map<std::string, Acc> by_bench;
  for (const auto& item : items) {
    Acc& a = by_bench[item.benchmark];
    ++a.n;
    if (item.trace.correct) ++a.correct;
    if (!correct_only_length || item.trace.correct) {
      a.len_sum += static_cast<double>(item.trace.output_length());
      ++a.len_n;
    }
  }
  std::vector<BenchReport> out;
  for (const auto& [name, a] : by_bench) {
    BenchReport r;
    r.benchmark = name;
    r.n_samples = a.n;
    r.accuracy = static_cast<double>(a.correct) / static_cast<double>(a.n);
    r.mean_length = a.len_n ? a.len_sum / static_cast<double>(a.len_n) : 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  check_pass_args(n, c, k);
  if (n - c < k) return 1.0;
  // C(n-c, k) / C(n, k) = prod_{i=n-c+1}^{n} (1 - k / i)
  double miss = 1.0;
  for (std::size_t i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  return 1.0 - miss;
}

Rational pass_at_k_exact(std::size_t n, std::size_t c, std::size_t k) {
  check_pass_args(n, c, k);
  if (n - c < k) return Rational(1);
  Rational miss(1);
  for (std::size_t i = n - c + 1; i <= n; ++i)
    miss = miss * Rational(static_cast<std::int64_t>(i - k), static_cast<std::int64_t>(i));
  return Rational(1) - miss;
}

}  // namespace lcr
