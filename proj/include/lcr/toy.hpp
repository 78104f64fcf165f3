#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lcr/grpo.hpp"
#include "lcr/policy.hpp"
#include "lcr/trace.hpp"

namespace lcr::toy {

/// Deterministic stream: mt19937_64 output is fixed by the standard, and the
/// conversion to [0, 1) below does not depend on the library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Independent stream for (seed, a, b) via SplitMix64 mixing.
  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n)

 private:
  std::mt19937_64 engine_;
};

/// Arithmetic prompt with an exactly known answer.
struct ToyTask {
  Query query;
  std::string expression;  // whitespace-separated, e.g. "( 3 + 4 ) * 2"
  std::size_t depth = 0;   // number of operators
};

/// Draws depth 1..3 and single-digit operands over + - * /.
ToyTask gen_task(Rng& rng, std::string id = "toy");

/// Environment shape shared by sampling and scoring.
struct ToyShape {
  std::size_t digress_cap = 4;
  std::size_t verify_cap = 8;
  // Allows "</think>" before the answer statement; such guesses are right
  // with logit (correct - guess_penalty).
  bool allow_premature = false;
  double guess_penalty = 3.0;
};

/// Fixed emission templates.
namespace tmpl {
inline const std::vector<std::string> kReasonStep = {"apply", "the", "next", "operation", "."};
inline const std::string kContinue = "therefore";
inline const std::string kDigressOpen = "hmm";
inline const std::vector<std::string> kDigressBody = {"let", "me", "restate", "the", "problem", "."};
inline const std::vector<std::string> kStatement = {"so", "the", "result", "is"};
inline const std::string kVerifyOpen = "wait";
inline const std::vector<std::string> kVerifyBody = {",", "let", "me", "double", "check", "that", "once", "more", "."};
inline const std::string kThinkOpen = "<think>";
inline const std::string kThinkClose = "</think>";
inline const std::vector<std::string> kFinal = {"the", "answer", "is"};
}  // namespace tmpl

/// Redundancy-chain policy. Thinking is `depth` reasoning steps, an optional
/// premature "</think>", a chain of restatements, the answer statement, and a
/// chain of verification segments; then "</think>" and a boxed final answer.
/// Every stochastic token is a two-way choice governed by one logit:
///   [0] correctness of the stated value
///   [1] premature termination (only with allow_premature)
///   [2, 2 + digress_cap) stop restating at step j
///   [2 + digress_cap, ... + verify_cap) terminate instead of verifying at step k
/// All other tokens are deterministic.
class ToyPolicy final : public PolicyInterface {
 public:
  ToyPolicy(ToyShape shape, std::vector<double> logits, double temperature = 1.0);

  static std::size_t parameter_count_for(const ToyShape& shape) { return 2 + shape.digress_cap + shape.verify_cap; }
  static constexpr std::size_t kCorrectIndex = 0;
  static constexpr std::size_t kPrematureIndex = 1;
  std::size_t digress_index(std::size_t step) const { return 2 + step; }
  std::size_t terminate_index(std::size_t step) const { return 2 + shape_.digress_cap + step; }

  const ToyShape& shape() const { return shape_; }
  const std::vector<double>& logits() const { return logits_; }
  std::vector<double>& logits() { return logits_; }
  double temperature() const { return temperature_; }

  std::size_t parameter_count() const override { return logits_.size(); }
  double log_prob(const Query& query, std::span<const std::string> prefix, const std::string& token) const override;
  std::vector<double> grad_log_prob(const Query& query, std::span<const std::string> prefix,
                                    const std::string& token) const override;
  SequenceScore score(const Query& query, std::span<const std::string> tokens, bool with_gradient) const override;

  /// Every token the policy can emit for this query.
  std::vector<std::string> vocabulary(const Query& query) const;

  /// Output tokens (after the open marker) of one rollout.
  std::vector<std::string> sample(const Query& query, Rng& rng, double temperature) const;

  /// Closed-form mean number of verification segments.
  double expected_verify_count(double temperature) const;

 private:
  ToyShape shape_;
  std::vector<double> logits_;
  double temperature_;
};

/// G rollouts of the policy, compressed and partitioned.
Group sample_group(const ToyPolicy& policy, const ToyTask& task, std::size_t group_size, double temperature, Rng& rng);

struct TrainConfig {
  double alpha = 1.0;
  double beta = 0.04;
  double gamma = 1.0;
  double epsilon = 0.2;
  std::size_t group_size = 8;
  std::size_t batch_size = 32;  // queries per step
  std::size_t inner_iterations = 2;
  std::size_t steps = 200;
  double learning_rate = 8.0;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  KlMode kl_mode = KlMode::PerToken;

  ToyShape shape;
  double init_correct = 4.0;
  double init_premature = -2.0;
  double init_digress = 0.0;
  double init_terminate = -1.5;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
  ToyPolicy initial_policy() const;
};

/// Applies key=value settings (same names as the fields). Unknown keys throw.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);
/// Effective configuration as sorted key=value lines.
std::string describe(const TrainConfig& config);

struct StepRecord {
  std::size_t step = 0;
  double mean_vt = 0.0;
  double mean_length = 0.0;
  double mean_accuracy = 0.0;
  double objective = 0.0;
  double terminate_logit = 0.0;
};

using TrainHistory = std::vector<StepRecord>;

struct TrainResult {
  ToyPolicy policy;
  TrainHistory history;
};

/// Runs the full loop: snapshot, sample, compress, reward, advantages and
/// inner_iterations ascent steps on the objective. Throws std::runtime_error
/// if the objective stops being finite.
TrainResult train(const TrainConfig& config);

/// One JSON object per line, fixed key order.
std::string history_to_jsonl(const TrainHistory& history);

/// Batch rollouts and advantages for one step; exposed for gradient tests.
struct StepBatch {
  std::vector<Group> groups;
  std::vector<RewardBundle> rewards;
  std::vector<SequenceGroup> sequences;
};
StepBatch collect_batch(const ToyPolicy& policy, const TrainConfig& config, std::size_t step);

}  // namespace lcr::toy
