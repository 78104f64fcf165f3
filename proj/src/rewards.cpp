#include "lcr/rewards.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "lcr/answer.hpp"

namespace lcr {

BaseReward base_reward(const Trace& o, const AnswerKey& key, const MatchOptions& options) {
  BaseReward r;
  r.format = o.format_ok ? 1 : 0;
  r.accuracy = judge_answer(o.answer_part, key, options) ? 1 : 0;
  return r;
}

std::vector<double> length_rewards(const Group& group) {
  const std::size_t g = group.size();
  if (group.compressed.size() != g) throw std::invalid_argument("length_rewards: compressed traces missing");
  std::vector<double> out(g, 0.0);
  std::size_t longest = 0;
  for (const auto i : group.correct_idx) longest = std::max(longest, group.compressed[i].output_length());
  if (longest == 0) return out;
  for (const auto i : group.correct_idx)
    out[i] = 1.0 - static_cast<double>(group.compressed[i].output_length()) / static_cast<double>(longest);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> combine_rewards(std::span<const int> r_base,
                                                                     std::span<const double> r_length, double alpha) {
  if (r_base.empty()) throw std::invalid_argument("combine_rewards: empty group");
  if (r_base.size() != r_length.size()) throw std::invalid_argument("combine_rewards: size mismatch");
  const std::size_t g = r_base.size();
  std::vector<double> tilde(g);
  for (std::size_t i = 0; i < g; ++i) tilde[i] = static_cast<double>(r_base[i]) + alpha * r_length[i];
  const double mean = std::accumulate(tilde.begin(), tilde.end(), 0.0) / static_cast<double>(g);
  std::vector<double> combine(g);
  for (std::size_t i = 0; i < g; ++i) combine[i] = tilde[i] - mean;
  return {std::move(tilde), std::move(combine)};
}

double compress_reward(const Trace& o, const CompressedTrace& o_prime, const AnswerKey& key,
                       const MatchOptions& options) {
  if (!o.correct) return 0.0;
  const std::size_t full = o.thinking.length();
  if (full == 0 || !detect_first_answer(o_prime.valid_thinking, key, options)) return -1.0;
  return 1.0 - static_cast<double>(o_prime.valid_thinking.length()) / static_cast<double>(full);
}

RewardBundle compute_rewards(const Group& group, const RewardConfig& config, const MatchOptions& options) {
  const std::size_t g = group.size();
  if (g == 0) throw std::invalid_argument("compute_rewards: empty group");
  RewardBundle b;
  const AnswerKey& key = group.query.ground_truth;
  for (std::size_t i = 0; i < g; ++i) {
    const BaseReward base = base_reward(group.traces[i], key, options);
    b.r_format.push_back(base.format);
    b.r_accuracy.push_back(base.accuracy);
    b.r_base.push_back(base.total());
  }
  b.r_length = length_rewards(group);
  std::tie(b.r_tilde, b.r_combine) = combine_rewards(b.r_base, b.r_length, config.alpha);
  for (std::size_t i = 0; i < g; ++i) {
    const Trace& o = group.traces[i];
    if (o.correct && o.thinking.empty())
      b.warnings.push_back("index " + std::to_string(i) + ": correct trace with empty thinking, compress reward -1");
    b.r_compress.push_back(compress_reward(o, group.compressed[i], key, options));
  }
  return b;
}

AdvantageMatrix assemble_advantages(const Group& group, const RewardBundle& bundle, double gamma,
                                    const std::string& close_marker) {
  const std::size_t g = group.size();
  if (bundle.r_combine.size() != g || bundle.r_compress.size() != g)
    throw std::invalid_argument("assemble_advantages: reward bundle does not match group");
  AdvantageMatrix adv;
  adv.gamma = gamma;
  for (std::size_t i = 0; i < g; ++i) {
    const CompressedTrace& c = group.compressed[i];
    const TokenSeq tokens = c.tokens();
    std::vector<double> row(tokens.length(), bundle.r_combine[i]);
    std::size_t bonus = std::string::npos;
    for (std::size_t t = tokens.length(); t-- > 0;) {
      if (tokens[t] == close_marker) {
        bonus = t;
        break;
      }
    }
    if (bonus != std::string::npos) row[bonus] += gamma * bundle.r_compress[i];
    adv.rows.push_back(std::move(row));
    adv.bonus_position.push_back(bonus);
  }
  return adv;
}

}  // namespace lcr
