#pragma once

#include <span>
#include <string>
#include <vector>

#include "lcr/trace.hpp"

namespace lcr {

struct BaseReward {
  int format = 0;
  int accuracy = 0;
  int total() const { return format + accuracy; }
};

/// Per-trace rewards for one group, all vectors of length G.
struct RewardBundle {
  std::vector<int> r_format;
  std::vector<int> r_accuracy;
  std::vector<int> r_base;
  std::vector<double> r_length;
  std::vector<double> r_tilde;
  std::vector<double> r_combine;
  std::vector<double> r_compress;
  std::vector<std::string> warnings;
};

/// Per-token advantages over the tokens of each compressed output o'_i.
struct AdvantageMatrix {
  std::vector<std::vector<double>> rows;
  // Position of the bonus-carrying end-of-think token per row; npos when absent.
  std::vector<std::size_t> bonus_position;
  double gamma = 1.0;
};

struct RewardConfig {
  double alpha = 1.0;
  double gamma = 1.0;
};

BaseReward base_reward(const Trace& o, const AnswerKey& key, const MatchOptions& options = {});

/// 1 - |o'_i| / max_{j in C} |o'_j| for correct traces, 0 for wrong ones.
std::vector<double> length_rewards(const Group& group);

/// Returns (r_tilde, r_combine): r_tilde = r_base + alpha * r_length, centered
/// by the group mean. Throws std::invalid_argument on an empty group.
std::pair<std::vector<double>, std::vector<double>> combine_rewards(std::span<const int> r_base,
                                                                     std::span<const double> r_length, double alpha);

/// Removed-thinking fraction 1 - |t(o')|/|t(o)| when the key survives in t(o'),
/// -1 when a correct trace's thinking never reaches the key, 0 for wrong traces.
double compress_reward(const Trace& o, const CompressedTrace& o_prime, const AnswerKey& key,
                       const MatchOptions& options = {});

RewardBundle compute_rewards(const Group& group, const RewardConfig& config, const MatchOptions& options = {});

/// Fills each row with r_combine,i and adds gamma * r_compress,i on the last
/// end-of-think marker of o'_i. Rows without a marker get no bonus.
AdvantageMatrix assemble_advantages(const Group& group, const RewardBundle& bundle, double gamma,
                                    const std::string& close_marker = "</think>");

}  // namespace lcr
