#pragma once

#include <span>
#include <vector>

#include "lcr/policy.hpp"
#include "lcr/rewards.hpp"

namespace lcr {

enum class KlMode {
  PerToken,  // r - log r - 1 per token with r = pi_ref / pi_theta at that token
  Sequence,  // same estimator on whole-sequence probabilities, charged to every token
};

struct ObjectiveConfig {
  double epsilon = 0.2;
  double beta = 0.04;
  KlMode kl_mode = KlMode::PerToken;
};

/// One compressed output o'_i with its per-token advantages.
struct PolicySequence {
  Query query;
  TokenSeq tokens;
  std::vector<double> advantages;
};

using SequenceGroup = std::vector<PolicySequence>;

struct TokenTerm {
  double ratio = 1.0;
  bool clipped = false;  // the clipped branch is selected and binding
  double kl = 0.0;
  double advantage = 0.0;
};

struct ObjectiveReport {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<TokenTerm> per_token_terms;
};

/// Pairs o'_i tokens of a group with the matching advantage rows.
SequenceGroup make_sequence_group(const Group& group, const AdvantageMatrix& advantages);

/// pi_new(o'_t | q, o'_<t) / pi_old(o'_t | q, o'_<t). Throws std::domain_error
/// when either log-probability is not finite.
double prob_ratio(const PolicyInterface& policy_new, const PolicyInterface& policy_old, const Query& query,
                  const TokenSeq& o_prime, std::size_t t);

/// Estimator r - log r - 1 with r = pi_ref / pi_new, averaged over the tokens
/// of o' (per-token mode) or evaluated once on the sequence probabilities.
double kl_term(const PolicyInterface& policy_new, const PolicyInterface& policy_ref, const Query& query,
               const TokenSeq& o_prime, KlMode mode = KlMode::PerToken);

/// Clipped surrogate minus beta * KL, summed over every token of a group and
/// divided by the group's total token count, then averaged over groups. The
/// gradient is analytic with respect to policy_new's parameters.
ObjectiveReport objective(std::span<const SequenceGroup> groups, const PolicyInterface& policy_new,
                          const PolicyInterface& policy_old, const PolicyInterface& policy_ref,
                          const ObjectiveConfig& config);

}  // namespace lcr
