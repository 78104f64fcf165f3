#include "lcr/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcr {

SequenceScore PolicyInterface::score(const Query& query, std::span<const std::string> tokens,
                                     bool with_gradient) const {
  SequenceScore out;
  out.log_probs.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto prefix = tokens.first(t);
    out.log_probs.push_back(log_prob(query, prefix, tokens[t]));
    if (with_gradient) out.grads.push_back(grad_log_prob(query, prefix, tokens[t]));
  }
  return out;
}

namespace {

// r - log r - 1 with log r = d; expm1 keeps the result non-negative near r = 1.
double kl_estimator(double log_ratio) { return std::expm1(log_ratio) - log_ratio; }

void require_finite(double v, std::string_view what, std::size_t group, std::size_t seq, std::size_t t) {
  if (!std::isfinite(v))
    throw std::domain_error(std::string(what) + " log-probability is not finite at group " + std::to_string(group) +
                            ", sequence " + std::to_string(seq) + ", token " + std::to_string(t));
}

}  // namespace

SequenceGroup make_sequence_group(const Group& group, const AdvantageMatrix& advantages) {
  if (advantages.rows.size() != group.compressed.size())
    throw std::invalid_argument("advantage rows do not match the group size");
  SequenceGroup out;
  for (std::size_t i = 0; i < group.compressed.size(); ++i) {
    PolicySequence seq{group.query, group.compressed[i].tokens(), advantages.rows[i]};
    if (seq.advantages.size() != seq.tokens.length())
      throw std::invalid_argument("advantage row " + std::to_string(i) + " does not match o' length");
    out.push_back(std::move(seq));
  }
  return out;
}

double prob_ratio(const PolicyInterface& policy_new, const PolicyInterface& policy_old, const Query& query,
                  const TokenSeq& o_prime, std::size_t t) {
  if (t >= o_prime.length()) throw std::out_of_range("prob_ratio: token index outside o'");
  const auto& toks = o_prime.tokens();
  const auto prefix = std::span<const std::string>(toks).first(t);
  const double lp_new = policy_new.log_prob(query, prefix, toks[t]);
  const double lp_old = policy_old.log_prob(query, prefix, toks[t]);
  require_finite(lp_new, "new-policy", 0, 0, t);
  require_finite(lp_old, "old-policy", 0, 0, t);
  return std::exp(lp_new - lp_old);
}

double kl_term(const PolicyInterface& policy_new, const PolicyInterface& policy_ref, const Query& query,
               const TokenSeq& o_prime, KlMode mode) {
  if (o_prime.empty()) return 0.0;
  const auto s_new = policy_new.score(query, o_prime.tokens(), false);
  const auto s_ref = policy_ref.score(query, o_prime.tokens(), false);
  if (mode == KlMode::Sequence) {
    double d = 0.0;
    for (std::size_t t = 0; t < o_prime.length(); ++t) d += s_ref.log_probs[t] - s_new.log_probs[t];
    return kl_estimator(d);
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < o_prime.length(); ++t) sum += kl_estimator(s_ref.log_probs[t] - s_new.log_probs[t]);
  return sum / static_cast<double>(o_prime.length());
}

ObjectiveReport objective(std::span<const SequenceGroup> groups, const PolicyInterface& policy_new,
                          const PolicyInterface& policy_old, const PolicyInterface& policy_ref,
                          const ObjectiveConfig& config) {
  if (groups.empty()) throw std::invalid_argument("objective: no groups");
  if (!(config.epsilon > 0.0) || config.beta < 0.0) throw std::invalid_argument("objective: need epsilon > 0, beta >= 0");

  const std::size_t p = policy_new.parameter_count();
  ObjectiveReport report;
  report.gradient.assign(p, 0.0);
  const double lo = 1.0 - config.epsilon;
  const double hi = 1.0 + config.epsilon;

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const SequenceGroup& group = groups[g];
    std::size_t token_count = 0;
    for (const auto& seq : group) token_count += seq.tokens.length();
    if (group.empty() || token_count == 0) throw std::invalid_argument("objective: empty group " + std::to_string(g));

    double group_sum = 0.0;
    std::vector<double> group_grad(p, 0.0);
    for (std::size_t i = 0; i < group.size(); ++i) {
      const PolicySequence& seq = group[i];
      const std::size_t len = seq.tokens.length();
      if (seq.advantages.size() != len)
        throw std::invalid_argument("objective: advantage/token length mismatch in group " + std::to_string(g) +
                                    ", sequence " + std::to_string(i));
      const auto s_new = policy_new.score(seq.query, seq.tokens.tokens(), true);
      const auto s_old = policy_old.score(seq.query, seq.tokens.tokens(), false);
      const auto s_ref = policy_ref.score(seq.query, seq.tokens.tokens(), false);
      for (std::size_t t = 0; t < len; ++t) {
        require_finite(s_new.log_probs[t], "new-policy", g, i, t);
        require_finite(s_old.log_probs[t], "old-policy", g, i, t);
        require_finite(s_ref.log_probs[t], "reference-policy", g, i, t);
      }

      double seq_log_ratio = 0.0;
      for (std::size_t t = 0; t < len; ++t) seq_log_ratio += s_ref.log_probs[t] - s_new.log_probs[t];
      const double seq_kl = kl_estimator(seq_log_ratio);
      // d(seq_kl)/d(log pi_new(o'_t)) for every t
      const double seq_kl_slope = -std::expm1(seq_log_ratio);

      for (std::size_t t = 0; t < len; ++t) {
        const double adv = seq.advantages[t];
        const double ratio = std::exp(s_new.log_probs[t] - s_old.log_probs[t]);
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, lo, hi) * adv;
        const bool use_clipped = clipped < unclipped;
        const double surrogate = use_clipped ? clipped : unclipped;
        const double surrogate_slope = use_clipped ? 0.0 : unclipped;

        double kl = 0.0;
        double kl_slope = 0.0;
        if (config.kl_mode == KlMode::PerToken) {
          const double d = s_ref.log_probs[t] - s_new.log_probs[t];
          kl = kl_estimator(d);
          kl_slope = -std::expm1(d);
        } else {
          kl = seq_kl;
          kl_slope = static_cast<double>(len) * seq_kl_slope;
        }

        group_sum += surrogate - config.beta * kl;
        const double coeff = surrogate_slope - config.beta * kl_slope;
        if (coeff != 0.0) {
          const auto& grad = s_new.grads[t];
          for (std::size_t k = 0; k < p; ++k) group_grad[k] += coeff * grad[k];
        }
        report.per_token_terms.push_back(TokenTerm{ratio, use_clipped, kl, adv});
      }
    }
    const double norm = static_cast<double>(token_count);
    report.value += group_sum / norm;
    for (std::size_t k = 0; k < p; ++k) report.gradient[k] += group_grad[k] / norm;
  }

  const double n_groups = static_cast<double>(groups.size());
  report.value /= n_groups;
  for (auto& v : report.gradient) v /= n_groups;
  if (!std::isfinite(report.value)) throw std::domain_error("objective: non-finite value");
  return report;
}

}  // namespace lcr
