#pragma once

#include <span>
#include <string>
#include <vector>

#include "lcr/trace.hpp"

namespace lcr {

/// Log-probabilities (and optionally their parameter gradients) of every
/// token of a sequence given the query and the preceding tokens.
struct SequenceScore {
  std::vector<double> log_probs;
  std::vector<std::vector<double>> grads;
};

/// Autoregressive token policy over a query. Probabilities of all tokens that
/// can follow a prefix sum to one; tokens outside the support get -inf.
class PolicyInterface {
 public:
  virtual ~PolicyInterface() = default;

  virtual std::size_t parameter_count() const = 0;

  virtual double log_prob(const Query& query, std::span<const std::string> prefix, const std::string& token) const = 0;

  virtual std::vector<double> grad_log_prob(const Query& query, std::span<const std::string> prefix,
                                            const std::string& token) const = 0;

  /// Scores a whole sequence position by position. The default calls
  /// log_prob / grad_log_prob per token; policies with cheaper sequential
  /// scoring override it.
  virtual SequenceScore score(const Query& query, std::span<const std::string> tokens, bool with_gradient) const;
};

}  // namespace lcr
