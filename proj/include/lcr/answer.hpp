#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "lcr/rational.hpp"
#include "lcr/tokens.hpp"

namespace lcr {

enum class AnswerKind { Rational, Decimal, SymbolicText };

std::string_view to_string(AnswerKind kind);

/// Canonical answer form. `value` is the reduced fraction ("a" or "a/b"), the
/// canonical decimal digits (at least one fractional digit, e.g. "2.0"), or the
/// lowercased whitespace-collapsed text. `exact` is set for the numeric kinds.
struct NormalizedAnswer {
  AnswerKind kind = AnswerKind::SymbolicText;
  std::string value;
  std::optional<Rational> exact;

  /// Text that normalizes back to this same answer.
  const std::string& render() const { return value; }

  bool operator==(const NormalizedAnswer&) const = default;
};

struct AnswerKey {
  std::string surface;
  NormalizedAnswer normalized;
};

struct MatchOptions {
  // When set, a rational never matches a decimal (0.5 and 1/2 differ).
  bool strict_surface = false;
};

/// Strips $..$, \(..\), \boxed{..}, \text{..} and brace wrappers, latex spacing
/// commands, surrounding whitespace and trailing punctuation, then parses
/// integers, fractions (a/b and \frac{a}{b}) and finite decimals.
NormalizedAnswer normalize_answer(std::string_view surface);

AnswerKey make_answer_key(std::string_view surface);

bool answers_equivalent(const NormalizedAnswer& a, const NormalizedAnswer& b, const MatchOptions& options = {});

/// A token range [start_token, end_token) of some sequence.
struct CandidateSpan {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  std::string surface;
  NormalizedAnswer normalized;
};

/// First span in `thinking` whose normalized form is equivalent to the key.
/// Candidates are number literals inside a token, whole tokens, "a / b"
/// triples, \boxed{...} groups spanning several tokens, and runs as long as the
/// key's own surface. The winner has the smallest end_token; among spans that
/// end on the same token the shorter one is preferred.
std::optional<CandidateSpan> detect_first_answer(const TokenSeq& thinking, const AnswerKey& key,
                                                 const MatchOptions& options = {});

/// Last \boxed{...} expression in a token sequence, if any.
std::optional<CandidateSpan> last_boxed(const TokenSeq& tokens);

/// Final-answer judgement over an answer region: the last \boxed{} expression
/// decides when one exists, otherwise any equivalent candidate counts.
bool judge_answer(const TokenSeq& answer_part, const AnswerKey& key, const MatchOptions& options = {});

}  // namespace lcr
