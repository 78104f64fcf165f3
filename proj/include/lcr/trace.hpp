#pragma once

#include <string>
#include <vector>

#include "lcr/answer.hpp"
#include "lcr/tokens.hpp"

namespace lcr {

struct Query {
  std::string id;
  std::string prompt;
  AnswerKey ground_truth;
};

struct Markers {
  std::string open = "<think>";
  std::string close = "</think>";
};

/// Result of splitting raw output text at the end-of-think marker.
struct SplitOutput {
  std::string thinking;
  std::string answer_part;
  bool format_ok = false;
};

/// Thinking is the text strictly between the first open marker and the first
/// close marker; the answer part starts at (and includes) the first close
/// marker. Without a close marker everything after the open marker (or the
/// whole text) is thinking and the answer part is empty.
SplitOutput split_output(std::string_view raw, std::string_view open_marker, std::string_view close_marker);

/// One model output. `lead` holds the tokens up to and including the open
/// marker, so tokens(raw) == lead + thinking + answer_part.
struct Trace {
  std::string query_id;
  std::string raw;
  TokenSeq lead;
  TokenSeq thinking;
  TokenSeq answer_part;
  bool format_ok = false;
  bool correct = false;

  /// |o| = |R| + |A|; the open marker belongs to the prompt template.
  std::size_t output_length() const { return thinking.length() + answer_part.length(); }
};

struct TraceOptions {
  TokenizerOptions tokenizer;
  Markers markers;
  MatchOptions match;
};

/// Token-level split of a whole output, same first-occurrence rules as split_output.
Trace split_tokens(std::string query_id, std::string raw, const TokenSeq& tokens, const Markers& markers);

/// Tokenizes and splits `raw`, then judges correctness of the answer part
/// against `key`. In pre-tokenized mode `raw` must be a whitespace-separated id list.
Trace make_trace(std::string query_id, std::string raw, const AnswerKey& key, const TraceOptions& options = {});

/// Same, with tokens supplied by the caller (pre-tokenized model dumps).
Trace make_trace_from_tokens(std::string query_id, std::string raw, const TokenSeq& tokens, const AnswerKey& key,
                             const TraceOptions& options = {});

/// f(o) for one trace: the thinking prefix R' followed by the unchanged answer part.
struct CompressedTrace {
  std::string query_id;
  TokenSeq valid_thinking;
  TokenSeq answer_part;
  std::size_t cut_index = 0;
  std::size_t source_thinking_length = 0;
  bool answer_found_in_thinking = false;

  TokenSeq tokens() const { return valid_thinking.concat(answer_part); }
  std::size_t output_length() const { return valid_thinking.length() + answer_part.length(); }
};

/// G outputs for one query. `compressed` is parallel to `traces`; indices in
/// `correct_idx` and `wrong_idx` partition 0..G-1 by the traces' correct flag.
struct Group {
  Query query;
  std::vector<Trace> traces;
  std::vector<CompressedTrace> compressed;
  std::vector<std::size_t> correct_idx;
  std::vector<std::size_t> wrong_idx;

  std::size_t size() const { return traces.size(); }
  bool is_correct(std::size_t i) const { return traces.at(i).correct; }
};

/// Human-readable descriptions of every broken Group invariant ("index 2:
/// partition mismatch"); empty when the group is well formed.
std::vector<std::string> validate_group(const Group& group, const Markers& markers = {});

}  // namespace lcr
