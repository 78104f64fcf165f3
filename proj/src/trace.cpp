#include "lcr/trace.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace lcr {

namespace {

bool only_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

void check_markers(std::string_view open_marker, std::string_view close_marker) {
  if (open_marker.empty() || close_marker.empty() || open_marker == close_marker)
    throw std::invalid_argument("markers must be non-empty and distinct");
}

}  // namespace

SplitOutput split_output(std::string_view raw, std::string_view open_marker, std::string_view close_marker) {
  check_markers(open_marker, close_marker);
  SplitOutput out;
  const auto close = raw.find(close_marker);
  const auto open = raw.find(open_marker);
  const bool open_first = open != std::string_view::npos && (close == std::string_view::npos || open < close);
  const std::size_t think_begin = open_first ? open + open_marker.size() : 0;

  if (close == std::string_view::npos) {
    out.thinking = std::string(raw.substr(think_begin));
    return out;
  }
  out.thinking = std::string(raw.substr(think_begin, close - think_begin));
  out.answer_part = std::string(raw.substr(close));
  out.format_ok = open_first && only_space(raw.substr(0, open)) &&
                  out.thinking.find(open_marker) == std::string::npos;
  return out;
}

Trace split_tokens(std::string query_id, std::string raw, const TokenSeq& tokens, const Markers& markers) {
  check_markers(markers.open, markers.close);
  const auto& t = tokens.tokens();
  const auto close_it = std::find(t.begin(), t.end(), markers.close);
  const auto open_it = std::find(t.begin(), close_it, markers.open);
  const std::size_t close = static_cast<std::size_t>(close_it - t.begin());
  const bool has_open = open_it != close_it;
  const std::size_t open = static_cast<std::size_t>(open_it - t.begin());
  const std::size_t think_begin = has_open ? open + 1 : 0;

  Trace trace;
  trace.query_id = std::move(query_id);
  trace.raw = std::move(raw);
  trace.lead = tokens.slice(0, think_begin);
  trace.thinking = tokens.slice(think_begin, close);
  trace.answer_part = tokens.slice(close, t.size());
  const bool has_close = close_it != t.end();
  const auto& th = trace.thinking.tokens();
  trace.format_ok = has_close && has_open && open == 0 &&
                    std::find(th.begin(), th.end(), markers.open) == th.end();
  return trace;
}

Trace make_trace_from_tokens(std::string query_id, std::string raw, const TokenSeq& tokens, const AnswerKey& key,
                             const TraceOptions& options) {
  Trace trace = split_tokens(std::move(query_id), std::move(raw), tokens, options.markers);
  trace.correct = judge_answer(trace.answer_part, key, options.match);
  return trace;
}

Trace make_trace(std::string query_id, std::string raw, const AnswerKey& key, const TraceOptions& options) {
  TokenizerOptions tok = options.tokenizer;
  if (tok.mode == TokenizationMode::Whitespace) tok.markers = {options.markers.open, options.markers.close};
  const TokenSeq tokens = tokenize(raw, tok);
  return make_trace_from_tokens(std::move(query_id), std::move(raw), tokens, key, options);
}

std::vector<std::string> validate_group(const Group& group, const Markers& markers) {
  std::vector<std::string> issues;
  const std::size_t g = group.traces.size();
  auto report = [&](std::size_t i, const std::string& what) {
    issues.push_back("index " + std::to_string(i) + ": " + what);
  };

  if (group.compressed.size() != g)
    issues.push_back("compressed count " + std::to_string(group.compressed.size()) + " != trace count " +
                     std::to_string(g));

  std::vector<int> seen(g, 0);
  std::vector<int> in_correct(g, 0);
  for (const auto* set : {&group.correct_idx, &group.wrong_idx}) {
    const bool is_c = set == &group.correct_idx;
    for (const auto i : *set) {
      if (i >= g) {
        report(i, "out of range");
        continue;
      }
      ++seen[i];
      if (is_c) in_correct[i] = 1;
    }
  }
  for (std::size_t i = 0; i < g; ++i) {
    const Trace& tr = group.traces[i];
    if (seen[i] != 1 || (in_correct[i] == 1) != tr.correct) report(i, "partition mismatch");

    if (tr.format_ok) {
      const bool starts = !tr.answer_part.empty() && tr.answer_part[0] == markers.close;
      const auto& th = tr.thinking.tokens();
      if (!starts || std::find(th.begin(), th.end(), markers.close) != th.end()) report(i, "marker structure");
    }

    if (i >= group.compressed.size()) continue;
    const CompressedTrace& c = group.compressed[i];
    if (!c.valid_thinking.is_prefix_of(tr.thinking)) report(i, "not a prefix");
    if (c.cut_index != c.valid_thinking.length() || c.cut_index > tr.thinking.length())
      report(i, "cut_index mismatch");
    if (!c.answer_found_in_thinking && c.cut_index != tr.thinking.length()) report(i, "uncut trace shortened");
    if (!(c.answer_part == tr.answer_part)) report(i, "answer part changed");
  }
  return issues;
}

}  // namespace lcr
