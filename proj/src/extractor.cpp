#include "lcr/extractor.hpp"

namespace lcr {

const TokenSeq& project_thinking(const Trace& o) { return o.thinking; }

CompressedTrace compress(const Trace& o, const AnswerKey& key, const MatchOptions& options) {
  CompressedTrace out;
  out.query_id = o.query_id;
  out.answer_part = o.answer_part;
  out.source_thinking_length = o.thinking.length();
  const auto span = detect_first_answer(o.thinking, key, options);
  out.answer_found_in_thinking = span.has_value();
  out.cut_index = span ? span->end_token : o.thinking.length();
  out.valid_thinking = o.thinking.prefix(out.cut_index);
  return out;
}

std::optional<VTStat> vt_rate(const Trace& o, const CompressedTrace& compressed) {
  if (o.thinking.empty()) return std::nullopt;
  VTStat stat;
  stat.valid_tokens = compressed.cut_index;
  stat.total_tokens = o.thinking.length();
  stat.vt = static_cast<double>(stat.valid_tokens) / static_cast<double>(stat.total_tokens);
  return stat;
}

std::optional<VTStat> vt_rate(const Trace& o, const AnswerKey& key, const MatchOptions& options) {
  if (o.thinking.empty()) return std::nullopt;
  return vt_rate(o, compress(o, key, options));
}

Group build_group(Query query, std::vector<Trace> traces, const MatchOptions& options) {
  Group group;
  group.compressed.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    group.compressed.push_back(compress(traces[i], query.ground_truth, options));
    (traces[i].correct ? group.correct_idx : group.wrong_idx).push_back(i);
  }
  group.query = std::move(query);
  group.traces = std::move(traces);
  return group;
}

}  // namespace lcr
