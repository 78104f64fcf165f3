#pragma once

#include <optional>
#include <vector>

#include "lcr/answer.hpp"
#include "lcr/trace.hpp"

namespace lcr {

struct VTStat {
  std::size_t valid_tokens = 0;
  std::size_t total_tokens = 0;
  double vt = 1.0;
};

/// t(o): the thinking region R.
const TokenSeq& project_thinking(const Trace& o);

/// f(o): keeps R up to and including the last token of the first span that
/// matches the key, or all of R when no span matches.
CompressedTrace compress(const Trace& o, const AnswerKey& key, const MatchOptions& options = {});

/// Valid-thinking rate |R'| / |R|. Empty thinking has no rate (nullopt).
std::optional<VTStat> vt_rate(const Trace& o, const AnswerKey& key, const MatchOptions& options = {});
std::optional<VTStat> vt_rate(const Trace& o, const CompressedTrace& compressed);

/// Compresses every trace and partitions indices into correct / wrong sets.
Group build_group(Query query, std::vector<Trace> traces, const MatchOptions& options = {});

}  // namespace lcr
