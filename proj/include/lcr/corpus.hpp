#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcr/metrics.hpp"
#include "lcr/trace.hpp"

namespace lcr {

/// Bad input data (malformed corpus, mismatched reports). Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusRecord {
  std::string query_id;
  std::string benchmark;
  std::string prompt;
  std::string ground_truth;
  std::string output_text;
  std::size_t sample_index = 0;
  std::optional<std::vector<std::int64_t>> token_ids;
  std::optional<std::vector<double>> logprobs;
  std::size_t line = 0;

  bool operator==(const CorpusRecord& o) const {
    return query_id == o.query_id && benchmark == o.benchmark && prompt == o.prompt &&
           ground_truth == o.ground_truth && output_text == o.output_text && sample_index == o.sample_index &&
           token_ids == o.token_ids && logprobs == o.logprobs;
  }
};

struct CorpusOptions {
  TokenizationMode mode = TokenizationMode::Whitespace;
};

/// JSON-lines corpus, one object per non-blank line. Required string fields:
/// query_id, benchmark, prompt, ground_truth, output_text. Optional:
/// sample_index (defaults to the running count per query_id), token_ids,
/// logprobs (aligned with token_ids). Unknown fields are rejected. Errors are
/// DataError with a "line N: ..." message.
std::vector<CorpusRecord> load_corpus(const std::string& path, const CorpusOptions& options = {});
std::vector<CorpusRecord> parse_corpus(std::istream& in, const CorpusOptions& options = {});

/// One JSON line (no trailing newline), fixed key order.
std::string record_to_json(const CorpusRecord& record);

/// Trace for a record: pre-tokenized records split on the id-rendered markers.
Trace record_to_trace(const CorpusRecord& record, const TraceOptions& options);

/// Records grouped by query_id in first-appearance order, traces in input order.
std::vector<Group> corpus_groups(const std::vector<CorpusRecord>& records, const TraceOptions& options);

std::vector<VtItem> corpus_items(const std::vector<CorpusRecord>& records, const TraceOptions& options);

enum class ReportFormat { Json, Csv };
ReportFormat parse_report_format(const std::string& name);

struct ReportRow {
  std::string benchmark;
  double accuracy = 0.0;
  double mean_length = 0.0;
  std::optional<double> vt;
  std::optional<double> delta_acc;
  std::optional<double> delta_len;
};

struct Report {
  std::vector<ReportRow> rows;
  std::optional<double> avg_acc;
  std::optional<double> avg_len;
  std::optional<double> mean_vt;
};

inline constexpr const char* kCsvHeader = "benchmark,accuracy,mean_length,vt,delta_acc,delta_len";

/// Six significant digits, printf %.6g.
std::string format_number(double v);

void write_report(const Report& report, std::ostream& out, ReportFormat format);
/// Throws std::runtime_error when the path cannot be written.
void write_report(const Report& report, const std::string& path, ReportFormat format);

/// Flat key=value file; '#' starts a comment, blank lines are ignored.
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace lcr
