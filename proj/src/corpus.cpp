#include "lcr/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "lcr/extractor.hpp"

namespace lcr {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string> kKnownFields = {"query_id", "benchmark",  "prompt",   "ground_truth",
                                            "output_text", "sample_index", "token_ids", "logprobs"};

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

std::string required_string(const json& j, const char* field, std::size_t line) {
  const auto it = j.find(field);
  if (it == j.end()) fail(line, std::string("missing field ") + field);
  if (!it->is_string()) fail(line, std::string("field ") + field + " must be a string");
  return it->get<std::string>();
}

}  // namespace

std::vector<CorpusRecord> parse_corpus(std::istream& in, const CorpusOptions& options) {
  std::vector<CorpusRecord> out;
  std::map<std::string, std::size_t> next_index;
  std::set<std::pair<std::string, std::size_t>> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail(line, "record must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (!kKnownFields.count(key)) fail(line, "unknown field " + key);
    }

    CorpusRecord r;
    r.line = line;
    r.query_id = required_string(j, "query_id", line);
    r.benchmark = required_string(j, "benchmark", line);
    r.prompt = required_string(j, "prompt", line);
    r.ground_truth = required_string(j, "ground_truth", line);
    r.output_text = required_string(j, "output_text", line);
    if (r.query_id.empty()) fail(line, "field query_id must be non-empty");
    if (r.prompt.empty()) fail(line, "field prompt must be non-empty");

    if (const auto it = j.find("sample_index"); it != j.end()) {
      if (!it->is_number_unsigned()) fail(line, "field sample_index must be a non-negative integer");
      r.sample_index = it->get<std::size_t>();
    } else {
      r.sample_index = next_index[r.query_id];
    }
    next_index[r.query_id] = std::max(next_index[r.query_id], r.sample_index + 1);
    if (!seen.emplace(r.query_id, r.sample_index).second)
      fail(line, "duplicate query_id " + r.query_id + " sample_index " + std::to_string(r.sample_index));

    if (const auto it = j.find("token_ids"); it != j.end()) {
      if (!it->is_array()) fail(line, "field token_ids must be an integer array");
      std::vector<std::int64_t> ids;
      for (const auto& v : *it) {
        if (!v.is_number_integer()) fail(line, "field token_ids must be an integer array");
        ids.push_back(v.get<std::int64_t>());
      }
      r.token_ids = std::move(ids);
    }
    if (const auto it = j.find("logprobs"); it != j.end()) {
      if (!it->is_array()) fail(line, "field logprobs must be a number array");
      std::vector<double> lps;
      for (const auto& v : *it) {
        if (!v.is_number()) fail(line, "field logprobs must be a number array");
        lps.push_back(v.get<double>());
      }
      if (!r.token_ids) fail(line, "field logprobs requires token_ids");
      if (lps.size() != r.token_ids->size()) fail(line, "field logprobs does not align with token_ids");
      r.logprobs = std::move(lps);
    }

    if (r.token_ids && options.mode != TokenizationMode::PreTokenizedIds)
      fail(line, "configuration conflict: token_ids present but tokenization mode is whitespace");
    if (!r.token_ids && options.mode == TokenizationMode::PreTokenizedIds)
      fail(line, "configuration conflict: pre-tokenized mode requires token_ids");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CorpusRecord> load_corpus(const std::string& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus: " + path);
  return parse_corpus(in, options);
}

std::string record_to_json(const CorpusRecord& r) {
  ordered_json j;
  j["query_id"] = r.query_id;
  j["benchmark"] = r.benchmark;
  j["prompt"] = r.prompt;
  j["ground_truth"] = r.ground_truth;
  j["output_text"] = r.output_text;
  j["sample_index"] = r.sample_index;
  if (r.token_ids) j["token_ids"] = *r.token_ids;
  if (r.logprobs) j["logprobs"] = *r.logprobs;
  return j.dump();
}

Trace record_to_trace(const CorpusRecord& record, const TraceOptions& options) {
  const AnswerKey key = make_answer_key(record.ground_truth);
  if (record.token_ids) {
    return make_trace_from_tokens(record.query_id, record.output_text, tokenize_ids(*record.token_ids), key, options);
  }
  return make_trace(record.query_id, record.output_text, key, options);
}

std::vector<Group> corpus_groups(const std::vector<CorpusRecord>& records, const TraceOptions& options) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const CorpusRecord*>> by_query;
  for (const auto& r : records) {
    auto& list = by_query[r.query_id];
    if (list.empty()) order.push_back(r.query_id);
    list.push_back(&r);
  }
  std::vector<Group> out;
  for (const auto& id : order) {
    const auto& list = by_query[id];
    Query q{id, list.front()->prompt, make_answer_key(list.front()->ground_truth)};
    std::vector<Trace> traces;
    for (const auto* r : list) {
      if (r->ground_truth != list.front()->ground_truth)
        throw DataError("line " + std::to_string(r->line) + ": ground_truth differs within query " + id);
      traces.push_back(record_to_trace(*r, options));
    }
    out.push_back(build_group(std::move(q), std::move(traces), options.match));
  }
  return out;
}

std::vector<VtItem> corpus_items(const std::vector<CorpusRecord>& records, const TraceOptions& options) {
  std::vector<VtItem> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(VtItem{r.benchmark, record_to_trace(r, options), make_answer_key(r.ground_truth)});
  return out;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw std::invalid_argument("unknown report format: " + name);
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

namespace {

ordered_json json_number(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return std::stod(format_number(*v));
}

std::string csv_cell(std::optional<double> v) { return v ? format_number(*v) : ""; }

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_report(const Report& report, std::ostream& out, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    out << kCsvHeader << '\n';
    for (const auto& r : report.rows) {
      out << csv_text(r.benchmark) << ',' << format_number(r.accuracy) << ',' << format_number(r.mean_length) << ','
          << csv_cell(r.vt) << ',' << csv_cell(r.delta_acc) << ',' << csv_cell(r.delta_len) << '\n';
    }
    return;
  }
  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json row;
    row["benchmark"] = r.benchmark;
    row["accuracy"] = json_number(r.accuracy);
    row["mean_length"] = json_number(r.mean_length);
    row["vt"] = json_number(r.vt);
    row["delta_acc"] = json_number(r.delta_acc);
    row["delta_len"] = json_number(r.delta_len);
    j["rows"].push_back(std::move(row));
  }
  ordered_json summary;
  summary["avg_acc"] = json_number(report.avg_acc);
  summary["avg_len"] = json_number(report.avg_len);
  summary["mean_vt"] = json_number(report.mean_vt);
  j["summary"] = std::move(summary);
  out << j.dump(2) << '\n';
}

void write_report(const Report& report, const std::string& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  write_report(report, out, format);
  out.flush();
  if (!out) throw std::runtime_error("failed writing report: " + path);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(n) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace lcr
