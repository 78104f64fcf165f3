// lcr: trace compression, valid-thinking metrics, rewards and the toy trainer.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lcr/corpus.hpp"
#include "lcr/extractor.hpp"
#include "lcr/metrics.hpp"
#include "lcr/rewards.hpp"
#include "lcr/toy.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Invalid flag values or configuration (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string mode = "whitespace";
  std::string open_marker = "<think>";
  std::string close_marker = "</think>";
  bool strict = false;

  lcr::TraceOptions trace_options() const {
    lcr::TraceOptions o;
    try {
      o.tokenizer.mode = lcr::parse_tokenization_mode(mode);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    if (open_marker.empty() || close_marker.empty() || open_marker == close_marker)
      throw UsageError("markers must be non-empty and distinct");
    o.tokenizer.markers = {open_marker, close_marker};
    o.markers = {open_marker, close_marker};
    o.match.strict_surface = strict;
    return o;
  }

  lcr::CorpusOptions corpus_options() const { return {trace_options().tokenizer.mode}; }
};

void add_common(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--mode", c.mode, "Tokenization mode: whitespace or ids")->capture_default_str();
  cmd->add_option("--open-marker", c.open_marker, "Start-of-thinking marker (an id in ids mode)")->capture_default_str();
  cmd->add_option("--close-marker", c.close_marker, "End-of-thinking marker (an id in ids mode)")->capture_default_str();
  cmd->add_flag("--strict", c.strict, "Never match decimals against fractions");
}

// Writes to the file when a path is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw lcr::DataError("cannot write output: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw lcr::DataError("failed writing output");
  }

 private:
  std::ofstream file_;
};

lcr::ReportFormat report_format(const std::string& name) {
  try {
    return lcr::parse_report_format(name);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------

int run_extract(const CommonOptions& common, const std::string& corpus, const std::string& out_path) {
  const auto opts = common.trace_options();
  const auto records = lcr::load_corpus(corpus, common.corpus_options());
  Output out(out_path);
  std::size_t empty = 0;
  for (const auto& r : records) {
    const lcr::Trace trace = lcr::record_to_trace(r, opts);
    const lcr::AnswerKey key = lcr::make_answer_key(r.ground_truth);
    const lcr::CompressedTrace c = lcr::compress(trace, key, opts.match);
    ordered_json j;
    j["query_id"] = r.query_id;
    j["sample_index"] = r.sample_index;
    j["benchmark"] = r.benchmark;
    j["format_ok"] = trace.format_ok;
    j["correct"] = trace.correct;
    j["answer_found"] = c.answer_found_in_thinking;
    j["cut_index"] = c.cut_index;
    j["thinking_length"] = trace.thinking.length();
    j["output_length"] = trace.output_length();
    j["compressed_length"] = c.output_length();
    if (const auto vt = lcr::vt_rate(trace, c)) {
      j["vt"] = vt->vt;
    } else {
      j["vt"] = nullptr;
      ++empty;
    }
    j["compressed"] = c.tokens().joined();
    out.stream() << j.dump() << '\n';
  }
  out.finish();
  if (empty) std::cerr << "lcr extract: " << empty << " record(s) with empty thinking have no VT\n";
  return 0;
}

int run_vt(const CommonOptions& common, const std::string& corpus, const std::string& eligibility,
           bool token_weighted, bool correct_only_length, const std::string& format, const std::string& out_path) {
  const auto opts = common.trace_options();
  const auto fmt = report_format(format);
  lcr::VtOptions vt_opts;
  if (eligibility == "found") vt_opts.eligibility = lcr::VtEligibility::AnswerFound;
  else if (eligibility == "all") vt_opts.eligibility = lcr::VtEligibility::AllNonEmpty;
  else throw UsageError("--eligibility must be found or all");
  vt_opts.token_weighted = token_weighted;
  vt_opts.match = opts.match;

  const auto records = lcr::load_corpus(corpus, common.corpus_options());
  if (records.empty()) throw lcr::DataError("corpus is empty: " + corpus);
  const auto items = lcr::corpus_items(records, opts);
  const auto vt = lcr::corpus_vt(items, vt_opts);
  lcr::Report report;
  for (const auto& b : lcr::bench_reports(items, correct_only_length)) {
    lcr::ReportRow row{b.benchmark, b.accuracy, b.mean_length, vt.per_benchmark.at(b.benchmark), {}, {}};
    report.rows.push_back(std::move(row));
  }
  report.mean_vt = vt.mean;
  if (!vt.mean) std::cerr << "lcr vt: no eligible traces, VT is empty\n";
  if (vt.empty_thinking) std::cerr << "lcr vt: " << vt.empty_thinking << " trace(s) with empty thinking excluded\n";
  Output out(out_path);
  lcr::write_report(report, out.stream(), fmt);
  out.finish();
  return 0;
}

int run_rewards(const CommonOptions& common, const std::string& corpus, double alpha, double gamma,
                const std::string& out_path) {
  const auto opts = common.trace_options();
  if (!(alpha >= 0.0) || !(gamma >= 0.0)) throw UsageError("--alpha and --gamma must be non-negative");
  const auto records = lcr::load_corpus(corpus, common.corpus_options());
  const auto groups = lcr::corpus_groups(records, opts);
  Output out(out_path);
  for (const auto& g : groups) {
    const auto bundle = lcr::compute_rewards(g, lcr::RewardConfig{alpha, gamma}, opts.match);
    const auto adv = lcr::assemble_advantages(g, bundle, gamma, opts.markers.close);
    for (const auto& w : bundle.warnings) std::cerr << "lcr rewards: " << g.query.id << ": " << w << '\n';
    ordered_json j;
    j["query_id"] = g.query.id;
    j["correct_idx"] = g.correct_idx;
    j["wrong_idx"] = g.wrong_idx;
    j["r_format"] = bundle.r_format;
    j["r_accuracy"] = bundle.r_accuracy;
    j["r_base"] = bundle.r_base;
    j["r_length"] = bundle.r_length;
    j["r_tilde"] = bundle.r_tilde;
    j["r_combine"] = bundle.r_combine;
    j["r_compress"] = bundle.r_compress;
    ordered_json bonus = ordered_json::array();
    for (const auto p : adv.bonus_position) {
      if (p == std::string::npos) bonus.push_back(nullptr);
      else bonus.push_back(p);
    }
    j["bonus_position"] = std::move(bonus);
    j["gamma"] = adv.gamma;
    j["advantages"] = adv.rows;
    out.stream() << j.dump() << '\n';
  }
  out.finish();
  return 0;
}

struct TrainFlags {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::vector<std::string> settings;
  std::optional<std::size_t> steps;
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::optional<double> beta;
  std::string out_path;
  std::string config_out;
};

lcr::toy::TrainConfig build_train_config(const TrainFlags& f) {
  lcr::toy::TrainConfig config;
  std::string path = f.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("LCR_CONFIG"); env && *env) path = env;
  }
  try {
    if (!path.empty()) {
      for (const auto& [k, v] : lcr::read_config_file(path)) lcr::toy::apply_setting(config, k, v);
    }
    for (const auto& s : f.settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + s);
      lcr::toy::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    config.seed = *f.seed;
    if (f.steps) config.steps = *f.steps;
    if (f.alpha) config.alpha = *f.alpha;
    if (f.gamma) config.gamma = *f.gamma;
    if (f.beta) config.beta = *f.beta;
    config.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return config;
}

int run_train(const TrainFlags& f) {
  const auto config = build_train_config(f);
  const std::string effective = lcr::toy::describe(config);
  std::cerr << "# effective config\n" << effective;
  if (!f.config_out.empty()) {
    std::ofstream cfg(f.config_out, std::ios::binary | std::ios::trunc);
    if (!cfg || !(cfg << effective)) throw lcr::DataError("cannot write config: " + f.config_out);
  }
  const auto result = lcr::toy::train(config);
  Output out(f.out_path);
  out.stream() << lcr::toy::history_to_jsonl(result.history);
  out.finish();
  const auto& first = result.history.front();
  const auto& last = result.history.back();
  std::cerr << "vt " << lcr::format_number(first.mean_vt) << " -> " << lcr::format_number(last.mean_vt) << ", length "
            << lcr::format_number(first.mean_length) << " -> " << lcr::format_number(last.mean_length)
            << ", accuracy " << lcr::format_number(first.mean_accuracy) << " -> "
            << lcr::format_number(last.mean_accuracy) << '\n';
  return 0;
}

int run_report(const CommonOptions& common, const std::string& model_path, const std::string& base_path,
               bool correct_only_length, const std::string& format, const std::string& out_path) {
  const auto opts = common.trace_options();
  const auto fmt = report_format(format);
  const auto model_items = lcr::corpus_items(lcr::load_corpus(model_path, common.corpus_options()), opts);
  const auto base_items = lcr::corpus_items(lcr::load_corpus(base_path, common.corpus_options()), opts);
  const auto model = lcr::bench_reports(model_items, correct_only_length);
  const auto base = lcr::bench_reports(base_items, correct_only_length);
  lcr::DeltaReport deltas;
  try {
    deltas = lcr::avg_deltas(model, base);
  } catch (const std::invalid_argument& e) {
    throw lcr::DataError(e.what());
  }
  lcr::VtOptions vt_opts;
  vt_opts.match = opts.match;
  const auto vt = lcr::corpus_vt(model_items, vt_opts);
  lcr::Report report;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& m = model[i];
    const auto& d = deltas.per_benchmark[i];
    report.rows.push_back(lcr::ReportRow{m.benchmark, m.accuracy, m.mean_length, vt.per_benchmark.at(m.benchmark),
                                         d.delta_acc, d.delta_len});
  }
  report.avg_acc = deltas.avg_acc;
  report.avg_len = deltas.avg_len;
  report.mean_vt = vt.mean;
  Output out(out_path);
  lcr::write_report(report, out.stream(), fmt);
  out.finish();
  return 0;
}

struct PassCurve {
  std::string name;
  std::size_t n = 0;
  std::vector<double> values;  // index k-1
};

int run_passk(const CommonOptions& common, std::optional<std::size_t> n, std::optional<std::size_t> c,
              const std::string& corpus, const std::string& format, const std::string& out_path) {
  const auto fmt = report_format(format);
  Output out(out_path);
  if (corpus.empty()) {
    if (!n || !c) throw UsageError("passk needs --n and --c, or --corpus");
    if (*c > *n || *n == 0) throw UsageError("passk requires 0 <= c <= n and n >= 1");
    if (fmt == lcr::ReportFormat::Csv) {
      out.stream() << "k,pass_at_k,exact\n";
      for (std::size_t k = 1; k <= *n; ++k)
        out.stream() << k << ',' << lcr::format_number(lcr::pass_at_k(*n, *c, k)) << ','
                     << lcr::pass_at_k_exact(*n, *c, k).str() << '\n';
    } else {
      ordered_json j;
      j["n"] = *n;
      j["c"] = *c;
      j["curve"] = ordered_json::array();
      for (std::size_t k = 1; k <= *n; ++k) {
        ordered_json row;
        row["k"] = k;
        row["pass_at_k"] = std::stod(lcr::format_number(lcr::pass_at_k(*n, *c, k)));
        row["exact"] = lcr::pass_at_k_exact(*n, *c, k).str();
        j["curve"].push_back(std::move(row));
      }
      out.stream() << j.dump(2) << '\n';
    }
    out.finish();
    return 0;
  }

  // Per benchmark: mean over queries of pass@k from each query's (n, c).
  const auto opts = common.trace_options();
  const auto records = lcr::load_corpus(corpus, common.corpus_options());
  std::map<std::string, std::map<std::string, std::pair<std::size_t, std::size_t>>> counts;
  for (const auto& r : records) {
    auto& nc = counts[r.benchmark][r.query_id];
    ++nc.first;
    if (lcr::record_to_trace(r, opts).correct) ++nc.second;
  }
  std::vector<PassCurve> curves;
  for (const auto& [bench, queries] : counts) {
    std::size_t kmax = SIZE_MAX;
    for (const auto& [q, nc] : queries) kmax = std::min(kmax, nc.first);
    PassCurve curve{bench, kmax, {}};
    for (std::size_t k = 1; k <= kmax; ++k) {
      double sum = 0.0;
      for (const auto& [q, nc] : queries) sum += lcr::pass_at_k(nc.first, nc.second, k);
      curve.values.push_back(sum / static_cast<double>(queries.size()));
    }
    curves.push_back(std::move(curve));
  }
  if (fmt == lcr::ReportFormat::Csv) {
    out.stream() << "benchmark,k,pass_at_k\n";
    for (const auto& cv : curves)
      for (std::size_t k = 1; k <= cv.values.size(); ++k)
        out.stream() << cv.name << ',' << k << ',' << lcr::format_number(cv.values[k - 1]) << '\n';
  } else {
    ordered_json j = ordered_json::array();
    for (const auto& cv : curves) {
      ordered_json b;
      b["benchmark"] = cv.name;
      b["curve"] = ordered_json::array();
      for (std::size_t k = 1; k <= cv.values.size(); ++k) {
        ordered_json row;
        row["k"] = k;
        row["pass_at_k"] = std::stod(lcr::format_number(cv.values[k - 1]));
        b["curve"].push_back(std::move(row));
      }
      j.push_back(std::move(b));
    }
    out.stream() << j.dump(2) << '\n';
  }
  out.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Length-compression rewards for reasoning traces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lcr 0.1.0");

  CommonOptions common;
  std::string corpus;
  std::string out_path;
  std::string format = "json";

  auto* extract = app.add_subcommand("extract", "Compressed traces and cut indices, one JSON line per record");
  add_common(extract, common);
  extract->add_option("corpus", corpus, "JSON-lines corpus")->required();
  extract->add_option("-o,--out", out_path, "Output file (default stdout)");

  std::string eligibility = "found";
  bool token_weighted = false;
  bool correct_only = false;
  auto* vt = app.add_subcommand("vt", "Valid-thinking rates per benchmark");
  add_common(vt, common);
  vt->add_option("corpus", corpus, "JSON-lines corpus")->required();
  vt->add_option("--eligibility", eligibility, "found: answer present in thinking; all: every non-empty thinking")
      ->capture_default_str();
  vt->add_flag("--token-weighted", token_weighted, "Sum of valid tokens over sum of thinking tokens");
  vt->add_flag("--correct-only-length", correct_only, "Mean length over correct samples only");
  vt->add_option("--format", format, "json or csv")->capture_default_str();
  vt->add_option("-o,--out", out_path, "Output file (default stdout)");

  double alpha = 1.0;
  double gamma = 1.0;
  auto* rewards = app.add_subcommand("rewards", "Per-group rewards and token advantages");
  add_common(rewards, common);
  rewards->add_option("corpus", corpus, "JSON-lines corpus")->required();
  rewards->add_option("--alpha", alpha, "Length reward weight")->capture_default_str();
  rewards->add_option("--gamma", gamma, "Compress reward weight")->capture_default_str();
  rewards->add_option("-o,--out", out_path, "Output file (default stdout)");

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train-toy", "Train the redundancy-chain toy policy; JSON-lines history");
  train_cmd->add_option("--seed", train.seed, "Random seed")->required();
  train_cmd->add_option("-c,--config", train.config_path, "key=value config file (default $LCR_CONFIG)");
  train_cmd->add_option("--set", train.settings, "Override one setting, key=value");
  train_cmd->add_option("--steps", train.steps, "Training steps");
  train_cmd->add_option("--alpha", train.alpha, "Length reward weight");
  train_cmd->add_option("--gamma", train.gamma, "Compress reward weight");
  train_cmd->add_option("--beta", train.beta, "KL weight");
  train_cmd->add_option("-o,--out", train.out_path, "History output file (default stdout)");
  train_cmd->add_option("--config-out", train.config_out, "Write the effective configuration here");

  std::string model_path;
  std::string base_path;
  auto* report = app.add_subcommand("report", "Accuracy and length deltas of a model run against a base run");
  add_common(report, common);
  report->add_option("--model", model_path, "Model corpus")->required();
  report->add_option("--base", base_path, "Base corpus")->required();
  report->add_flag("--correct-only-length", correct_only, "Mean length over correct samples only");
  report->add_option("--format", format, "json or csv")->capture_default_str();
  report->add_option("-o,--out", out_path, "Output file (default stdout)");

  std::optional<std::size_t> pn;
  std::optional<std::size_t> pc;
  auto* passk = app.add_subcommand("passk", "pass@k curve from correctness counts or a corpus");
  add_common(passk, common);
  passk->add_option("--n", pn, "Samples per query");
  passk->add_option("--c", pc, "Correct samples");
  passk->add_option("--corpus", corpus, "JSON-lines corpus (per-query counts)");
  passk->add_option("--format", format, "json or csv")->capture_default_str();
  passk->add_option("-o,--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (extract->parsed()) return run_extract(common, corpus, out_path);
    if (vt->parsed()) return run_vt(common, corpus, eligibility, token_weighted, correct_only, format, out_path);
    if (rewards->parsed()) return run_rewards(common, corpus, alpha, gamma, out_path);
    if (train_cmd->parsed()) return run_train(train);
    if (report->parsed()) return run_report(common, model_path, base_path, correct_only, format, out_path);
    if (passk->parsed()) return run_passk(common, pn, pc, corpus, format, out_path);
  } catch (const UsageError& e) {
    std::cerr << "lcr: " << e.what() << '\n';
    return kExitUsage;
  } catch (const lcr::DataError& e) {
    std::cerr << "lcr: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "lcr: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
