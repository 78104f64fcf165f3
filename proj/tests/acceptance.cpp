// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "lcr/extractor.hpp"
#include "lcr/grpo.hpp"
#include "lcr/metrics.hpp"
#include "lcr/rewards.hpp"
#include "lcr/toy.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace lcr;

namespace {

int failures = 0;

void verdict(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << detail << ")" << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Trace planted_trace(const std::vector<std::string>& thinking, const AnswerKey& key, const std::string& final_answer) {
  std::vector<std::string> toks = {"<think>"};
  toks.insert(toks.end(), thinking.begin(), thinking.end());
  toks.push_back("</think>");
  toks.push_back("\\boxed{" + final_answer + "}");
  const TokenSeq seq(toks);
  return make_trace_from_tokens("q", seq.joined(), seq, key);
}

void extractor_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1000);
  int agree = 0;
  int found = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto p = synth::make_planted(rng, std::uniform_int_distribution<std::size_t>(1, 200)(rng));
    const AnswerKey key = make_answer_key(p.key);
    const Trace t = planted_trace(p.tokens, key, p.key);
    const auto expect = oracle::first_span(p.tokens, p.accepted);
    const std::size_t cut = expect ? expect->end : p.tokens.size();
    const auto c = compress(t, key);
    const auto vt = vt_rate(t, key);
    const bool ok = c.cut_index == cut && c.answer_found_in_thinking == expect.has_value() &&
                    c.valid_thinking.length() == cut && vt &&
                    vt->vt == static_cast<double>(cut) / static_cast<double>(p.tokens.size());
    agree += ok;
    found += expect.has_value();
  }
  const double secs = seconds_since(t0);
  verdict("extractor oracle equivalence", agree == n && secs < 10.0,
          std::to_string(agree) + "/" + std::to_string(n) + " traces agree, " + std::to_string(found) +
              " with a planted span, " + fmt(secs, 3) + " s");
}

Group lengths_group(const std::vector<std::size_t>& lengths, const std::vector<bool>& correct) {
  Group g;
  g.query = Query{"q", "p", make_answer_key("1")};
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Trace t;
    t.thinking = TokenSeq(std::vector<std::string>(lengths[i] - 1, "t"));
    t.answer_part = TokenSeq({"</think>"});
    t.format_ok = true;
    t.correct = correct[i];
    CompressedTrace c;
    c.valid_thinking = t.thinking;
    c.answer_part = t.answer_part;
    c.cut_index = t.thinking.length();
    (correct[i] ? g.correct_idx : g.wrong_idx).push_back(i);
    g.traces.push_back(t);
    g.compressed.push_back(c);
  }
  return g;
}

void reward_fixtures() {
  double worst = 0.0;
  auto near = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  const auto lr = length_rewards(lengths_group({100, 200, 400, 70}, {true, true, true, false}));
  near(lr[0], 0.75);
  near(lr[1], 0.5);
  near(lr[2], 0.0);
  near(lr[3], 0.0);
  near(length_rewards(lengths_group({50}, {true}))[0], 0.0);
  for (double v : length_rewards(lengths_group({5, 9}, {false, false}))) near(v, 0.0);

  const std::vector<int> base = {2, 1, 0};
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  const auto comb = combine_rewards(base, zero, 1.0).second;
  near(comb[0], 1.0);
  near(comb[1], 0.0);
  near(comb[2], -1.0);
  const std::vector<int> b2 = {2, 2, 2, 0};
  const auto c2 = combine_rewards(b2, lr, 1.0);
  near(c2.first[0], 2.75);
  near(c2.second[0], 2.75 - (2.75 + 2.5 + 2.0 + 0.0) / 4.0);

  const AnswerKey key = make_answer_key("42");
  std::vector<std::string> th(100, "t");
  th[59] = "42";
  const Trace correct = planted_trace(th, key, "42");
  near(compress_reward(correct, compress(correct, key), key), 0.4);
  const Trace never = planted_trace(std::vector<std::string>(30, "t"), key, "42");
  near(compress_reward(never, compress(never, key), key), -1.0);
  const Trace wrong = planted_trace(th, key, "41");
  near(compress_reward(wrong, compress(wrong, key), key), 0.0);

  verdict("reward formula oracles", worst <= 1e-12, "max abs error " + fmt(worst));
}

void centering() {
  std::mt19937_64 rng(2000);
  std::uniform_int_distribution<int> gsize(1, 16);
  std::uniform_int_distribution<int> rb(0, 2);
  std::uniform_real_distribution<double> rl(0.0, 1.0);
  std::uniform_real_distribution<double> alpha(0.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int g = gsize(rng);
    std::vector<int> base(g);
    std::vector<double> len(g);
    for (int k = 0; k < g; ++k) {
      base[k] = rb(rng);
      len[k] = base[k] == 2 ? rl(rng) : 0.0;
    }
    const auto c = combine_rewards(base, len, alpha(rng)).second;
    worst = std::max(worst, std::abs(std::accumulate(c.begin(), c.end(), 0.0)));
  }
  verdict("centering identity", worst <= 1e-9, "10000 groups, max |sum r_combine| " + fmt(worst));
}

// Perturbed copy of a toy policy.
toy::ToyPolicy jitter(const toy::ToyPolicy& p, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  auto logits = p.logits();
  for (auto& v : logits) v += nd(rng);
  return toy::ToyPolicy(p.shape(), logits, p.temperature());
}

void gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t clipped_total = 0;
  int seeds_with_clipping = 0;
  std::size_t params = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    toy::TrainConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 4;
    cfg.group_size = 4;
    cfg.shape.allow_premature = seed % 2 == 1;
    cfg.kl_mode = seed % 4 == 3 ? KlMode::Sequence : KlMode::PerToken;
    std::mt19937_64 rng(seed);
    const toy::ToyPolicy ref = jitter(cfg.initial_policy(), rng, 0.5);
    const toy::ToyPolicy old = jitter(ref, rng, 0.5);
    const toy::ToyPolicy cur = jitter(old, rng, 0.6);
    params = cur.parameter_count();
    const auto batch = toy::collect_batch(old, cfg, 0);
    const ObjectiveConfig oc{cfg.epsilon, cfg.beta, cfg.kl_mode};
    const auto report = objective(batch.sequences, cur, old, ref, oc);
    std::size_t clipped = 0;
    for (const auto& t : report.per_token_terms) clipped += t.clipped;
    clipped_total += clipped;
    seeds_with_clipping += clipped > 0;
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& x) {
          return objective(batch.sequences, toy::ToyPolicy(cur.shape(), x, cur.temperature()), old, ref, oc).value;
        },
        cur.logits(), 1e-5);
    worst = std::max(worst, oracle::max_relative_error(report.gradient, fd));
  }
  const double secs = seconds_since(t0);
  verdict("gradient check", worst <= 1e-4 && seeds_with_clipping == 20 && params <= 64 && secs < 60.0,
          "20 seeds, " + std::to_string(params) + " params, beta 0.04, " + std::to_string(clipped_total) +
              " clipped tokens, max rel error " + fmt(worst) + ", " + fmt(secs, 3) + " s");
}

void kl_properties() {
  double min_kl = INFINITY;
  double worst_same = 0.0;
  std::size_t tokens = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    toy::TrainConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 4;
    std::mt19937_64 rng(seed + 100);
    const toy::ToyPolicy a = jitter(cfg.initial_policy(), rng, 2.0);
    const toy::ToyPolicy b = jitter(a, rng, 2.0);
    const auto batch = toy::collect_batch(a, cfg, 0);
    const auto diff = objective(batch.sequences, a, a, b, ObjectiveConfig{0.2, 0.04});
    for (const auto& t : diff.per_token_terms) min_kl = std::min(min_kl, t.kl);
    tokens += diff.per_token_terms.size();
    const auto same = objective(batch.sequences, a, a, a, ObjectiveConfig{0.2, 0.04});
    for (const auto& t : same.per_token_terms) worst_same = std::max(worst_same, std::abs(t.kl));
    for (const auto& g : batch.sequences)
      for (const auto& s : g) worst_same = std::max(worst_same, std::abs(kl_term(a, a, s.query, s.tokens)));
  }
  for (double lr = -30.0; lr <= 30.0; lr += 0.01) min_kl = std::min(min_kl, std::expm1(lr) - lr);
  verdict("KL properties", min_kl >= 0.0 && worst_same <= 1e-12,
          std::to_string(tokens) + " tokens, min KL " + fmt(min_kl) + ", max |KL| at pi_theta = pi_ref " +
              fmt(worst_same));
}

void dapo_invariance() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    toy::TrainConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 4;
    std::mt19937_64 rng(seed + 200);
    const toy::ToyPolicy ref = cfg.initial_policy();
    const toy::ToyPolicy old = jitter(ref, rng, 0.3);
    const toy::ToyPolicy cur = jitter(old, rng, 0.3);
    const auto batch = toy::collect_batch(old, cfg, 0);
    const double v = objective(batch.sequences, cur, old, ref, {}).value;
    auto doubled = batch.sequences;
    for (auto& g : doubled) {
      const auto copy = g;
      g.insert(g.end(), copy.begin(), copy.end());
    }
    worst = std::max(worst, std::abs(objective(doubled, cur, old, ref, {}).value - v));
  }
  verdict("DAPO normalization invariance", worst < 1e-10, "max |delta J| " + fmt(worst));
}

struct RunSummary {
  double vt0 = 0.0;
  double vt1 = 0.0;
  double len0 = 0.0;
  double len1 = 0.0;
  double acc0 = 0.0;
  double acc1 = 0.0;
  std::string jsonl;
  double reduction() const { return (len0 - len1) / len0; }
};

RunSummary run_training(toy::TrainConfig cfg) {
  const auto result = toy::train(cfg);
  const auto& h = result.history;
  return RunSummary{h.front().mean_vt,       h.back().mean_vt,        h.front().mean_length, h.back().mean_length,
                    h.front().mean_accuracy, h.back().mean_accuracy, toy::history_to_jsonl(h)};
}

void training_analog() {
  const auto t0 = std::chrono::steady_clock::now();
  const toy::TrainConfig cfg;
  const RunSummary r = run_training(cfg);
  const double secs = seconds_since(t0);
  const bool same = run_training(cfg).jsonl == r.jsonl;
  const double acc_change = std::abs(r.acc1 - r.acc0);
  const bool ok = r.vt0 < 0.6 && r.vt1 > 0.9 && r.reduction() >= 0.30 && acc_change <= 0.05 && same && secs < 300.0;
  verdict("desk-scale training analog", ok,
          "VT " + fmt(r.vt0, 3) + " -> " + fmt(r.vt1, 3) + ", length " + fmt(r.len0, 4) + " -> " + fmt(r.len1, 4) +
              " (-" + fmt(100.0 * r.reduction(), 3) + "%), accuracy " + fmt(r.acc0, 3) + " -> " + fmt(r.acc1, 3) +
              ", deterministic " + (same ? "yes" : "no") + ", " + fmt(secs, 3) + " s");
}

void ablations() {
  int gamma_ok = 0;
  int alpha_ok = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    toy::TrainConfig full;
    full.seed = seed;
    toy::TrainConfig no_gamma = full;
    no_gamma.gamma = 0.0;
    toy::TrainConfig no_alpha = full;
    no_alpha.alpha = 0.0;
    const RunSummary f = run_training(full);
    const RunSummary g = run_training(no_gamma);
    const RunSummary a = run_training(no_alpha);
    gamma_ok += g.vt1 < f.vt1;
    alpha_ok += a.reduction() < f.reduction();
    detail += " s" + std::to_string(seed) + ": VT " + fmt(f.vt1, 3) + "/" + fmt(g.vt1, 3) + ", cut " +
              fmt(f.reduction(), 3) + "/" + fmt(a.reduction(), 3) + ";";
  }
  verdict("ablation direction", gamma_ok == 5 && alpha_ok == 5,
          "gamma=0 lower VT " + std::to_string(gamma_ok) + "/5, alpha=0 smaller cut " + std::to_string(alpha_ok) +
              "/5;" + detail);
}

void sufficiency() {
  int fired = 0;
  int negative = 0;
  double worst = -INFINITY;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    toy::TrainConfig cfg;
    cfg.seed = seed;
    cfg.shape.allow_premature = true;
    const toy::ToyPolicy pol = cfg.initial_policy();
    const auto batch = toy::collect_batch(pol, cfg, 0);
    bool penalty = false;
    for (const auto& r : batch.rewards)
      for (double v : r.r_compress) penalty |= v == -1.0;
    if (!penalty) continue;
    ++fired;
    const double g = objective(batch.sequences, pol, pol, pol, ObjectiveConfig{cfg.epsilon, cfg.beta})
                         .gradient[toy::ToyPolicy::kPrematureIndex];
    negative += g < 0.0;
    worst = std::max(worst, g);
  }
  verdict("sufficiency penalty", fired > 0 && negative == fired,
          "penalty fired in " + std::to_string(fired) + "/20 seeds, negative gradient in " + std::to_string(negative) +
              ", largest " + fmt(worst));
}

void passk() {
  int cases = 0;
  int exact = 0;
  bool monotone = true;
  for (int n = 1; n <= 10; ++n) {
    for (int c = 0; c <= n; ++c) {
      double prev = -1.0;
      for (int k = 1; k <= n; ++k) {
        const auto [good, total] = oracle::passk_enumerate(n, c, k);
        ++cases;
        exact += pass_at_k_exact(n, c, k) == Rational(good, total);
        const double v = pass_at_k(n, c, k);
        monotone = monotone && v >= prev;
        prev = v;
      }
    }
  }
  verdict("pass@k estimator", exact == cases && monotone,
          std::to_string(exact) + "/" + std::to_string(cases) + " exact, monotone " + (monotone ? "yes" : "no"));
}

std::pair<int, std::string> shell(const std::string& args) {
  const std::string cmd = std::string("\"") + LCR_BIN + "\" " + args + " 2>/dev/null";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void determinism() {
  bool ok = true;
  std::string detail;

  toy::TrainConfig cfg;
  cfg.steps = 30;
  cfg.seed = 5;
  ok = ok && run_training(cfg).jsonl == run_training(cfg).jsonl;
  cfg.shape.allow_premature = true;
  cfg.kl_mode = KlMode::Sequence;
  ok = ok && run_training(cfg).jsonl == run_training(cfg).jsonl;

  const auto p = cfg.initial_policy();
  const auto b1 = toy::collect_batch(p, cfg, 3);
  const auto b2 = toy::collect_batch(p, cfg, 3);
  for (std::size_t k = 0; k < b1.groups.size(); ++k)
    for (std::size_t i = 0; i < b1.groups[k].size(); ++i) ok = ok && b1.groups[k].traces[i].raw == b2.groups[k].traces[i].raw;
  detail += "library runs identical " + std::string(ok ? "yes" : "no");

  const std::string corpus = std::string("\"") + LCR_DATA + "/sample_corpus.jsonl\"";
  int cli_same = 0;
  int cli_total = 0;
  for (const std::string& args : {std::string("train-toy --seed 11 --steps 25"),
                                  std::string("train-toy --seed 11 --steps 25 --set kl_mode=sequence"),
                                  "extract " + corpus, "rewards " + corpus, "vt " + corpus + " --format csv",
                                  "report --model " + corpus + " --base " + corpus}) {
    const auto a = shell(args);
    const auto b = shell(args);
    ++cli_total;
    cli_same += a.first == 0 && b.first == 0 && a.second == b.second && !a.second.empty();
  }
  ok = ok && cli_same == cli_total;
  detail += ", CLI commands identical " + std::to_string(cli_same) + "/" + std::to_string(cli_total);
  verdict("determinism", ok, detail);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {extractor_oracle, reward_fixtures, centering, gradient_check,
                                                       kl_properties,    dapo_invariance, training_analog, ablations,
                                                       sufficiency,      passk,           determinism};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      verdict("criterion raised", false, e.what());
    }
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
