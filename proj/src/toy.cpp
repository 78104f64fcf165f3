#include "lcr/toy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "lcr/extractor.hpp"
#include "lcr/rewards.hpp"

namespace lcr::toy {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Rng Rng::substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed;
  std::uint64_t h = splitmix64(x);
  x = h ^ (a * 0xd1b54a32d192ed03ULL);
  h = splitmix64(x);
  x = h ^ (b * 0x8cb92ba72f3d8dd7ULL);
  return Rng(splitmix64(x));
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  // rejection sampling keeps the draw unbiased
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = 0;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

ToyTask gen_task(Rng& rng, std::string id) {
  static constexpr char kOps[] = {'+', '-', '*', '/'};
  ToyTask task;
  task.depth = 1 + rng.below(3);
  auto operand = [&] { return static_cast<std::int64_t>(1 + rng.below(9)); };
  std::int64_t first = operand();
  Rational value(first);
  std::string expr = std::to_string(first);
  for (std::size_t i = 0; i < task.depth; ++i) {
    const char op = kOps[rng.below(4)];
    const std::int64_t b = operand();
    if (i > 0) expr = "( " + expr + " )";
    expr += std::string(" ") + op + " " + std::to_string(b);
    switch (op) {
      case '+': value = value + Rational(b); break;
      case '-': value = value - Rational(b); break;
      case '*': value = value * Rational(b); break;
      default: value = value / Rational(b); break;
    }
  }
  task.expression = expr;
  task.query.id = std::move(id);
  task.query.prompt = "evaluate " + expr;
  task.query.ground_truth = make_answer_key(value.str());
  return task;
}

// ---------------------------------------------------------------------------
// Grammar walk

namespace {

enum class Phase { Reason, PreDecide, DigressDecide, DigressBody, Statement, Value, VerifyDecide, VerifyBody, Final,
                   EarlyFinal, Done, Invalid };

struct QueryFacts {
  std::size_t depth = 0;
  std::string correct;
  std::string wrong;
};

QueryFacts facts_for(const Query& q) {
  QueryFacts f;
  std::istringstream in(q.prompt);
  std::string tok;
  while (in >> tok)
    if (tok == "+" || tok == "-" || tok == "*" || tok == "/") ++f.depth;
  const auto& key = q.ground_truth.normalized;
  f.correct = key.value;
  f.wrong = key.exact ? (*key.exact + Rational(1)).str() : "not-" + key.value;
  return f;
}

std::string boxed(const std::string& v) { return "\\boxed{" + v + "}"; }

// Distribution over the next token: either one fixed token, or a two-way
// choice where `first` has probability sigmoid((logit + offset) / T).
struct Dist {
  bool binary = false;
  std::string first;
  std::string second;
  std::size_t param = 0;
  double offset = 0.0;
};

class Walker {
 public:
  Walker(const ToyShape& shape, const QueryFacts& facts) : shape_(shape), facts_(facts) {
    phase_ = facts_.depth == 0 ? Phase::PreDecide : Phase::Reason;
  }

  bool done() const { return phase_ == Phase::Done; }
  bool valid() const { return phase_ != Phase::Invalid; }

  // Precondition: !done() && valid().
  Dist next(std::size_t digress_base, std::size_t terminate_base) const {
    Dist d;
    switch (phase_) {
      case Phase::Reason: d.first = tmpl::kReasonStep[pos_]; break;
      case Phase::PreDecide:
        if (shape_.allow_premature) {
          d = Dist{true, tmpl::kThinkClose, tmpl::kContinue, ToyPolicy::kPrematureIndex, 0.0};
        } else {
          d.first = tmpl::kContinue;
        }
        break;
      case Phase::DigressDecide:
        if (count_ < shape_.digress_cap) {
          d = Dist{true, tmpl::kStatement[0], tmpl::kDigressOpen, digress_base + count_, 0.0};
        } else {
          d.first = tmpl::kStatement[0];
        }
        break;
      case Phase::DigressBody: d.first = tmpl::kDigressBody[pos_]; break;
      case Phase::Statement: d.first = tmpl::kStatement[pos_]; break;
      case Phase::Value: d = Dist{true, facts_.correct, facts_.wrong, ToyPolicy::kCorrectIndex, 0.0}; break;
      case Phase::VerifyDecide:
        if (count_ < shape_.verify_cap) {
          d = Dist{true, tmpl::kThinkClose, tmpl::kVerifyOpen, terminate_base + count_, 0.0};
        } else {
          d.first = tmpl::kThinkClose;
        }
        break;
      case Phase::VerifyBody: d.first = tmpl::kVerifyBody[pos_]; break;
      case Phase::Final: d.first = pos_ < tmpl::kFinal.size() ? tmpl::kFinal[pos_] : boxed(chosen_); break;
      case Phase::EarlyFinal:
        if (pos_ < tmpl::kFinal.size()) {
          d.first = tmpl::kFinal[pos_];
        } else {
          d = Dist{true, boxed(facts_.correct), boxed(facts_.wrong), ToyPolicy::kCorrectIndex, -shape_.guess_penalty};
        }
        break;
      case Phase::Done:
      case Phase::Invalid: break;
    }
    return d;
  }

  void advance(const std::string& tok, const Dist& d) {
    if (tok != d.first && !(d.binary && tok == d.second)) {
      phase_ = Phase::Invalid;
      return;
    }
    switch (phase_) {
      case Phase::Reason:
        if (++pos_ == tmpl::kReasonStep.size()) {
          pos_ = 0;
          if (++count_ == facts_.depth) enter(Phase::PreDecide);
        }
        break;
      case Phase::PreDecide:
        if (tok == tmpl::kThinkClose) {
          enter(Phase::EarlyFinal);
        } else {
          enter(Phase::DigressDecide);
        }
        break;
      case Phase::DigressDecide:
        if (tok == tmpl::kDigressOpen) {
          phase_ = Phase::DigressBody;
          pos_ = 0;
        } else {
          phase_ = Phase::Statement;
          pos_ = 1;
        }
        break;
      case Phase::DigressBody:
        if (++pos_ == tmpl::kDigressBody.size()) {
          phase_ = Phase::DigressDecide;
          ++count_;
        }
        break;
      case Phase::Statement:
        if (++pos_ == tmpl::kStatement.size()) phase_ = Phase::Value;
        break;
      case Phase::Value:
        chosen_ = tok;
        enter(Phase::VerifyDecide);
        break;
      case Phase::VerifyDecide:
        if (tok == tmpl::kVerifyOpen) {
          phase_ = Phase::VerifyBody;
          pos_ = 0;
        } else {
          enter(Phase::Final);
        }
        break;
      case Phase::VerifyBody:
        if (++pos_ == tmpl::kVerifyBody.size()) {
          phase_ = Phase::VerifyDecide;
          ++count_;
        }
        break;
      case Phase::Final:
      case Phase::EarlyFinal:
        if (++pos_ > tmpl::kFinal.size()) phase_ = Phase::Done;
        break;
      case Phase::Done:
      case Phase::Invalid: phase_ = Phase::Invalid; break;
    }
  }

 private:
  void enter(Phase p) {
    phase_ = p;
    pos_ = 0;
    count_ = 0;
  }

  const ToyShape& shape_;
  const QueryFacts& facts_;
  Phase phase_ = Phase::Reason;
  std::size_t pos_ = 0;
  std::size_t count_ = 0;
  std::string chosen_;
};

}  // namespace

ToyPolicy::ToyPolicy(ToyShape shape, std::vector<double> logits, double temperature)
    : shape_(shape), logits_(std::move(logits)), temperature_(temperature) {
  if (logits_.size() != parameter_count_for(shape_))
    throw std::invalid_argument("ToyPolicy: expected " + std::to_string(parameter_count_for(shape_)) + " logits");
  if (!(temperature_ > 0.0)) throw std::invalid_argument("ToyPolicy: temperature must be positive");
}

SequenceScore ToyPolicy::score(const Query& query, std::span<const std::string> tokens, bool with_gradient) const {
  const QueryFacts facts = facts_for(query);
  Walker walker(shape_, facts);
  SequenceScore out;
  out.log_probs.reserve(tokens.size());
  const std::size_t p = logits_.size();
  for (const auto& tok : tokens) {
    std::vector<double> grad;
    if (with_gradient) grad.assign(p, 0.0);
    double lp = kNegInf;
    if (walker.valid() && !walker.done()) {
      const Dist d = walker.next(digress_index(0), terminate_index(0));
      if (!d.binary) {
        lp = tok == d.first ? 0.0 : kNegInf;
      } else {
        const double z = (logits_[d.param] + d.offset) / temperature_;
        if (tok == d.first) {
          lp = log_sigmoid(z);
          if (with_gradient) grad[d.param] = (1.0 - sigmoid(z)) / temperature_;
        } else if (tok == d.second) {
          lp = log_sigmoid(-z);
          if (with_gradient) grad[d.param] = -sigmoid(z) / temperature_;
        }
      }
      walker.advance(tok, d);
    }
    out.log_probs.push_back(lp);
    if (with_gradient) out.grads.push_back(std::move(grad));
  }
  return out;
}

double ToyPolicy::log_prob(const Query& query, std::span<const std::string> prefix, const std::string& token) const {
  std::vector<std::string> seq(prefix.begin(), prefix.end());
  seq.push_back(token);
  const auto s = score(query, seq, false);
  for (std::size_t i = 0; i + 1 < s.log_probs.size(); ++i)
    if (!std::isfinite(s.log_probs[i])) return kNegInf;
  return s.log_probs.back();
}

std::vector<double> ToyPolicy::grad_log_prob(const Query& query, std::span<const std::string> prefix,
                                             const std::string& token) const {
  std::vector<std::string> seq(prefix.begin(), prefix.end());
  seq.push_back(token);
  auto s = score(query, seq, true);
  return std::move(s.grads.back());
}

std::vector<std::string> ToyPolicy::vocabulary(const Query& query) const {
  const QueryFacts f = facts_for(query);
  std::vector<std::string> v = {tmpl::kContinue, tmpl::kDigressOpen, tmpl::kVerifyOpen, tmpl::kThinkClose,
                                f.correct, f.wrong, boxed(f.correct), boxed(f.wrong)};
  for (const auto* list : {&tmpl::kReasonStep, &tmpl::kDigressBody, &tmpl::kStatement, &tmpl::kVerifyBody,
                           &tmpl::kFinal})
    v.insert(v.end(), list->begin(), list->end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::string> ToyPolicy::sample(const Query& query, Rng& rng, double temperature) const {
  const QueryFacts facts = facts_for(query);
  Walker walker(shape_, facts);
  std::vector<std::string> out;
  while (!walker.done()) {
    const Dist d = walker.next(digress_index(0), terminate_index(0));
    std::string tok = d.first;
    if (d.binary) {
      const double p_first = sigmoid((logits_[d.param] + d.offset) / temperature);
      tok = rng.uniform() < p_first ? d.first : d.second;
    }
    walker.advance(tok, d);
    out.push_back(std::move(tok));
  }
  return out;
}

double ToyPolicy::expected_verify_count(double temperature) const {
  double survive = 1.0;
  double expected = 0.0;
  for (std::size_t k = 0; k < shape_.verify_cap; ++k) {
    survive *= 1.0 - sigmoid(logits_[terminate_index(k)] / temperature);
    expected += survive;
  }
  return expected;
}

Group sample_group(const ToyPolicy& policy, const ToyTask& task, std::size_t group_size, double temperature,
                   Rng& rng) {
  if (group_size < 2) throw std::invalid_argument("sample_group: group size must be at least 2");
  std::vector<Trace> traces;
  traces.reserve(group_size);
  const AnswerKey& key = task.query.ground_truth;
  for (std::size_t i = 0; i < group_size; ++i) {
    std::vector<std::string> toks = {tmpl::kThinkOpen};
    const auto body = policy.sample(task.query, rng, temperature);
    toks.insert(toks.end(), body.begin(), body.end());
    TokenSeq seq(std::move(toks));
    std::string raw = seq.joined();
    traces.push_back(make_trace_from_tokens(task.query.id, std::move(raw), seq, key));
  }
  return build_group(task.query, std::move(traces));
}

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be non-negative");
  };
  non_negative(alpha, "alpha");
  non_negative(beta, "beta");
  non_negative(gamma, "gamma");
  positive(epsilon, "epsilon");
  positive(learning_rate, "learning_rate");
  positive(temperature, "temperature");
  non_negative(shape.guess_penalty, "guess_penalty");
  if (group_size < 2) throw std::invalid_argument("group_size must be at least 2");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (inner_iterations == 0) throw std::invalid_argument("inner_iterations must be positive");
  if (steps == 0) throw std::invalid_argument("steps must be positive");
  if (shape.verify_cap == 0) throw std::invalid_argument("verify_cap must be positive");
}

ToyPolicy TrainConfig::initial_policy() const {
  std::vector<double> logits(ToyPolicy::parameter_count_for(shape), 0.0);
  ToyPolicy policy(shape, std::move(logits), temperature);
  auto& l = policy.logits();
  l[ToyPolicy::kCorrectIndex] = init_correct;
  l[ToyPolicy::kPrematureIndex] = init_premature;
  for (std::size_t j = 0; j < shape.digress_cap; ++j) l[policy.digress_index(j)] = init_digress;
  for (std::size_t k = 0; k < shape.verify_cap; ++k) l[policy.terminate_index(k)] = init_terminate;
  return policy;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument("config " + key + ": not a number: " + v);
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("config " + key + ": not a non-negative integer: " + v);
  return std::stoull(v);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config " + key + ": not a boolean: " + v);
}

}  // namespace

void apply_setting(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "alpha") c.alpha = to_double(key, value);
  else if (key == "beta") c.beta = to_double(key, value);
  else if (key == "gamma") c.gamma = to_double(key, value);
  else if (key == "epsilon") c.epsilon = to_double(key, value);
  else if (key == "group_size") c.group_size = to_count(key, value);
  else if (key == "batch_size") c.batch_size = to_count(key, value);
  else if (key == "inner_iterations") c.inner_iterations = to_count(key, value);
  else if (key == "steps") c.steps = to_count(key, value);
  else if (key == "learning_rate") c.learning_rate = to_double(key, value);
  else if (key == "temperature") c.temperature = to_double(key, value);
  else if (key == "seed") c.seed = to_count(key, value);
  else if (key == "kl_mode") {
    if (value == "token") c.kl_mode = KlMode::PerToken;
    else if (value == "sequence") c.kl_mode = KlMode::Sequence;
    else throw std::invalid_argument("config kl_mode: expected token or sequence");
  }
  else if (key == "digress_cap") c.shape.digress_cap = to_count(key, value);
  else if (key == "verify_cap") c.shape.verify_cap = to_count(key, value);
  else if (key == "allow_premature") c.shape.allow_premature = to_bool(key, value);
  else if (key == "guess_penalty") c.shape.guess_penalty = to_double(key, value);
  else if (key == "init_correct") c.init_correct = to_double(key, value);
  else if (key == "init_premature") c.init_premature = to_double(key, value);
  else if (key == "init_digress") c.init_digress = to_double(key, value);
  else if (key == "init_terminate") c.init_terminate = to_double(key, value);
  else throw std::invalid_argument("unknown config key: " + key);
}

std::string describe(const TrainConfig& c) {
  std::map<std::string, std::string> kv;
  auto num = [](double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  kv["alpha"] = num(c.alpha);
  kv["beta"] = num(c.beta);
  kv["gamma"] = num(c.gamma);
  kv["epsilon"] = num(c.epsilon);
  kv["group_size"] = std::to_string(c.group_size);
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["inner_iterations"] = std::to_string(c.inner_iterations);
  kv["steps"] = std::to_string(c.steps);
  kv["learning_rate"] = num(c.learning_rate);
  kv["temperature"] = num(c.temperature);
  kv["seed"] = std::to_string(c.seed);
  kv["kl_mode"] = c.kl_mode == KlMode::PerToken ? "token" : "sequence";
  kv["digress_cap"] = std::to_string(c.shape.digress_cap);
  kv["verify_cap"] = std::to_string(c.shape.verify_cap);
  kv["allow_premature"] = c.shape.allow_premature ? "true" : "false";
  kv["guess_penalty"] = num(c.shape.guess_penalty);
  kv["init_correct"] = num(c.init_correct);
  kv["init_premature"] = num(c.init_premature);
  kv["init_digress"] = num(c.init_digress);
  kv["init_terminate"] = num(c.init_terminate);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

StepBatch collect_batch(const ToyPolicy& policy, const TrainConfig& config, std::size_t step) {
  StepBatch batch;
  for (std::size_t b = 0; b < config.batch_size; ++b) {
    Rng rng = Rng::substream(config.seed, step, b);
    ToyTask task = gen_task(rng, "step" + std::to_string(step) + "-q" + std::to_string(b));
    Group group = sample_group(policy, task, config.group_size, config.temperature, rng);
    RewardBundle rewards = compute_rewards(group, RewardConfig{config.alpha, config.gamma});
    const AdvantageMatrix adv = assemble_advantages(group, rewards, config.gamma);
    batch.sequences.push_back(make_sequence_group(group, adv));
    batch.groups.push_back(std::move(group));
    batch.rewards.push_back(std::move(rewards));
  }
  return batch;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  const ToyPolicy reference = config.initial_policy();
  ToyPolicy current = reference;
  TrainHistory history;
  const ObjectiveConfig objective_config{config.epsilon, config.beta, config.kl_mode};

  for (std::size_t step = 0; step < config.steps; ++step) {
    const ToyPolicy old = current;
    const StepBatch batch = collect_batch(old, config, step);

    StepRecord rec;
    rec.step = step;
    double vt_sum = 0.0;
    std::size_t vt_n = 0;
    double len_sum = 0.0;
    double acc_sum = 0.0;
    std::size_t n = 0;
    for (const auto& group : batch.groups) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        const Trace& tr = group.traces[i];
        const CompressedTrace& c = group.compressed[i];
        len_sum += static_cast<double>(tr.output_length());
        acc_sum += tr.correct ? 1.0 : 0.0;
        ++n;
        if (c.answer_found_in_thinking) {
          if (const auto vt = vt_rate(tr, c)) {
            vt_sum += vt->vt;
            ++vt_n;
          }
        }
      }
    }
    rec.mean_vt = vt_n ? vt_sum / static_cast<double>(vt_n) : 1.0;
    rec.mean_length = len_sum / static_cast<double>(n);
    rec.mean_accuracy = acc_sum / static_cast<double>(n);

    for (std::size_t it = 0; it < config.inner_iterations; ++it) {
      ObjectiveReport report;
      try {
        report = objective(batch.sequences, current, old, reference, objective_config);
      } catch (const std::domain_error& e) {
        throw std::runtime_error("training diverged at step " + std::to_string(step) + ": " + e.what());
      }
      if (it == 0) rec.objective = report.value;
      auto& logits = current.logits();
      for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += config.learning_rate * report.gradient[k];
      for (const double v : logits)
        if (!std::isfinite(v)) throw std::runtime_error("training diverged at step " + std::to_string(step));
    }
    rec.terminate_logit = current.logits()[current.terminate_index(0)];
    history.push_back(rec);
  }
  return TrainResult{std::move(current), std::move(history)};
}

std::string history_to_jsonl(const TrainHistory& history) {
  std::string out;
  for (const auto& r : history) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["mean_vt"] = r.mean_vt;
    j["mean_length"] = r.mean_length;
    j["mean_accuracy"] = r.mean_accuracy;
    j["objective"] = r.objective;
    j["terminate_logit"] = r.terminate_logit;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace lcr::toy
