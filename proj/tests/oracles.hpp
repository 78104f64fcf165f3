// Independent reference implementations used by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcr/grpo.hpp"
#include "lcr/policy.hpp"
#include "lcr/tokens.hpp"

namespace oracle {

// Plain fraction over long long, kept reduced.
struct Frac {
  long long n = 0;
  long long d = 1;

  static Frac make(long long n, long long d) {
    if (d == 0) throw std::domain_error("zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const long long g = std::gcd(n < 0 ? -n : n, d);
    return {n / g, d / g};
  }
  Frac operator+(Frac o) const { return make(n * o.d + o.n * d, d * o.d); }
  Frac operator-(Frac o) const { return make(n * o.d - o.n * d, d * o.d); }
  Frac operator*(Frac o) const { return make(n * o.n, d * o.d); }
  Frac operator/(Frac o) const { return make(n * o.d, d * o.n); }
  bool operator==(const Frac&) const = default;

  std::string text() const { return d == 1 ? std::to_string(n) : std::to_string(n) + "/" + std::to_string(d); }
};

// Recursive-descent evaluator for "a op b" chains with parentheses, all
// operators at one precedence level per parenthesised group.
class ExprEval {
 public:
  explicit ExprEval(const std::string& expr) {
    std::istringstream in(expr);
    std::string t;
    while (in >> t) toks_.push_back(t);
  }

  Frac eval() {
    Frac v = chain();
    if (pos_ != toks_.size()) throw std::runtime_error("trailing tokens");
    return v;
  }

 private:
  Frac atom() {
    const std::string t = toks_.at(pos_++);
    if (t == "(") {
      Frac v = chain();
      if (toks_.at(pos_++) != ")") throw std::runtime_error("expected )");
      return v;
    }
    return Frac::make(std::stoll(t), 1);
  }

  Frac chain() {
    Frac v = atom();
    while (pos_ < toks_.size() && toks_[pos_] != ")") {
      const std::string op = toks_[pos_++];
      const Frac b = atom();
      if (op == "+") v = v + b;
      else if (op == "-") v = v - b;
      else if (op == "*") v = v * b;
      else if (op == "/") v = v / b;
      else throw std::runtime_error("bad operator " + op);
    }
    return v;
  }

  std::vector<std::string> toks_;
  std::size_t pos_ = 0;
};

inline std::string join(std::span<const std::string> toks, std::size_t s, std::size_t e) {
  std::string out;
  for (std::size_t i = s; i < e; ++i) {
    if (i > s) out += ' ';
    out += toks[i];
  }
  return out;
}

// Exhaustive scan of every span [s, e): smallest e whose joined text is one of
// the accepted surfaces, ties broken by the shorter span.
struct SpanHit {
  std::size_t start = 0;
  std::size_t end = 0;
};

inline std::optional<SpanHit> first_span(const std::vector<std::string>& toks, const std::set<std::string>& accepted) {
  std::size_t longest = 0;
  for (const auto& a : accepted) longest = std::max(longest, a.size());
  std::optional<SpanHit> best;
  for (std::size_t s = 0; s < toks.size(); ++s) {
    std::string text;
    for (std::size_t e = s + 1; e <= toks.size(); ++e) {
      if (e > s + 1) text += ' ';
      text += toks[e - 1];
      if (text.size() > longest) break;  // no longer span can match
      if (accepted.count(text)) {
        if (!best || e < best->end || (e == best->end && s > best->start)) best = SpanHit{s, e};
        break;
      }
    }
  }
  return best;
}

inline long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Counts k-subsets of n samples (the first c correct) that contain a correct one.
inline std::pair<long long, long long> passk_enumerate(int n, int c, int k) {
  long long good = 0;
  long long total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    ++total;
    if (mask & ((1u << c) - 1u)) ++good;
  }
  return {good, total};
}

// Central differences of f around x, one coordinate at a time.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double fp = f(x);
    x[k] = x0 - h;
    const double fm = f(x);
    x[k] = x0;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), floor});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

// Softmax bigram policy: next-token logits W[prev][next] over a fixed
// vocabulary, the first row used at the start of a sequence.
class BigramPolicy final : public lcr::PolicyInterface {
 public:
  BigramPolicy(std::vector<std::string> vocab, std::vector<double> weights)
      : vocab_(std::move(vocab)), w_(std::move(weights)) {
    if (w_.size() != (vocab_.size() + 1) * vocab_.size()) throw std::invalid_argument("bigram weight count");
  }

  static BigramPolicy random(std::vector<std::string> vocab, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<double> w((vocab.size() + 1) * vocab.size());
    for (auto& v : w) v = nd(rng);
    return BigramPolicy(std::move(vocab), std::move(w));
  }

  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  std::size_t parameter_count() const override { return w_.size(); }

  double log_prob(const lcr::Query&, std::span<const std::string> prefix, const std::string& token) const override {
    const std::size_t row = row_of(prefix);
    const std::size_t col = index_of(token);
    if (col == npos) return -INFINITY;
    return w_[row * vocab_.size() + col] - log_norm(row);
  }

  std::vector<double> grad_log_prob(const lcr::Query&, std::span<const std::string> prefix,
                                    const std::string& token) const override {
    std::vector<double> g(w_.size(), 0.0);
    const std::size_t row = row_of(prefix);
    const std::size_t col = index_of(token);
    const std::size_t v = vocab_.size();
    const double z = log_norm(row);
    for (std::size_t j = 0; j < v; ++j) g[row * v + j] = -std::exp(w_[row * v + j] - z);
    if (col != npos) g[row * v + col] += 1.0;
    return g;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t index_of(const std::string& t) const {
    for (std::size_t i = 0; i < vocab_.size(); ++i)
      if (vocab_[i] == t) return i;
    return npos;
  }
  std::size_t row_of(std::span<const std::string> prefix) const {
    if (prefix.empty()) return 0;
    const std::size_t i = index_of(prefix.back());
    return i == npos ? 0 : i + 1;
  }
  double log_norm(std::size_t row) const {
    const std::size_t v = vocab_.size();
    double m = -INFINITY;
    for (std::size_t j = 0; j < v; ++j) m = std::max(m, w_[row * v + j]);
    double s = 0.0;
    for (std::size_t j = 0; j < v; ++j) s += std::exp(w_[row * v + j] - m);
    return m + std::log(s);
  }

  std::vector<std::string> vocab_;
  std::vector<double> w_;
};

}  // namespace oracle
