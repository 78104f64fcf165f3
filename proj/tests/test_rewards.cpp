#include "doctest.h"

#include <stdexcept>
#include <numeric>
#include <random>

#include "lcr/extractor.hpp"
#include "lcr/rewards.hpp"

using namespace lcr;

namespace {

std::vector<std::string> words(std::size_t n, const std::string& w = "t") { return std::vector<std::string>(n, w); }

// Group whose compressed outputs have the given lengths (thinking + "</think>").
Group group_with_lengths(const std::vector<std::size_t>& lengths, const std::vector<bool>& correct) {
  Group g;
  g.query = Query{"q", "p", make_answer_key("1")};
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Trace t;
    t.query_id = "q";
    t.thinking = TokenSeq(words(lengths[i] - 1));
    t.answer_part = TokenSeq({"</think>"});
    t.format_ok = true;
    t.correct = correct[i];
    CompressedTrace c;
    c.query_id = "q";
    c.valid_thinking = t.thinking;
    c.answer_part = t.answer_part;
    c.cut_index = t.thinking.length();
    c.source_thinking_length = t.thinking.length();
    (correct[i] ? g.correct_idx : g.wrong_idx).push_back(i);
    g.traces.push_back(std::move(t));
    g.compressed.push_back(std::move(c));
  }
  return g;
}

Trace trace_of(const std::string& raw, const AnswerKey& key) { return make_trace("q", raw, key); }

}  // namespace

TEST_CASE("base_reward") {
  const auto key = make_answer_key("9");
  auto r = base_reward(trace_of("<think> 3 squared </think> \\boxed{9}", key), key);
  CHECK(r.format == 1);
  CHECK(r.accuracy == 1);
  CHECK(r.total() == 2);

  r = base_reward(trace_of("<think> 3 squared is \\boxed{9}", key), key);
  CHECK(r.format == 0);
  CHECK(r.accuracy == 0);

  r = base_reward(trace_of("<think> 3 squared </think> \\boxed{6}", key), key);
  CHECK(r.format == 1);
  CHECK(r.accuracy == 0);
}

TEST_CASE("length_rewards fixtures") {
  const Group g = group_with_lengths({100, 200, 400, 50}, {true, true, true, false});
  const auto r = length_rewards(g);
  CHECK(std::abs(r[0] - 0.75) <= 1e-12);
  CHECK(std::abs(r[1] - 0.5) <= 1e-12);
  CHECK(r[2] == 0.0);
  CHECK(r[3] == 0.0);

  CHECK(length_rewards(group_with_lengths({30}, {true})) == std::vector<double>{0.0});
  CHECK(length_rewards(group_with_lengths({30, 40}, {false, false})) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("combine_rewards fixtures") {
  const std::vector<int> base = {2, 1, 0};
  const std::vector<double> len = {0.0, 0.0, 0.0};
  const auto [tilde, combine] = combine_rewards(base, len, 1.0);
  CHECK(tilde == std::vector<double>{2.0, 1.0, 0.0});
  CHECK(std::abs(combine[0] - 1.0) <= 1e-12);
  CHECK(std::abs(combine[1]) <= 1e-12);
  CHECK(std::abs(combine[2] + 1.0) <= 1e-12);

  const std::vector<int> same = {1, 1, 1, 1};
  const std::vector<double> zeros(4, 0.0);
  for (double v : combine_rewards(same, zeros, 1.0).second) CHECK(v == 0.0);

  const std::vector<int> b2 = {2, 2, 0};
  const std::vector<double> l2 = {0.75, 0.5, 0.0};
  const auto [t2, c2] = combine_rewards(b2, l2, 2.0);
  CHECK(std::abs(t2[0] - 3.5) <= 1e-12);
  CHECK(std::abs(c2[0] - (3.5 - 6.5 / 3.0)) <= 1e-12);

  CHECK_THROWS_AS(combine_rewards({}, {}, 1.0), std::invalid_argument);
}

TEST_CASE("compress_reward fixtures") {
  const auto key = make_answer_key("42");
  std::string raw = "<think>";
  for (int i = 0; i < 100; ++i) raw += i == 59 ? " 42" : " t";
  raw += " </think> \\boxed{42}";
  const Trace t = trace_of(raw, key);
  REQUIRE(t.correct);
  const auto c = compress(t, key);
  CHECK(c.valid_thinking.length() == 60);
  CHECK(std::abs(compress_reward(t, c, key) - 0.4) <= 1e-12);

  const Trace never = trace_of("<think> t t t </think> \\boxed{42}", key);
  CHECK(compress_reward(never, compress(never, key), key) == -1.0);

  const Trace wrong = trace_of("<think> 42 t </think> \\boxed{41}", key);
  CHECK(compress_reward(wrong, compress(wrong, key), key) == 0.0);

  const Trace empty = trace_of("<think> </think> \\boxed{42}", key);
  CHECK(compress_reward(empty, compress(empty, key), key) == -1.0);
  const Group g = build_group(Query{"q", "p", key}, {empty});
  const auto bundle = compute_rewards(g, {});
  CHECK(bundle.warnings.size() == 1);
}

TEST_CASE("assemble_advantages fixture") {
  Group g = group_with_lengths({8}, {true});
  g.traces[0].answer_part = TokenSeq({"</think>", "x", "y"});
  g.compressed[0].valid_thinking = TokenSeq(words(7));
  g.compressed[0].answer_part = g.traces[0].answer_part;
  RewardBundle b;
  b.r_combine = {0.5};
  b.r_compress = {0.4};
  const auto adv = assemble_advantages(g, b, 1.0);
  REQUIRE(adv.rows[0].size() == 10);
  CHECK(adv.bonus_position[0] == 7);
  for (std::size_t t = 0; t < 10; ++t) {
    if (t == 7) CHECK(std::abs(adv.rows[0][t] - 0.9) <= 1e-12);
    else CHECK(adv.rows[0][t] == 0.5);
  }

  const auto off = assemble_advantages(g, b, 0.0);
  for (double v : off.rows[0]) CHECK(v == 0.5);

  g.compressed[0].answer_part = TokenSeq({"x"});
  const auto broken = assemble_advantages(g, b, 1.0);
  CHECK(broken.bonus_position[0] == std::string::npos);
  for (double v : broken.rows[0]) CHECK(v == 0.5);
}

TEST_CASE("reward bundle invariants on random groups") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const AnswerKey key = make_answer_key("7");
    const int g = std::uniform_int_distribution<int>(1, 8)(rng);
    std::vector<Trace> traces;
    for (int i = 0; i < g; ++i) {
      std::string raw = std::bernoulli_distribution(0.9)(rng) ? "<think>" : "";
      const int n = std::uniform_int_distribution<int>(0, 30)(rng);
      for (int j = 0; j < n; ++j) raw += std::bernoulli_distribution(0.1)(rng) ? " 7" : " w";
      if (std::bernoulli_distribution(0.9)(rng)) raw += " </think>";
      raw += std::bernoulli_distribution(0.6)(rng) ? " \\boxed{7}" : " \\boxed{8}";
      traces.push_back(make_trace("q", raw, key));
    }
    const Group grp = build_group(Query{"q", "p", key}, std::move(traces));
    const auto b = compute_rewards(grp, RewardConfig{1.0, 1.0});
    const double sum = std::accumulate(b.r_combine.begin(), b.r_combine.end(), 0.0);
    CHECK(std::abs(sum) <= 1e-9);
    std::size_t longest = 0;
    for (auto i : grp.correct_idx) longest = std::max(longest, grp.compressed[i].output_length());
    for (std::size_t i = 0; i < grp.size(); ++i) {
      CHECK(b.r_base[i] == b.r_format[i] + b.r_accuracy[i]);
      CHECK(b.r_length[i] >= 0.0);
      CHECK(b.r_length[i] < 1.0);
      CHECK(b.r_compress[i] < 1.0);
      CHECK(b.r_compress[i] >= -1.0);
      if (!grp.is_correct(i)) {
        CHECK(b.r_length[i] == 0.0);
        CHECK(b.r_compress[i] == 0.0);
      } else if (grp.compressed[i].output_length() == longest) {
        CHECK(b.r_length[i] == 0.0);
      }
    }
    const auto adv = assemble_advantages(grp, b, 1.0);
    for (std::size_t i = 0; i < grp.size(); ++i) {
      const auto toks = grp.compressed[i].tokens();
      std::size_t off_value = 0;
      for (std::size_t t = 0; t < toks.length(); ++t)
        if (adv.rows[i][t] != b.r_combine[i]) ++off_value;
      CHECK(off_value <= 1);
      if (adv.bonus_position[i] != std::string::npos) {
        CHECK(toks[adv.bonus_position[i]] == "</think>");
        CHECK(adv.rows[i][adv.bonus_position[i]] == b.r_combine[i] + b.r_compress[i]);
      }
    }
  }
}

TEST_CASE("centering is linear") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int g = std::uniform_int_distribution<int>(1, 10)(rng);
    std::vector<int> zero(g, 0);
    std::vector<double> tilde(g);
    for (auto& v : tilde) v = u(rng);
    std::vector<double> scaled = tilde;
    const double k = 3.5;
    for (auto& v : scaled) v *= k;
    const auto a = combine_rewards(zero, tilde, 1.0).second;
    const auto s = combine_rewards(zero, scaled, 1.0).second;
    for (int i = 0; i < g; ++i) CHECK(std::abs(s[i] - k * a[i]) <= 1e-12);
  }
}
