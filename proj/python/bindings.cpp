#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lcr/corpus.hpp"
#include "lcr/extractor.hpp"
#include "lcr/metrics.hpp"
#include "lcr/rewards.hpp"
#include "lcr/toy.hpp"

namespace py = pybind11;
using namespace lcr;

namespace {

std::vector<std::string> to_list(const TokenSeq& seq) { return {seq.begin(), seq.end()}; }

py::dict compress_text(const std::string& output, const std::string& ground_truth) {
  const AnswerKey key = make_answer_key(ground_truth);
  const Trace t = make_trace("q", output, key);
  const CompressedTrace c = compress(t, key);
  py::dict d;
  d["format_ok"] = t.format_ok;
  d["correct"] = t.correct;
  d["answer_found"] = c.answer_found_in_thinking;
  d["cut_index"] = c.cut_index;
  d["thinking_length"] = t.thinking.length();
  d["valid_thinking"] = to_list(c.valid_thinking);
  d["answer_part"] = to_list(c.answer_part);
  const auto vt = vt_rate(t, c);
  d["vt"] = vt ? py::object(py::float_(vt->vt)) : py::object(py::none());
  return d;
}

py::dict group_rewards(const std::vector<std::string>& outputs, const std::string& ground_truth, double alpha,
                       double gamma) {
  const AnswerKey key = make_answer_key(ground_truth);
  std::vector<Trace> traces;
  for (const auto& o : outputs) traces.push_back(make_trace("q", o, key));
  const Group g = build_group(Query{"q", "", key}, std::move(traces));
  const RewardBundle b = compute_rewards(g, RewardConfig{alpha, gamma});
  const AdvantageMatrix adv = assemble_advantages(g, b, gamma);
  py::dict d;
  d["r_format"] = b.r_format;
  d["r_accuracy"] = b.r_accuracy;
  d["r_length"] = b.r_length;
  d["r_combine"] = b.r_combine;
  d["r_compress"] = b.r_compress;
  d["advantages"] = adv.rows;
  py::list pos;
  for (std::size_t p : adv.bonus_position)
    pos.append(p == std::string::npos ? py::object(py::none()) : py::object(py::int_(p)));
  d["bonus_position"] = pos;
  return d;
}

toy::TrainConfig make_config(const std::map<std::string, std::string>& settings) {
  toy::TrainConfig cfg;
  for (const auto& [k, v] : settings) toy::apply_setting(cfg, k, v);
  cfg.validate();
  return cfg;
}

py::list train_toy(const std::map<std::string, std::string>& settings) {
  const auto result = toy::train(make_config(settings));
  py::list rows;
  for (const auto& r : result.history) {
    py::dict d;
    d["step"] = r.step;
    d["mean_vt"] = r.mean_vt;
    d["mean_length"] = r.mean_length;
    d["mean_accuracy"] = r.mean_accuracy;
    d["objective"] = r.objective;
    d["terminate_logit"] = r.terminate_logit;
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_lcr, m) {
  m.doc() = "Valid-thinking extraction, rewards and the toy trainer";
  m.def("compress", &compress_text, py::arg("output"), py::arg("ground_truth"),
        "Cut the thinking region after the first correct answer.");
  m.def("group_rewards", &group_rewards, py::arg("outputs"), py::arg("ground_truth"), py::arg("alpha") = 1.0,
        py::arg("gamma") = 1.0);
  m.def("normalize_answer", [](const std::string& s) { return normalize_answer(s).value; });
  m.def("answers_equivalent", [](const std::string& a, const std::string& b) {
    return answers_equivalent(normalize_answer(a), normalize_answer(b));
  });
  m.def("pass_at_k", &pass_at_k, py::arg("n"), py::arg("c"), py::arg("k"));
  m.def("pass_at_k_exact", [](std::size_t n, std::size_t c, std::size_t k) { return pass_at_k_exact(n, c, k).str(); },
        py::arg("n"), py::arg("c"), py::arg("k"));
  m.def("describe_config", [](const std::map<std::string, std::string>& s) { return toy::describe(make_config(s)); },
        py::arg("settings") = std::map<std::string, std::string>{});
  m.def("train_toy", &train_toy, py::arg("settings") = std::map<std::string, std::string>{});
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
}
