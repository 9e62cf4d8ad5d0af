// Python surface for the main operations: rating scaling and binarization,
// metrics, loss values, the convex solvers, synthetic-corpus generation and
// the full CLI pipeline. Heavyweight training runs go through run_cli so the
// Python layer sees exactly the artifacts the command-line tool writes.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "tedrate/baselines.hpp"
#include "tedrate/commands.hpp"
#include "tedrate/common.hpp"
#include "tedrate/corpus.hpp"
#include "tedrate/evaluation.hpp"
#include "tedrate/synth.hpp"
#include "tedrate/textpipe.hpp"
#include "tedrate/training.hpp"

namespace py = pybind11;
using namespace tedrate;

namespace {

std::array<double, corpus::kNumCategories> to_rating_array(const std::vector<double>& v,
                                                           const char* what) {
  if (v.size() != corpus::kNumCategories)
    throw UsageError(std::string(what) + ": expected " +
                     std::to_string(corpus::kNumCategories) + " values, got " +
                     std::to_string(v.size()));
  std::array<double, corpus::kNumCategories> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Talk-rating prediction core: scaling, metrics, baselines, synth and CLI";

  py::register_exception<Error>(m, "TedrateError");

  m.attr("num_categories") = corpus::kNumCategories;

  m.def("categories", [] {
    const auto& cats = corpus::categories();
    return std::vector<std::string>(cats.begin(), cats.end());
  }, "The 14 rating categories in canonical order");

  m.def("tokenize", [](const std::string& sentence) { return textpipe::tokenize(sentence); },
        py::arg("sentence"), "Canonical tokenizer: lowercased word runs, punctuation split off");

  m.def("scale_ratings", [](const std::vector<double>& raw) {
    corpus::RatingVector in;
    in.kind = corpus::RatingKind::raw_count;
    in.values = to_rating_array(raw, "scale_ratings");
    corpus::RatingVector out = corpus::scale_ratings(in);
    return std::vector<double>(out.values.begin(), out.values.end());
  }, py::arg("raw"), "Per-talk rating normalization: r_i / sum_j r_j");

  m.def("binarize_by_median", [](const std::vector<double>& column) {
    corpus::BinarizeResult r = corpus::binarize_by_median(column);
    return py::make_tuple(r.labels, r.median);
  }, py::arg("column"), "Strictly-above-median binarization; returns (labels, median)");

  m.def("auc", [](const std::vector<double>& scores, const std::vector<int>& labels) {
    return evaluation::auc(scores, labels);
  }, py::arg("scores"), py::arg("labels"), "Rank-based ROC AUC with tie averaging");

  m.def("auc_trapezoid", [](const std::vector<double>& scores, const std::vector<int>& labels) {
    return evaluation::auc_trapezoid(scores, labels);
  }, py::arg("scores"), py::arg("labels"), "Trapezoidal ROC AUC (independent oracle)");

  m.def("prf", [](const std::vector<int>& predictions, const std::vector<int>& labels) {
    evaluation::Prf r = evaluation::prf(predictions, labels);
    py::dict d;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["f_score"] = r.f_score;
    return d;
  }, py::arg("predictions"), py::arg("labels"));

  m.def("bce_value", [](const std::vector<double>& probs, const std::vector<double>& labels) {
    return training::bce_value(to_rating_array(probs, "bce_value"),
                               to_rating_array(labels, "bce_value"));
  }, py::arg("probs"), py::arg("labels"), "Mean multi-label binary cross-entropy");

  m.def("fit_linear", [](const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                         const std::string& kind, double C, std::size_t max_iters) {
    baselines::FitOptions opts;
    opts.C = C;
    opts.max_iters = max_iters;
    std::vector<std::string> schema;
    for (std::size_t j = 0; j < (x.empty() ? 0 : x[0].size()); ++j)
      schema.push_back("f" + std::to_string(j));
    baselines::LinearModel model =
        baselines::fit_linear(x, y, baselines::parse_kind(kind), opts, schema);
    py::dict d;
    d["w"] = model.w;
    d["b"] = model.b;
    d["converged"] = model.converged;
    d["objective"] = model.objective;
    d["iterations"] = model.iterations;
    return d;
  }, py::arg("x"), py::arg("y"), py::arg("kind") = "svm", py::arg("C") = 1.0,
     py::arg("max_iters") = 5000,
     "Fit one svm/lasso/ridge model on +-1 labels; returns weights and solver state");

  m.def("generate_corpus", [](const std::string& out_dir, std::size_t n_talks,
                              std::uint64_t seed, std::size_t vocab_size,
                              const std::vector<py::tuple>& rules,
                              const std::string& tree_shape) {
    synth::SynthSpec spec;
    spec.n_talks = n_talks;
    spec.seed = seed;
    spec.vocab_size = vocab_size;
    spec.tree_shape = synth::parse_tree_shape(tree_shape);
    for (const py::tuple& r : rules) {
      if (r.size() != 4)
        throw UsageError("generate_corpus: each rule is (category, trigger, channel, strength)");
      synth::PlantedRule rule;
      rule.category = r[0].cast<std::string>();
      rule.trigger = r[1].cast<std::string>();
      rule.prosody_channel = r[2].cast<int>();
      rule.strength = r[3].cast<double>();
      spec.rules.push_back(std::move(rule));
    }
    synth::SynthSummary summary = synth::generate(spec, out_dir);
    py::dict d;
    d["talk_ids"] = summary.talk_ids;
    d["rule_categories"] = summary.rule_categories;
    d["trigger_counts"] = summary.trigger_counts;
    return d;
  }, py::arg("out_dir"), py::arg("n_talks") = 200, py::arg("seed") = 1,
     py::arg("vocab_size") = 60, py::arg("rules") = std::vector<py::tuple>{},
     py::arg("tree_shape") = "chain",
     "Write a synthetic corpus; rules are (category, trigger, prosody_channel, strength) "
     "with prosody_channel = -1 for lexical rules");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    return commands::run_cli(args);
  }, py::arg("args"),
     "Run one CLI subcommand (synth/prepare/train/evaluate/baseline/gradcheck/report); "
     "returns the process exit code");
}
