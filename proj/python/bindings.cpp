// pybind11 surface: tensors with autodiff, the distribution toolkit,
// lambda-returns, environments, config handling, training/eval entry points,
// metrics reading and score aggregation. Lists in, lists out — no numpy
// dependency.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dreamcc/behavior.hpp"
#include "dreamcc/config.hpp"
#include "dreamcc/dists.hpp"
#include "dreamcc/envs.hpp"
#include "dreamcc/evalscore.hpp"
#include "dreamcc/harness.hpp"
#include "dreamcc/plot.hpp"
#include "dreamcc/rng.hpp"
#include "dreamcc/tensor.hpp"

namespace py = pybind11;
using namespace dreamcc;

namespace {

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::kF32;
  if (s == "f64") return DType::kF64;
  throw UsageError("dtype must be f32 or f64");
}

Tensor make_tensor(const std::vector<int64_t>& shape, const std::vector<double>& data,
                   const std::string& dtype, bool requires_grad) {
  Shape s(shape.begin(), shape.end());
  return Tensor::from_vector(std::move(s), data, parse_dtype(dtype), requires_grad);
}

std::vector<int64_t> tensor_shape(const Tensor& t) {
  const Shape& s = t.shape();
  return std::vector<int64_t>(s.begin(), s.end());
}

std::map<std::string, std::string> config_to_dict(const TrainConfig& cfg) {
  std::map<std::string, std::string> out;
  std::istringstream in(serialize_config(cfg));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

TrainConfig config_from(const std::string& path, const std::vector<std::string>& overrides) {
  TrainConfig cfg = parse_config_file(path);
  for (const auto& o : overrides) apply_override(cfg, o);
  validate_config(cfg);
  return cfg;
}

py::dict step_to_dict(const EnvStep& s) {
  py::dict d;
  d["image"] = s.image.to_vector();
  d["image_u8"] = s.image_u8;
  d["reward"] = s.reward;
  d["terminal"] = s.terminal;
  d["truncated"] = s.truncated;
  return d;
}

py::dict eval_to_dict(const EvalReport& r) {
  py::dict d;
  d["returns"] = r.returns;
  d["mean"] = r.mean;
  d["stddev"] = r.stddev;
  d["success_rate"] = r.success_rate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DreamerV2-style world-model RL core";

  py::register_exception<DimensionError>(m, "DimensionError");
  py::register_exception<UsageError>(m, "UsageError");
  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<NumericError>(m, "NumericError");
  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<LoadError>(m, "LoadError");
  py::register_exception<NotReadyError>(m, "NotReadyError");

  // ---- tensors -------------------------------------------------------------
  py::class_<Tensor>(m, "Tensor")
      .def(py::init(&make_tensor), py::arg("shape"), py::arg("data"),
           py::arg("dtype") = "f32", py::arg("requires_grad") = false)
      .def_property_readonly("shape", &tensor_shape)
      .def_property_readonly("size", &Tensor::size)
      .def("to_list", &Tensor::to_vector)
      .def("item", &Tensor::item)
      .def("detach", &Tensor::detach)
      .def("zero_grad", &Tensor::zero_grad)
      .def("grad", [](const Tensor& t) -> py::object {
        Tensor g = t.grad();
        if (!g.defined()) return py::none();
        return py::cast(g.to_vector());
      })
      .def("reshape", [](const Tensor& t, const std::vector<int64_t>& shape) {
        return t.reshape(Shape(shape.begin(), shape.end()));
      });

  m.def("backward", &backward, py::arg("loss"));

  m.def("add", &add);
  m.def("sub", &sub);
  m.def("mul", &mul);
  m.def("divide", &div);
  m.def("add_scalar", &add_scalar);
  m.def("scale", &scale);
  m.def("neg", &neg);
  m.def("exp", &dreamcc::exp);
  m.def("log", &dreamcc::log);
  m.def("sqrt", &dreamcc::sqrt);
  m.def("square", &square);
  m.def("tanh", &dreamcc::tanh);
  m.def("sigmoid", &sigmoid);
  m.def("elu", &elu);
  m.def("softplus", &softplus);
  m.def("matmul", &matmul);
  m.def("sum_all", &sum_all);
  m.def("mean_all", &mean_all);
  m.def("sum_rows", &sum_rows);
  m.def("softmax", &softmax);
  m.def("log_softmax", &log_softmax);

  // ---- distributions -------------------------------------------------------
  m.def("kl_categorical", &kl_categorical);
  m.def("entropy_categorical", &entropy_categorical);
  m.def("log_prob_onehot", &log_prob_onehot);
  m.def("gaussian_log_prob_unit", &gaussian_log_prob_unit);
  m.def("bernoulli_log_prob", &bernoulli_log_prob);
  m.def("diag_gaussian_kl", &diag_gaussian_kl);
  m.def(
      "kl_balanced",
      [](const Tensor& post, const Tensor& prior, double alpha, double free_bits) {
        auto [loss, value] = kl_balanced(post, prior, alpha, free_bits);
        return py::make_tuple(loss, value);
      },
      py::arg("post_logits"), py::arg("prior_logits"), py::arg("alpha"),
      py::arg("free_bits") = 0.0);
  m.def(
      "sample_straight_through",
      [](const Tensor& logits, uint64_t seed) {
        Rng rng = make_stream(seed, "py_st");
        return sample_straight_through(logits, rng);
      },
      py::arg("logits"), py::arg("seed"));

  // ---- behavior ------------------------------------------------------------
  m.def(
      "lambda_returns",
      [](const std::vector<double>& rewards, const std::vector<double>& discounts,
         const std::vector<double>& values, double lam) {
        auto row = [](double v) { return Tensor::constant({1}, v, DType::kF64); };
        std::vector<Tensor> r, d, v;
        for (double x : rewards) r.push_back(row(x));
        for (double x : discounts) d.push_back(row(x));
        for (double x : values) v.push_back(row(x));
        std::vector<double> out;
        for (const Tensor& t : lambda_returns(r, d, v, lam)) out.push_back(t.item());
        return out;
      },
      py::arg("rewards"), py::arg("discounts"), py::arg("values"), py::arg("lambda_"));

  // ---- environments ----------------------------------------------------------
  py::class_<Env>(m, "Env")
      .def_property_readonly("image_size", &Env::image_size)
      .def_property_readonly("channels", &Env::channels)
      .def_property_readonly("discrete",
                             [](const Env& e) { return e.action_space().discrete; })
      .def_property_readonly("action_dim",
                             [](const Env& e) { return e.action_space().dim; })
      .def("reset", [](Env& e, uint64_t seed) { return step_to_dict(e.reset(seed)); },
           py::arg("seed"))
      .def("step", [](Env& e, const std::vector<float>& a) { return step_to_dict(e.step(a)); },
           py::arg("action"));
  m.def(
      "make_env",
      [](const std::string& task, int action_repeat, int64_t time_limit_steps,
         int64_t image_size, bool sticky_actions, uint64_t seed) {
        EnvConfig cfg;
        cfg.action_repeat = action_repeat;
        cfg.time_limit_steps = time_limit_steps;
        cfg.image_size = image_size;
        cfg.sticky_actions = sticky_actions;
        cfg.seed = seed;
        return make_env(task, cfg);
      },
      py::arg("task"), py::arg("action_repeat") = 1, py::arg("time_limit_steps") = 1000,
      py::arg("image_size") = 32, py::arg("sticky_actions") = false, py::arg("seed") = 0);

  // ---- config / training / eval ---------------------------------------------
  m.def(
      "load_config",
      [](const std::string& path, const std::vector<std::string>& overrides) {
        return config_to_dict(config_from(path, overrides));
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{});
  m.def("config_keys", &config_keys);
  m.def(
      "train",
      [](const std::string& config_path, const std::vector<std::string>& overrides) {
        Trainer trainer(config_from(config_path, overrides));
        TrainResult r = trainer.run();
        py::dict d;
        d["env_steps"] = r.env_steps;
        d["updates"] = r.updates;
        d["episodes"] = r.episodes;
        d["final_eval_return"] = r.final_eval_return;
        d["early_stopped"] = r.early_stopped;
        d["run_dir"] = r.run_dir;
        return d;
      },
      py::arg("config_path"), py::arg("overrides") = std::vector<std::string>{});
  m.def(
      "evaluate_checkpoint",
      [](const std::string& run_dir, int64_t episodes, uint64_t seed,
         const std::string& video_dir) {
        return eval_to_dict(evaluate_checkpoint(run_dir, episodes, seed, video_dir));
      },
      py::arg("run_dir"), py::arg("episodes"), py::arg("seed") = 0,
      py::arg("video_dir") = "");

  // ---- metrics / scores ------------------------------------------------------
  m.def("read_metrics", &read_metrics_jsonl, py::arg("path"));
  m.def("normalize_score", &normalize_score, py::arg("score"), py::arg("random"),
        py::arg("reference"));
  m.def(
      "aggregate_scores",
      [](const std::string& baselines_csv, const std::string& scores_dir,
         const std::string& protocol) {
        ScoreTable table{load_baselines(baselines_csv), load_score_dir(scores_dir)};
        return aggregate(table, parse_protocol(protocol));
      },
      py::arg("baselines_csv"), py::arg("scores_dir"), py::arg("protocol"));

  m.attr("__version__") = "0.1.0";
}
