// Copyright 2026 The xplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Python bindings. Configuration documents cross the boundary as JSON text;
// the pure-Python layer in xplab/__init__.py converts dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "xplab/commands.h"
#include "xplab/envs.h"
#include "xplab/eval.h"
#include "xplab/landscape.h"
#include "xplab/train.h"
#include "xplab/util.h"

namespace py = pybind11;

namespace xplab {
namespace {

using Logits = std::vector<std::map<std::string, std::vector<double>>>;

Logits TableToPython(const ParameterTable& table) {
  Logits out(table.num_agents());
  for (int i = 0; i < table.num_agents(); ++i) {
    for (const auto& [key, v] : table.agent(i)) out[i][key] = v;
  }
  return out;
}

EvalOptions MakeEval(const std::string& mode, int games, std::uint64_t seed) {
  EvalOptions o;
  if (mode == "exact") {
    o.mode = EvalMode::kExact;
  } else if (mode == "monte_carlo") {
    o.mode = EvalMode::kMonteCarlo;
  } else {
    throw ConfigError("mode must be \"exact\" or \"monte_carlo\"");
  }
  o.games = games;
  o.seed = seed;
  return o;
}

py::dict OutputToPython(const CommandOutput& out) {
  py::dict d;
  d["out_dir"] = out.out_dir;
  d["files"] = out.files;
  d["summary"] = out.summary;
  return d;
}

CommandOptions MakeOptions(const std::string& out_dir, std::optional<std::uint64_t> seed,
                           int threads, std::optional<int> games, bool exact) {
  CommandOptions o;
  o.out_dir = out_dir;
  o.seed = seed;
  o.threads = threads;
  o.games = games;
  o.exact = exact;
  return o;
}

}  // namespace
}  // namespace xplab

PYBIND11_MODULE(_core, m) {
  using namespace xplab;
  m.doc() = "Tabular Dec-POMDP policy-gradient and cross-play tools";
  m.attr("__version__") = kToolVersion;

  py::register_exception<XplabError>(m, "XplabError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MissingAohError>(m, "MissingAohError", PyExc_KeyError);
  py::register_exception<BudgetExceededError>(m, "BudgetExceededError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<DecPomdp, std::shared_ptr<DecPomdp>>(m, "Env")
      .def_property_readonly("name", [](const DecPomdp& e) { return e.name; })
      .def_property_readonly("num_agents", [](const DecPomdp& e) { return e.num_agents; })
      .def_property_readonly("horizon", [](const DecPomdp& e) { return e.horizon; })
      .def_property_readonly("action_labels",
                             [](const DecPomdp& e) { return e.action_labels; })
      .def("__repr__", [](const DecPomdp& e) { return "<xplab.Env " + e.name + ">"; });

  // Environments are immutable once built; the const cast only satisfies the
  // holder type.
  auto unconst = [](EnvPtr env) { return std::const_pointer_cast<DecPomdp>(env); };
  m.def("make_matrix_game",
        [unconst](const PayoffMatrix& payoff) { return unconst(MakeMatrixGame(payoff)); },
        py::arg("payoff"));
  m.def(
      "make_cat_dog",
      [unconst](double reveal, double bail, double guess) {
        return unconst(MakeCatDog(CatDogSpec{reveal, bail, guess}));
      },
      py::arg("reveal_reward") = -3.0, py::arg("bail_reward") = 1.0,
      py::arg("guess_reward") = 10.0);
  m.def(
      "_make_env",
      [unconst](const std::string& text) {
        return unconst(MakeEnvFromJson(nlohmann::json::parse(text)));
      },
      py::arg("config_json"));
  m.def("convention_payoff", &ConventionPayoff);
  m.def("non_exploiting_payoff", &NonExploitingPayoff);

  py::class_<TabularJointPolicy>(m, "Policy")
      .def(py::init<int, bool>(), py::arg("num_agents"), py::arg("lazy") = true)
      .def_property_readonly("num_agents", &TabularJointPolicy::num_agents)
      .def_property_readonly("lazy", &TabularJointPolicy::lazy)
      .def("action_probs", &TabularJointPolicy::ActionProbs, py::arg("agent"),
           py::arg("key"), py::arg("num_actions"))
      .def("set_logits",
           [](TabularJointPolicy& p, int agent, const std::string& key,
              const std::vector<double>& logits) {
             p.MutableLogits(agent, key, static_cast<int>(logits.size())) = logits;
           },
           py::arg("agent"), py::arg("key"), py::arg("logits"))
      .def("logits", [](const TabularJointPolicy& p) { return TableToPython(p.logits()); })
      .def("register_all", &TabularJointPolicy::RegisterAll, py::arg("env"),
           py::arg("noise_scale") = 0.0, py::arg("seed") = 0)
      .def("greedify", [](const TabularJointPolicy& p) { return Greedify(p); })
      .def("tie_tolerance_greedify", &TieToleranceGreedify, py::arg("epsilon"))
      .def("provenance",
           [](const TabularJointPolicy& p) {
             const auto& v = p.provenance();
             py::dict d;
             d["env_name"] = v.env_name;
             d["alpha"] = v.alpha;
             d["seed"] = v.seed;
             d["config_digest"] = v.config_digest;
             d["label"] = v.label;
             return d;
           })
      .def("to_json", [](const TabularJointPolicy& p) {
        return PolicyToJson(p, kToolVersion).dump();
      })
      .def_static("from_json", [](const std::string& text) {
        return PolicyFromJson(nlohmann::json::parse(text));
      })
      .def("save", [](const TabularJointPolicy& p, const std::string& path) {
        SavePolicy(p, path, kToolVersion);
      })
      .def_static("load", &LoadPolicy);

  py::class_<SharedSymmetricPolicy>(m, "SharedSymmetricPolicy")
      .def(py::init<double, double>(), py::arg("theta1") = 0.0, py::arg("theta2") = 0.0)
      .def_readwrite("theta1", &SharedSymmetricPolicy::theta1)
      .def_readwrite("theta2", &SharedSymmetricPolicy::theta2)
      .def("probs", &SharedSymmetricPolicy::Probs)
      .def("to_policy", &SharedSymmetricPolicy::ToJointPolicy, py::arg("env"));

  m.def("softmax", [](const std::vector<double>& l) { return Softmax(l); });
  m.def("entropy", [](const std::vector<double>& p) { return Entropy(p); });

  m.def(
      "sp_score",
      [](const DecPomdp& env, const TabularJointPolicy& p, const std::string& mode,
         int games, std::uint64_t seed) {
        const Score s = SpScore(env, p, MakeEval(mode, games, seed));
        return py::make_tuple(s.mean, s.standard_error);
      },
      py::arg("env"), py::arg("policy"), py::arg("mode") = "exact",
      py::arg("games") = 10000, py::arg("seed") = 0);
  m.def(
      "xp_score",
      [](const DecPomdp& env, const std::vector<TabularJointPolicy>& policies,
         const std::string& mode, int games, std::uint64_t seed) {
        const Score s = XpScore(env, policies, MakeEval(mode, games, seed));
        return py::make_tuple(s.mean, s.standard_error);
      },
      py::arg("env"), py::arg("policies"), py::arg("mode") = "exact",
      py::arg("games") = 10000, py::arg("seed") = 0);
  m.def(
      "xp_matrix",
      [](const DecPomdp& env, const std::vector<TabularJointPolicy>& population,
         bool greedy_first, double tie_epsilon, const std::string& mode, int games,
         std::uint64_t seed, int threads) {
        XpMatrixOptions o;
        o.eval = MakeEval(mode, games, seed);
        o.greedy_first = greedy_first;
        o.tie_epsilon = tie_epsilon;
        o.threads = threads;
        const auto x = BuildXpMatrix(env, population, o);
        std::vector<std::vector<double>> rows(x.size);
        for (int j = 0; j < x.size; ++j) {
          for (int k = 0; k < x.size; ++k) rows[j].push_back(x.at(j, k));
        }
        return py::make_tuple(rows, x.labels);
      },
      py::arg("env"), py::arg("population"), py::arg("greedy_first") = true,
      py::arg("tie_epsilon") = kDefaultTieEpsilon, py::arg("mode") = "exact",
      py::arg("games") = 10000, py::arg("seed") = 0, py::arg("threads") = 1);
  m.def(
      "block_average",
      [](const std::vector<std::vector<double>>& rows, int group_size) {
        XpMatrix x;
        x.size = static_cast<int>(rows.size());
        for (const auto& r : rows) {
          if (static_cast<int>(r.size()) != x.size) throw XplabError("matrix must be square");
          x.values.insert(x.values.end(), r.begin(), r.end());
        }
        const auto b = BlockAverage(x, group_size);
        std::vector<std::vector<double>> block(b.groups);
        for (int g = 0; g < b.groups; ++g) {
          for (int h = 0; h < b.groups; ++h) block[g].push_back(b.at(g, h));
        }
        return py::make_tuple(block, b.sp);
      },
      py::arg("matrix"), py::arg("group_size"));
  m.def("cross_seed_team_count", &CrossSeedTeamCount, py::arg("num_players"),
        py::arg("num_seeds"));
  m.def(
      "cross_seed_teams",
      [](const DecPomdp& env, const std::vector<TabularJointPolicy>& seeds,
         double tie_epsilon) {
        const auto t = CrossSeedTeams(env, seeds, {}, tie_epsilon);
        py::dict d;
        d["mean"] = t.mean;
        d["spread"] = t.spread;
        d["team_count"] = t.team_count;
        d["scores"] = t.scores;
        return d;
      },
      py::arg("env"), py::arg("seeds"), py::arg("tie_epsilon") = kDefaultTieEpsilon);

  m.def(
      "exact_gradient",
      [](const DecPomdp& env, const TabularJointPolicy& p, double alpha) {
        return TableToPython(ExactGradient(env, p, alpha));
      },
      py::arg("env"), py::arg("policy"), py::arg("alpha"));
  m.def("j_alpha",
        [](const DecPomdp& env, const TabularJointPolicy& p, double alpha) {
          return JAlpha(env, p, alpha);
        },
        py::arg("env"), py::arg("policy"), py::arg("alpha"));
  m.def(
      "surface",
      [](const DecPomdp& env, double alpha, const std::vector<double>& t1,
         const std::vector<double>& t2, int threads) {
        const auto s = ComputeSurface(env, alpha, t1, t2, threads);
        std::vector<std::vector<double>> rows(t1.size());
        for (std::size_t i = 0; i < t1.size(); ++i) {
          for (std::size_t j = 0; j < t2.size(); ++j) rows[i].push_back(s.at(i, j));
        }
        return rows;
      },
      py::arg("env"), py::arg("alpha"), py::arg("theta1"), py::arg("theta2"),
      py::arg("threads") = 1);

  m.def(
      "_train",
      [](std::shared_ptr<DecPomdp> env, const std::string& config_json) {
        const auto config = TrainConfig::FromJson(nlohmann::json::parse(config_json));
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = Train(env, config);
        }
        py::list log;
        for (const auto& row : r.log.rows) {
          py::dict d;
          d["iteration"] = row.iteration;
          d["sp_estimate"] = row.sp_estimate;
          d["mean_entropy"] = row.mean_entropy;
          d["grad_norm"] = row.grad_norm;
          log.append(d);
        }
        return py::make_tuple(r.policy, log);
      },
      py::arg("env"), py::arg("config_json"));
  m.def(
      "_sweep_alpha",
      [](std::shared_ptr<DecPomdp> env, const std::vector<double>& alphas, int seeds,
         const std::string& config_json, int threads) {
        const auto config = TrainConfig::FromJson(nlohmann::json::parse(config_json));
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = SweepAlpha(env, alphas, seeds, config, threads);
        }
        py::list out;
        for (const auto& e : r.entries) {
          py::dict d;
          d["alpha"] = e.alpha;
          d["seed_index"] = e.seed_index;
          d["seed"] = e.seed;
          d["greedy_sp"] = e.greedy_sp;
          d["sampled_sp"] = e.sampled_sp;
          d["argmax"] = e.argmax_labels;
          d["policy"] = e.policy;
          out.append(d);
        }
        return out;
      },
      py::arg("env"), py::arg("alphas"), py::arg("seeds_per_alpha"),
      py::arg("config_json"), py::arg("threads") = 1);

  const auto run = [](auto fn) {
    return [fn](const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed, int threads, std::optional<int> games,
                bool exact) {
      auto config = ExperimentConfig::Load(config_path);
      const auto options = MakeOptions(out_dir, seed, threads, games, exact);
      py::gil_scoped_release release;
      return fn(std::move(config), options);
    };
  };
  const auto args = [](py::module_& mod, const char* name, auto f) {
    mod.def(name,
            [f](const std::string& c, const std::string& o, std::optional<std::uint64_t> s,
                int t, std::optional<int> g, bool e) {
              return OutputToPython(f(c, o, s, t, g, e));
            },
            py::arg("config_path"), py::arg("out_dir") = "", py::arg("seed") = py::none(),
            py::arg("threads") = 1, py::arg("games") = py::none(), py::arg("exact") = false);
  };
  args(m, "run_train", run(RunTrain));
  args(m, "run_sweep", run(RunSweep));
  args(m, "run_landscape", run(RunLandscape));
  m.def(
      "run_report",
      [](const std::string& dir, const std::string& out_dir, double tie_epsilon, int threads) {
        CommandOptions o;
        o.out_dir = out_dir;
        o.threads = threads;
        CommandOutput out;
        {
          py::gil_scoped_release release;
          out = RunReport(dir, o, tie_epsilon);
        }
        return OutputToPython(out);
      },
      py::arg("population_dir"), py::arg("out_dir") = "",
      py::arg("tie_epsilon") = kDefaultTieEpsilon, py::arg("threads") = 1);
}
