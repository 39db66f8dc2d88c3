// priorclean command-line interface.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "priorclean/actions.hpp"
#include "priorclean/agent.hpp"
#include "priorclean/analysis.hpp"
#include "priorclean/error.hpp"
#include "priorclean/evaluator.hpp"
#include "priorclean/experiments.hpp"
#include "priorclean/greedy.hpp"
#include "priorclean/inject.hpp"
#include "priorclean/io.hpp"
#include "priorclean/observer.hpp"
#include "priorclean/stats.hpp"
#include "priorclean/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace priorclean;

namespace {

struct Globals {
  uint64_t seed = 42;
  std::string config;
  std::string out;
};

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

Table load_input(const std::string& path, const std::string& label) {
  LoadOptions lo;
  if (!label.empty()) lo.label_column = label;
  return load_table(path, lo);
}

Table load_labeled(const std::string& path, const std::string& label) {
  Table t = load_input(path, label);
  if (!t.has_label()) throw SchemaError(path + ": no label column (use --label)");
  return t;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

std::vector<RewardKind> parse_rewards(const std::vector<std::string>& names) {
  std::vector<RewardKind> out;
  for (const auto& n : names) {
    std::stringstream ss(n);
    for (std::string part; std::getline(ss, part, ',');) {
      if (!part.empty()) out.push_back(parse_reward_kind(part));
    }
  }
  return out;
}

json state_json(const QualityState& s) {
  return {{"vector", s.vector()},
          {"r_miss", s.r_miss},
          {"w1", s.w1},
          {"skew_mean", s.skew_mean},
          {"kurt_mean", s.kurt_mean},
          {"balance", s.balance},
          {"retention", s.retention},
          {"h_imp", s.h_imp},
          {"h_out", s.h_out},
          {"h_scl", s.h_scl}};
}

json profile_json(const Table& t) {
  const ReferenceProfile ref = reset_reference(t);
  json cols = json::array();
  for (const Column& c : t.columns()) {
    json cj = {{"name", c.name},
               {"kind", c.is_numeric() ? "numeric" : "categorical"},
               {"missing", c.missing_count()},
               {"missing_rate", t.n_rows() ? double(c.missing_count()) / double(t.n_rows()) : 0.0}};
    if (c.is_numeric()) {
      const auto obs = c.observed();
      const Moments m = moments(obs);
      cj["mean"] = m.mean;
      cj["sd"] = m.sd;
      cj["skewness"] = m.skewness;
      cj["excess_kurtosis"] = m.excess_kurtosis;
    } else {
      cj["categories"] = c.categories.size();
    }
    cols.push_back(cj);
  }
  json j = {{"rows", t.n_rows()},
            {"columns", t.n_cols()},
            {"duplicates", duplicate_row_count(t)},
            {"state", state_json(observe(t, ref, {}))},
            {"column_diagnostics", cols},
            {"warnings", t.provenance().warnings}};
  if (t.has_label()) {
    j["label"] = t.label().name;
    j["classes"] = t.label().classes;
    j["class_counts"] = t.class_counts();
  }
  return j;
}

struct EvalFlags {
  std::string mode = "reference";
  std::string command;
  std::unique_ptr<Evaluator> make() const { return make_evaluator(mode, split_words(command)); }
};

void add_eval_flags(CLI::App* sub, EvalFlags& f) {
  sub->add_option("--evaluator", f.mode, "Downstream evaluator")
      ->check(CLI::IsMember({"reference", "external", "mock"}))
      ->capture_default_str();
  sub->add_option("--evaluator-cmd", f.command, "Sidecar command line (external evaluator)");
}

HubOptions hub_options(uint64_t seed) {
  HubOptions o;
  o.seed = seed;
  o.forest.seed = seed;
  return o;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"priorclean: tabular cleaning as sequential pipeline optimization"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out", g.out, "Output directory or file");
  std::function<void()> action;

  auto sub = [&](const std::string& name, const std::string& desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->fallthrough();
    return s;
  };

  // synth
  BlobSpec blob;
  auto* synth = sub("synth", "Write a synthetic Gaussian-blob classification table");
  synth->add_option("--rows", blob.rows)->capture_default_str();
  synth->add_option("--numeric", blob.numeric)->capture_default_str();
  synth->add_option("--categorical", blob.categorical)->capture_default_str();
  synth->add_option("--classes", blob.classes)->capture_default_str();
  synth->add_option("--separation", blob.separation)->capture_default_str();
  synth->callback([&] {
    action = [&] {
      if (g.out.empty()) throw InvalidArgument("synth needs --out <file.csv|file.parquet>");
      blob.seed = g.seed;
      fs::path p(g.out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      save_table(make_blobs(blob), g.out);
    };
  });

  // inject
  std::string in_path, label, err_type = "mcar", name, fmt = "csv", pivot;
  int rate = 15;
  auto* inj = sub("inject", "Inject errors and write <name>_<type>_p<rate> artifacts");
  inj->add_option("--in", in_path, "Clean input table")->required();
  inj->add_option("--type", err_type, "mcar, mar, out or dup")->capture_default_str();
  inj->add_option("--rate", rate, "Rate in percent")->check(CLI::Range(0, 100))->capture_default_str();
  inj->add_option("--name", name, "Dataset name (default: input file stem)");
  inj->add_option("--format", fmt)->check(CLI::IsMember({"csv", "parquet"}))->capture_default_str();
  inj->add_option("--pivot", pivot, "MAR pivot column");
  inj->add_option("--label", label, "Label column");
  inj->callback([&] {
    action = [&] {
      Table t = load_input(in_path, label);
      ErrorProfile p;
      p.kind = parse_error_kind(err_type);
      p.rate = rate / 100.0;
      p.seed = g.seed;
      if (!pivot.empty()) p.mar_pivot = pivot;
      Table dirty = inject(t, p);
      const std::string stem =
          ArtifactName{name.empty() ? fs::path(in_path).stem().string() : name, error_kind_tag(p.kind), rate}.stem();
      const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
      fs::create_directories(dir);
      const fs::path path = dir / (stem + "." + fmt);
      save_table(dirty, path.string());
      std::cout << path.string() << "\n";
    };
  });

  // profile
  auto* prof = sub("profile", "Print the quality state and per-column diagnostics as JSON");
  prof->add_option("--in", in_path)->required();
  prof->add_option("--label", label);
  prof->callback([&] { action = [&] { print_json(profile_json(load_input(in_path, label))); }; });

  // enumerate
  std::string suite = "discrete7";
  bool list = false;
  auto* en = sub("enumerate", "Count (or list) valid pipelines of a suite");
  en->add_option("--suite", suite)->capture_default_str();
  en->add_flag("--list", list, "Print every canonical pipeline");
  en->callback([&] {
    action = [&] {
      const auto pool = enumerate_pipelines(ActionSuite::by_name(suite));
      if (list) {
        for (const auto& p : pool) std::cout << p.canonical() << "\n";
      } else {
        std::cout << pool.size() << "\n";
      }
    };
  });

  // greedy
  std::vector<std::string> reward_names;
  size_t n_p = 0, threads = 1;
  EvalFlags ef;
  auto* gr = sub("greedy", "Score a pipeline pool under one or more rewards");
  gr->add_option("--in", in_path)->required();
  gr->add_option("--label", label);
  gr->add_option("--suite", suite)->capture_default_str();
  gr->add_option("--reward", reward_names, "Reward(s), R1..R7 or alias; repeat or comma-separate");
  gr->add_option("--np", n_p, "Subsample the pool to this many pipelines (0 = all)")->capture_default_str();
  gr->add_option("--threads", threads)->capture_default_str();
  add_eval_flags(gr, ef);
  gr->callback([&] {
    action = [&] {
      const Table dirty = load_labeled(in_path, label);
      auto rewards = parse_rewards(reward_names);
      if (rewards.empty()) rewards = {RewardKind::kR3};
      auto pool = enumerate_pipelines(ActionSuite::by_name(suite));
      if (n_p > 0 && n_p < pool.size()) pool = subsample_pipelines(pool, n_p, g.seed);
      auto ev = ef.make();
      EvaluationHub hub(*ev, hub_options(g.seed));
      CleaningCache cache;
      SearchSession s(dirty, hub, cache);
      SearchOptions so;
      so.threads = threads;
      TaxonomyReport tax = rank_rewards(s, pool, rewards, so);
      const std::string dataset = fs::path(in_path).stem().string();
      json summary = {{"dataset", dataset},
                      {"suite", suite},
                      {"pipelines", pool.size()},
                      {"evaluator_calls", tax.evaluator_calls},
                      {"winners", json::array()}};
      for (const auto& r : tax.searches) {
        const auto* w = r.winner();
        summary["winners"].push_back({{"reward", reward_name(r.kind)},
                                      {"pipeline", w ? w->canonical : ""},
                                      {"score", w ? json(w->reward) : json(nullptr)},
                                      {"accuracy", w ? json(w->accuracy) : json(nullptr)},
                                      {"failures", r.failures}});
        if (summary.find("baselines") == summary.end() && !r.baselines.empty()) {
          json b = json::array();
          for (const auto& row : r.baselines) {
            b.push_back({{"name", row.name}, {"pipeline", row.pipeline}, {"accuracy", row.accuracy},
                         {"ece", row.ece}, {"failed", row.failed}});
          }
          summary["baselines"] = b;
        }
      }
      if (g.out.empty()) {
        std::cout << taxonomy_csv(tax, dataset);
        print_json(summary);
      } else {
        write_text(fs::path(g.out) / "greedy_matrix.csv", taxonomy_csv(tax, dataset));
        write_text(fs::path(g.out) / "greedy_scatter.csv", scatter_csv(tax, dataset));
        write_text(fs::path(g.out) / "greedy_summary.json", summary.dump(2) + "\n");
      }
      for (const auto& r : tax.searches) {
        if (!r.winner() && !r.scores.empty()) {
          throw EvaluatorError("every pipeline failed under " + reward_name(r.kind) + ": " +
                               r.scores.front().error);
        }
      }
    };
  });

  // train / finetune share environment flags
  std::string reward_name_flag = "R3", ckpt_path, traj_path;
  size_t steps = 3000;
  PpoConfig ppo;
  auto env_flags = [&](CLI::App* s) {
    s->add_option("--in", in_path)->required();
    s->add_option("--label", label);
    s->add_option("--suite", suite)->capture_default_str();
    s->add_option("--reward", reward_name_flag)->capture_default_str();
    s->add_option("--trajectory-log", traj_path, "JSONL log of every environment step");
    add_eval_flags(s, ef);
  };
  auto train_summary = [&](const TrainResult& r) {
    json j = {{"steps", r.checkpoint.steps},
              {"episodes", r.log.episodes.size()},
              {"final_mean_100", r.log.final_mean(100)},
              {"converged", r.checkpoint.converged},
              {"convergence_step", r.log.convergence_step ? json(*r.log.convergence_step) : json(nullptr)},
              {"checkpoints", json::array()}};
    for (const auto& [step, v] : r.log.checkpoints) j["checkpoints"].push_back({{"step", step}, {"rolling_mean", v}});
    return j;
  };
  auto curve_csv = [](const TrainLog& log) {
    std::string s = "episode,end_step,reward,rolling_mean\n";
    char buf[96];
    for (size_t i = 0; i < log.episodes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g\n", i + 1, log.episodes[i].end_step,
                    log.episodes[i].reward, log.rolling[i]);
      s += buf;
    }
    return s;
  };
  auto run_training = [&](bool finetune) {
    const Table dirty = load_labeled(in_path, label);
    EnvConfig ec;
    ec.reward = parse_reward_kind(reward_name_flag);
    ec.suite = suite;
    auto ev = ef.make();
    EvaluationHub hub(*ev, hub_options(g.seed));
    CleaningEnv env(dirty, ec, hub);
    std::ofstream traj;
    if (!traj_path.empty()) {
      traj.open(traj_path);
      if (!traj) throw IoError("cannot write " + traj_path);
      env.set_trajectory_log(&traj);
    }
    ppo.seed = g.seed;
    TrainResult r;
    if (finetune) {
      r = fine_tune(PolicyCheckpoint::load(ckpt_path), env, steps, ppo);
    } else {
      r = train_ppo(env, ppo, steps,
                    {fs::path(in_path).stem().string(), suite, reward_name(ec.reward)});
    }
    const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    fs::create_directories(dir);
    r.checkpoint.save(dir / "policy.pcp");
    write_text(dir / "training_curve.csv", curve_csv(r.log));
    print_json(train_summary(r));
  };
  auto* tr = sub("train", "Train a PPO cleaning policy; writes policy.pcp and training_curve.csv");
  env_flags(tr);
  tr->add_option("--steps", steps)->capture_default_str();
  tr->add_option("--hidden", ppo.hidden)->capture_default_str();
  tr->add_option("--lr", ppo.learning_rate)->capture_default_str();
  tr->callback([&] { action = [&] { run_training(false); }; });

  auto* ft = sub("finetune", "Continue training a checkpoint on another table");
  env_flags(ft);
  ft->add_option("--checkpoint", ckpt_path)->required();
  ft->add_option("--steps", steps)->capture_default_str();
  ft->callback([&] { action = [&] { run_training(true); }; });

  // evaluate-policy
  size_t episodes = 1;
  auto* evp = sub("evaluate-policy", "Roll out a checkpoint greedily and score the cleaned table");
  env_flags(evp);
  evp->add_option("--checkpoint", ckpt_path)->required();
  evp->add_option("--episodes", episodes)->capture_default_str();
  evp->callback([&] {
    action = [&] {
      const Table dirty = load_labeled(in_path, label);
      const PolicyCheckpoint ckpt = PolicyCheckpoint::load(ckpt_path);
      EnvConfig ec;
      ec.reward = parse_reward_kind(reward_name_flag);
      ec.suite = suite;
      auto ev = ef.make();
      EvaluationHub hub(*ev, hub_options(g.seed));
      CleaningEnv env(dirty, ec, hub);
      if (env.num_actions() != ckpt.n_actions) {
        throw InvalidArgument("checkpoint has " + std::to_string(ckpt.n_actions) + " actions, suite " +
                              suite + " has " + std::to_string(env.num_actions()));
      }
      const PpoAgent agent = PpoAgent::from_checkpoint(ckpt);
      double total = 0.0;
      std::vector<std::string> actions;
      Observation obs = env.reset();
      for (size_t t = 0; t < env.horizon(); ++t) {
        const size_t a = agent.act_greedy(obs);
        StepOutcome o = env.step(a);
        total += o.reward;
        actions.push_back(o.info);
        obs = o.observation;
      }
      auto e = hub.evaluate(env.table(), EvalProtocol::kBaseline);
      json j = {{"pipeline", env.applied().canonical()},
                {"steps", actions},
                {"episode_reward", total},
                {"mean_greedy_reward", greedy_policy_mean(agent, env, episodes)},
                {"rows", env.table().n_rows()},
                {"accuracy", e->accuracy},
                {"ece", e->ece}};
      print_json(j);
    };
  });

  // stats
  std::string csv_path, xcol, ycol, test = "wilcoxon", alt = "two-sided";
  auto* st = sub("stats", "Wilcoxon signed-rank or Spearman test on two CSV columns");
  st->add_option("--csv", csv_path)->required();
  st->add_option("--x", xcol)->required();
  st->add_option("--y", ycol)->required();
  st->add_option("--test", test)->check(CLI::IsMember({"wilcoxon", "spearman"}))->capture_default_str();
  st->add_option("--alternative", alt, "two-sided, greater or less")->capture_default_str();
  st->callback([&] {
    action = [&] {
      std::ifstream is(csv_path, std::ios::binary);
      if (!is) throw IoError("cannot read " + csv_path);
      std::stringstream buf;
      buf << is.rdbuf();
      const auto rows = parse_csv(buf.str());
      if (rows.empty()) throw EmptyInputError(csv_path + " is empty");
      auto col = [&](const std::string& n) {
        for (size_t j = 0; j < rows[0].size(); ++j) {
          if (rows[0][j] == n) return j;
        }
        throw SchemaError("column '" + n + "' not found in " + csv_path);
      };
      const size_t xi = col(xcol), yi = col(ycol);
      std::vector<double> x, y;
      for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() <= std::max(xi, yi)) continue;
        try {
          const double a = std::stod(rows[i][xi]);
          const double b = std::stod(rows[i][yi]);
          x.push_back(a);
          y.push_back(b);
        } catch (const std::exception&) {
          throw SchemaError("non-numeric value on line " + std::to_string(i + 1));
        }
      }
      if (test == "wilcoxon") {
        const TestResult r = wilcoxon_signed_rank(x, y, parse_alternative(alt));
        print_json({{"test", "wilcoxon"},
                    {"statistic", r.statistic},
                    {"p_value", r.p_value},
                    {"n_effective", r.n_effective},
                    {"alternative", alternative_name(r.alternative)},
                    {"method", r.method},
                    {"degenerate", r.degenerate}});
      } else {
        const SpearmanResult r = spearman(x, y);
        print_json({{"test", "spearman"},
                    {"rho", r.undefined ? json(nullptr) : json(r.rho)},
                    {"p_value", r.undefined ? json(nullptr) : json(r.p_value)},
                    {"n", r.n}});
      }
    };
  });

  // experiment
  std::string exp_id;
  auto* ex = sub("experiment", "Run experiment c1..c6 from a JSON config");
  ex->add_option("id", exp_id, "c1..c6")->required()->check(CLI::IsMember({"c1", "c2", "c3", "c4", "c5", "c6"}));
  ex->callback([&] {
    action = [&] {
      json j = json::object();
      if (!g.config.empty()) {
        std::ifstream is(g.config);
        if (!is) throw IoError("cannot read config " + g.config);
        try {
          j = json::parse(is);
        } catch (const json::exception& e) {
          throw InvalidArgument(g.config + ": " + e.what());
        }
      }
      // --seed overrides the config only when given explicitly.
      if (app.count("--seed") > 0) j["seed"] = g.seed;
      const ExperimentConfig cfg = ExperimentConfig::from_json(j, exp_id);
      const ReportBundle b = run_experiment(cfg);
      const fs::path dir = g.out.empty() ? fs::path("out") / exp_id : fs::path(g.out);
      write_bundle(b, dir);
      std::cout << dir.string() << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "priorclean: " << e.what() << "\n";
    return e.user_error() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "priorclean: internal error: " << e.what() << "\n";
    return 2;
  }
}
