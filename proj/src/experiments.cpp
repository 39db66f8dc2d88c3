#include "priorclean/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "priorclean/analysis.hpp"
#include "priorclean/error.hpp"
#include "priorclean/evaluator.hpp"
#include "priorclean/greedy.hpp"
#include "priorclean/io.hpp"

namespace priorclean {

using nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string str() const {
    std::ostringstream os;
    write(os, header_);
    for (const auto& r : rows_) write(os, r);
    return os.str();
  }

 private:
  static void write(std::ostream& os, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << csv_escape(cells[i]);
    }
    os << '\n';
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

const std::map<std::string, std::vector<std::string>>& plot_headers() {
  static const std::map<std::string, std::vector<std::string>> h = {
      {"heatmap", {"reward", "dataset", "best_score"}},
      {"sensitivity", {"dataset", "rate", "method", "accuracy"}},
      {"transfer", {"dataset", "step", "variant", "reward"}},
      {"scatter", {"dataset", "reward", "pipeline", "score", "accuracy"}},
  };
  return h;
}

std::vector<InjectionSpec> default_profiles(const std::string& id) {
  if (id == "c3") {
    return {{ErrorKind::kMcar, 15}, {ErrorKind::kMar, 15}, {ErrorKind::kOutlier, 10},
            {ErrorKind::kDuplicate, 10}};
  }
  if (id == "c4") {
    std::vector<InjectionSpec> v;
    for (int r : {0, 5, 10, 15, 20, 30}) v.push_back({ErrorKind::kMcar, r});
    return v;
  }
  return {{ErrorKind::kMcar, 15}};
}

std::string cell_name(const std::string& dataset, const InjectionSpec& s) {
  return ArtifactName{dataset, error_kind_tag(s.kind), s.rate_percent}.stem();
}

// Everything one experiment run shares: the evaluator, its memoizing hub and
// the cleaning cache.
struct Runtime {
  explicit Runtime(const ExperimentConfig& c)
      : config(c), evaluator(make_evaluator(c.evaluator, c.evaluator_command)), hub(*evaluator, hub_options(c)) {}

  static HubOptions hub_options(const ExperimentConfig& c) {
    HubOptions o;
    o.seed = c.seed;
    o.forest.seed = c.seed;
    return o;
  }

  Table load(const std::string& dataset, const InjectionSpec& spec) const {
    LoadOptions lo;
    lo.label_column = config.label_column;
    Table t = load_table(resolve_artifact(config, dataset, spec).string(), lo);
    if (!t.has_label()) {
      throw SchemaError("dataset " + cell_name(dataset, spec) + " has no label column");
    }
    return t;
  }

  std::vector<Pipeline> pipelines(const std::string& suite) const {
    auto pool = enumerate_pipelines(ActionSuite::by_name(suite));
    if (config.n_pipelines == 0 || config.n_pipelines >= pool.size()) return pool;
    return subsample_pipelines(pool, config.n_pipelines, config.seed);
  }

  SearchOptions search_options(bool baselines) const {
    SearchOptions o;
    o.threads = config.threads;
    o.baselines = baselines;
    return o;
  }

  const ExperimentConfig& config;
  std::unique_ptr<Evaluator> evaluator;
  EvaluationHub hub;
  CleaningCache cache;
};

struct MethodResult {
  std::string method;
  std::string pipeline;
  double accuracy = NAN;
  double ece = NAN;
  std::string error;
};

MethodResult from_baseline(const BaselineRow& b) {
  return {b.name, b.pipeline, b.failed ? NAN : b.accuracy, b.failed ? NAN : b.ece, b.error};
}

// Winner of a greedy search, scored on the baseline protocol so it is
// comparable with B0-B3.
MethodResult greedy_method(SearchSession& s, const std::string& name, const SearchReport& r) {
  MethodResult m;
  m.method = name;
  const PipelineScore* w = r.winner();
  if (!w) {
    m.error = "every pipeline failed";
    return m;
  }
  m.pipeline = w->canonical;
  try {
    auto cleaned = s.cache().get(s.dirty(), s.dirty_fingerprint(), w->pipeline);
    auto e = s.hub().evaluate(cleaned->table, cleaned->fingerprint, EvalProtocol::kBaseline);
    m.accuracy = e->accuracy;
    m.ece = e->ece;
  } catch (const Error& e) {
    m.error = e.what();
  }
  return m;
}

// Trains a policy on the dirty table and scores the table its greedy
// rollout produces.
MethodResult rl_method(Runtime& rt, const Table& dirty, const std::string& name, RewardKind kind,
                       size_t steps, size_t extra_steps) {
  MethodResult m;
  m.method = name;
  EnvConfig ec;
  ec.reward = kind;
  ec.suite = rt.config.suite;
  CleaningEnv env(dirty, ec, rt.hub);
  PpoConfig pc = rt.config.rl.ppo;
  pc.seed = rt.config.seed;
  TrainResult tr = train_ppo(env, pc, steps);
  if (extra_steps > 0) tr = fine_tune(tr.checkpoint, env, extra_steps);
  PpoAgent agent = PpoAgent::from_checkpoint(tr.checkpoint);
  Observation obs = env.reset();
  for (size_t t = 0; t < env.horizon(); ++t) {
    StepOutcome out = env.step(agent.act_greedy(obs));
    obs = out.observation;
  }
  m.pipeline = env.applied().canonical();
  try {
    auto e = rt.hub.evaluate(env.table(), EvalProtocol::kBaseline);
    m.accuracy = e->accuracy;
    m.ece = e->ece;
  } catch (const Error& e) {
    m.error = e.what();
  }
  return m;
}

json mean_by_method(const std::vector<std::pair<std::string, MethodResult>>& rows) {
  std::map<std::string, std::pair<double, double>> sum;
  std::map<std::string, size_t> count;
  std::vector<std::string> order;
  for (const auto& [cell, m] : rows) {
    if (!count.count(m.method)) order.push_back(m.method);
    count[m.method];
    if (std::isnan(m.accuracy)) continue;
    sum[m.method].first += m.accuracy;
    sum[m.method].second += m.ece;
    ++count[m.method];
  }
  json out = json::array();
  for (const auto& name : order) {
    const size_t n = count[name];
    out.push_back({{"method", name},
                   {"n", n},
                   {"mean_accuracy", n ? sum[name].first / static_cast<double>(n) : 0.0},
                   {"mean_ece", n ? sum[name].second / static_cast<double>(n) : 0.0}});
  }
  return out;
}

json test_json(const TestResult& t) {
  return {{"statistic", t.statistic},        {"p_value", t.p_value},
          {"n_effective", t.n_effective},    {"alternative", alternative_name(t.alternative)},
          {"method", t.method},              {"degenerate", t.degenerate}};
}

void run_c1(Runtime& rt, ReportBundle& b) {
  const auto& c = rt.config;
  const auto pipelines = rt.pipelines(c.suite);
  std::string matrix = "dataset,reward,pipeline,length,score,raw,accuracy,ece,n_rows,status\n";
  Csv winners({"dataset", "reward", "pipeline", "score", "accuracy", "ece"});
  std::vector<std::vector<std::string>> heat;
  std::vector<std::vector<std::string>> scatter;
  json cells = json::array();
  for (const auto& d : c.datasets) {
    for (const auto& p : c.profiles) {
      const std::string cell = cell_name(d, p);
      SearchSession s(rt.load(d, p), rt.hub, rt.cache);
      TaxonomyReport tax = rank_rewards(s, pipelines, c.rewards, rt.search_options(false));
      const std::string m = taxonomy_csv(tax, cell);
      matrix += m.substr(m.find('\n') + 1);
      json cj = {{"dataset", cell}, {"winners", json::object()}};
      for (const SearchReport& r : tax.searches) {
        const PipelineScore* w = r.winner();
        const std::string reward = reward_name(r.kind);
        winners.row({cell, reward, w ? w->canonical : "", w ? num(w->reward) : "",
                     w ? num(w->accuracy) : "", w ? num(w->ece) : ""});
        heat.push_back({reward, cell, w ? num(w->reward) : ""});
        cj["winners"][reward] = w ? w->canonical : "";
        for (const PipelineScore& ps : r.scores) {
          if (!ps.failed) scatter.push_back({cell, reward, ps.canonical, num(ps.reward), num(ps.accuracy)});
        }
      }
      cells.push_back(cj);
    }
  }
  b.files.emplace_back("reward_matrix.csv", matrix);
  b.files.emplace_back("winners.csv", winners.str());
  b.plots.emplace_back("heatmap", heat);
  b.plots.emplace_back("scatter", scatter);
  b.summary = {{"pipelines", pipelines.size()},
               {"rewards", c.rewards.size()},
               {"matrix_shape", {c.rewards.size(), pipelines.size()}},
               {"cells", cells}};
}

// B0-B5 (and optionally the two RL rows) for one dirty table.
std::vector<MethodResult> baseline_suite(Runtime& rt, const Table& dirty, bool with_rl,
                                         bool with_b2b3) {
  const auto& c = rt.config;
  SearchSession s(dirty, rt.hub, rt.cache);
  std::vector<MethodResult> out;
  std::vector<BaselineRow> base = run_baselines(s);
  for (const BaselineRow& row : base) {
    if (!with_b2b3 && (row.name == "B2" || row.name == "B3")) continue;
    out.push_back(from_baseline(row));
  }
  const auto pipelines = rt.pipelines(c.suite);
  out.push_back(greedy_method(s, "B4", greedy_search(s, pipelines, RewardKind::kR3, rt.search_options(true))));
  out.push_back(greedy_method(s, "B5", greedy_search(s, pipelines, RewardKind::kR7, rt.search_options(true))));
  if (with_rl && c.rl.enabled) {
    out.push_back(rl_method(rt, dirty, "B-RL-RF", RewardKind::kR3, c.rl.steps, 0));
    out.push_back(rl_method(rt, dirty, "B-RL-TFM", RewardKind::kR7, c.rl.steps, c.rl.finetune_steps));
  }
  return out;
}

void run_c2(Runtime& rt, ReportBundle& b) {
  const auto& c = rt.config;
  Csv table({"dataset", "method", "pipeline", "accuracy", "ece", "error"});
  Csv divergence({"dataset", "b4_pipeline", "b5_pipeline", "diverge"});
  std::vector<std::pair<std::string, MethodResult>> all;
  std::vector<double> b4;
  std::vector<double> b5;
  for (const auto& d : c.datasets) {
    for (const auto& p : c.profiles) {
      const std::string cell = cell_name(d, p);
      const auto results = baseline_suite(rt, rt.load(d, p), true, true);
      std::string p4;
      std::string p5;
      for (const auto& m : results) {
        table.row({cell, m.method, m.pipeline, num(m.accuracy), num(m.ece), m.error});
        all.emplace_back(cell, m);
        if (m.method == "B4") p4 = m.pipeline, b4.push_back(m.accuracy);
        if (m.method == "B5") p5 = m.pipeline, b5.push_back(m.accuracy);
      }
      divergence.row({cell, p4, p5, p4 == p5 ? "no" : "yes"});
    }
  }
  b.files.emplace_back("baselines.csv", table.str());
  b.files.emplace_back("divergence.csv", divergence.str());
  b.summary = {{"means", mean_by_method(all)}};
  bool finite = true;
  for (size_t i = 0; i < b4.size(); ++i) finite = finite && std::isfinite(b4[i]) && std::isfinite(b5[i]);
  if (!b4.empty() && finite) {
    b.summary["wilcoxon_b5_vs_b4"] = test_json(wilcoxon_signed_rank(b5, b4, Alternative::kTwoSided));
  }
}

void run_c3(Runtime& rt, ReportBundle& b) {
  const auto& c = rt.config;
  Csv rows({"dataset", "error_type", "rate", "method", "accuracy", "ece"});
  std::map<std::string, std::vector<std::pair<std::string, MethodResult>>> by_type;
  std::vector<std::string> type_order;
  for (const auto& d : c.datasets) {
    for (const auto& p : c.profiles) {
      const std::string type = error_kind_tag(p.kind);
      if (!by_type.count(type)) type_order.push_back(type);
      for (const auto& m : baseline_suite(rt, rt.load(d, p), false, false)) {
        rows.row({d, type, std::to_string(p.rate_percent), m.method, num(m.accuracy), num(m.ece)});
        by_type[type].emplace_back(d, m);
      }
    }
  }
  Csv bars({"error_type", "method", "mean_accuracy", "mean_ece", "n"});
  json summary = json::object();
  for (const auto& type : type_order) {
    const json means = mean_by_method(by_type[type]);
    for (const auto& m : means) {
      bars.row({type, m["method"], num(m["mean_accuracy"]), num(m["mean_ece"]),
                std::to_string(m["n"].get<size_t>())});
    }
    summary[type] = means;
  }
  b.files.emplace_back("error_types.csv", rows.str());
  b.files.emplace_back("error_type_bars.csv", bars.str());
  b.summary = {{"by_error_type", summary}};
}

void run_c4(Runtime& rt, ReportBundle& b) {
  const auto& c = rt.config;
  std::vector<std::vector<std::string>> sens;
  Csv spear({"dataset", "rho", "p_value", "n", "undefined"});
  json tests = json::array();
  for (const auto& d : c.datasets) {
    std::vector<double> rates;
    std::vector<double> advantage;
    for (const auto& p : c.profiles) {
      double b1 = NAN;
      double b5 = NAN;
      for (const auto& m : baseline_suite(rt, rt.load(d, p), false, false)) {
        if (m.method == "B2" || m.method == "B3" || m.method == "B4") continue;
        sens.push_back({d, std::to_string(p.rate_percent), m.method, num(m.accuracy)});
        if (m.method == "B1") b1 = m.accuracy;
        if (m.method == "B5") b5 = m.accuracy;
      }
      if (std::isfinite(b1) && std::isfinite(b5)) {
        rates.push_back(p.rate_percent);
        advantage.push_back(b5 - b1);
      }
    }
    if (rates.size() >= 3) {
      const SpearmanResult s = spearman(rates, advantage);
      spear.row({d, num(s.rho), num(s.p_value), std::to_string(s.n), s.undefined ? "yes" : "no"});
      tests.push_back({{"dataset", d},
                       {"rho", s.undefined ? json(nullptr) : json(s.rho)},
                       {"p_value", s.undefined ? json(nullptr) : json(s.p_value)},
                       {"n", s.n}});
    }
  }
  b.files.emplace_back("spearman.csv", spear.str());
  b.plots.emplace_back("sensitivity", sens);
  b.summary = {{"spearman_rate_vs_advantage", tests}};
}

void run_c5(Runtime& rt, ReportBundle& b) {
  const auto& c = rt.config;
  const RewardKind kind = c.rewards.empty() ? RewardKind::kR3 : c.rewards.front();
  const auto discrete = rt.pipelines("discrete7");
  const auto param = rt.pipelines("param17");
  Csv rows({"dataset", "discrete_best", "discrete_pipeline", "param_best", "param_pipeline", "delta"});
  std::vector<double> xs;
  std::vector<double> ys;
  size_t improved = 0;
  size_t ties = 0;
  for (const auto& d : c.datasets) {
    for (const auto& p : c.profiles) {
      const std::string cell = cell_name(d, p);
      SearchSession s(rt.load(d, p), rt.hub, rt.cache);
      const SearchReport rd = greedy_search(s, discrete, kind, rt.search_options(false));
      const SearchReport rp = greedy_search(s, param, kind, rt.search_options(false));
      if (!rd.winner() || !rp.winner()) {
        rows.row({cell, "", "", "", "", ""});
        continue;
      }
      const double delta = rp.best_score - rd.best_score;
      improved += delta > 0 ? 1 : 0;
      ties += delta == 0 ? 1 : 0;
      xs.push_back(rp.best_score);
      ys.push_back(rd.best_score);
      rows.row({cell, num(rd.best_score), rd.winner()->canonical, num(rp.best_score),
                rp.winner()->canonical, num(delta)});
    }
  }
  b.files.emplace_back("param_vs_discrete.csv", rows.str());
  b.summary = {{"reward", reward_name(kind)},
               {"improved", improved},
               {"ties", ties},
               {"n", xs.size()},
               {"line", "improved on " + std::to_string(improved) + " of " +
                            std::to_string(xs.size()) + " datasets"}};
  if (!xs.empty()) {
    b.summary["wilcoxon_param_gt_discrete"] = test_json(wilcoxon_signed_rank(xs, ys, Alternative::kGreater));
  }
}

void run_c6(Runtime& rt, ReportBundle& b) {
  const auto& c = rt.config;
  const auto& tr = c.transfer;
  if (tr.source.empty() || tr.targets.empty()) {
    throw InvalidArgument("c6 needs transfer.source and transfer.targets");
  }
  if (c.profiles.empty()) throw InvalidArgument("c6 needs an injection profile");
  const InjectionSpec prof = c.profiles.front();
  const RewardKind kind = c.rewards.empty() ? RewardKind::kR7 : c.rewards.front();
  EnvConfig ec;
  ec.reward = kind;
  ec.suite = c.suite;
  PpoConfig pc = c.rl.ppo;
  pc.seed = c.seed;
  CleaningEnv source_env(rt.load(tr.source, prof), ec, rt.hub);
  const TrainResult source = train_ppo(source_env, pc, tr.steps, {tr.source, c.suite, reward_name(kind)});

  std::vector<std::vector<std::string>> curve;
  Csv gaps({"dataset", "scratch_at_checkpoint", "finetune_at_checkpoint", "scratch_final",
            "gap_at_checkpoint", "gap_vs_scratch_final", "exceeds_scratch_final",
            "finetune_steps_to_scratch_final"});
  size_t exceeds = 0;
  json rows = json::array();
  for (const auto& target : tr.targets) {
    const Table dirty = rt.load(target, prof);
    CleaningEnv scratch_env(dirty, ec, rt.hub);
    const TrainResult scratch = train_ppo(scratch_env, pc, tr.steps);
    CleaningEnv ft_env(dirty, ec, rt.hub);
    const TrainResult ft = fine_tune(source.checkpoint, ft_env, tr.steps, pc);
    for (size_t step = tr.curve_every; step <= tr.steps; step += tr.curve_every) {
      if (auto v = scratch.log.rolling_at(step)) curve.push_back({target, std::to_string(step), "scratch", num(*v)});
      if (auto v = ft.log.rolling_at(step)) curve.push_back({target, std::to_string(step), "finetune", num(*v)});
    }
    const double s_k = scratch.log.rolling_at(tr.checkpoint_step).value_or(NAN);
    const double f_k = ft.log.rolling_at(tr.checkpoint_step).value_or(NAN);
    const double s_final = scratch.log.rolling.empty() ? NAN : scratch.log.rolling.back();
    auto gap = [](double s, double f) {
      return std::isfinite(s) && std::isfinite(f) && s != 0.0 ? transfer_gap(s, f) : NAN;
    };
    const bool ex = std::isfinite(f_k) && std::isfinite(s_final) && f_k >= s_final;
    exceeds += ex ? 1 : 0;
    const auto reach = std::isfinite(s_final) ? ft.log.first_step_reaching(s_final, pc.rolling_window) : std::nullopt;
    gaps.row({target, num(s_k), num(f_k), num(s_final), num(gap(s_k, f_k)), num(gap(s_final, f_k)),
              ex ? "yes" : "no", reach ? std::to_string(*reach) : ""});
    rows.push_back({{"dataset", target}, {"exceeds_scratch_final", ex}});
  }
  b.files.emplace_back("transfer_gap.csv", gaps.str());
  b.plots.emplace_back("transfer", curve);
  b.summary = {{"source", tr.source},
               {"reward", reward_name(kind)},
               {"source_converged", source.log.convergence_step.has_value()},
               {"exceeds_scratch_final_at_checkpoint",
                std::to_string(exceeds) + "/" + std::to_string(tr.targets.size())},
               {"targets", rows}};
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.profiles = default_profiles(experiment);
  if (experiment == "c1") {
    c.rewards = core_rewards();
  } else if (experiment == "c5") {
    c.rewards = {RewardKind::kR3};
  } else if (experiment == "c6") {
    c.rewards = {RewardKind::kR7};
  } else {
    c.n_pipelines = 20;
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& experiment) {
  std::string id = experiment;
  if (j.contains("experiment")) {
    const std::string in_file = j.at("experiment").get<std::string>();
    if (!id.empty() && id != in_file) {
      throw InvalidArgument("config is for experiment " + in_file + ", not " + id);
    }
    id = in_file;
  }
  static const std::vector<std::string> kIds = {"c1", "c2", "c3", "c4", "c5", "c6"};
  if (std::find(kIds.begin(), kIds.end(), id) == kIds.end()) {
    throw InvalidArgument("unknown experiment '" + id + "' (expected c1..c6)");
  }
  ExperimentConfig c = defaults(id);
  try {
    if (j.contains("data_dir")) c.data_dir = j["data_dir"];
    if (j.contains("datasets")) c.datasets = j["datasets"].get<std::vector<std::string>>();
    if (j.contains("format")) c.format = j["format"];
    if (j.contains("label_column")) c.label_column = j["label_column"].get<std::string>();
    if (j.contains("profiles")) {
      c.profiles.clear();
      for (const auto& p : j["profiles"]) {
        c.profiles.push_back({parse_error_kind(p.at("type")), p.at("rate").get<int>()});
      }
    }
    if (j.contains("suite")) c.suite = j["suite"];
    if (j.contains("rewards")) {
      c.rewards.clear();
      for (const auto& r : j["rewards"]) c.rewards.push_back(parse_reward_kind(r));
    }
    if (j.contains("n_pipelines")) c.n_pipelines = j["n_pipelines"];
    if (j.contains("seed")) c.seed = j["seed"];
    if (j.contains("evaluator")) c.evaluator = j["evaluator"];
    if (j.contains("evaluator_command")) {
      c.evaluator_command = j["evaluator_command"].get<std::vector<std::string>>();
    }
    if (j.contains("threads")) c.threads = j["threads"];
    if (j.contains("rl")) {
      const auto& r = j["rl"];
      c.rl.enabled = r.value("enabled", c.rl.enabled);
      c.rl.steps = r.value("steps", c.rl.steps);
      c.rl.finetune_steps = r.value("finetune_steps", c.rl.finetune_steps);
      c.rl.ppo.hidden = r.value("hidden", c.rl.ppo.hidden);
      c.rl.ppo.learning_rate = r.value("learning_rate", c.rl.ppo.learning_rate);
      c.rl.ppo.rollout = r.value("rollout", c.rl.ppo.rollout);
    }
    if (j.contains("transfer")) {
      const auto& t = j["transfer"];
      c.transfer.source = t.value("source", c.transfer.source);
      if (t.contains("targets")) c.transfer.targets = t["targets"].get<std::vector<std::string>>();
      c.transfer.steps = t.value("steps", c.transfer.steps);
      c.transfer.checkpoint_step = t.value("checkpoint_step", c.transfer.checkpoint_step);
      c.transfer.curve_every = t.value("curve_every", c.transfer.curve_every);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad experiment config: ") + e.what());
  }
  if (c.datasets.empty() && id != "c6") throw InvalidArgument("experiment config lists no datasets");
  if (c.transfer.curve_every == 0) throw InvalidArgument("transfer.curve_every must be positive");
  ActionSuite::by_name(c.suite);
  return c;
}

json ExperimentConfig::to_json() const {
  json profs = json::array();
  for (const auto& p : profiles) profs.push_back({{"type", error_kind_tag(p.kind)}, {"rate", p.rate_percent}});
  json rws = json::array();
  for (RewardKind r : rewards) rws.push_back(reward_name(r));
  json j = {{"experiment", experiment},
            {"data_dir", data_dir},
            {"datasets", datasets},
            {"format", format},
            {"profiles", profs},
            {"suite", suite},
            {"rewards", rws},
            {"n_pipelines", n_pipelines},
            {"seed", seed},
            {"evaluator", evaluator},
            {"evaluator_command", evaluator_command},
            {"threads", threads},
            {"rl",
             {{"enabled", rl.enabled},
              {"steps", rl.steps},
              {"finetune_steps", rl.finetune_steps},
              {"hidden", rl.ppo.hidden},
              {"learning_rate", rl.ppo.learning_rate},
              {"rollout", rl.ppo.rollout}}},
            {"transfer",
             {{"source", transfer.source},
              {"targets", transfer.targets},
              {"steps", transfer.steps},
              {"checkpoint_step", transfer.checkpoint_step},
              {"curve_every", transfer.curve_every}}}};
  if (label_column) j["label_column"] = *label_column;
  return j;
}

std::filesystem::path resolve_artifact(const ExperimentConfig& config, const std::string& dataset,
                                       const InjectionSpec& spec) {
  const std::string stem = cell_name(dataset, spec);
  const std::filesystem::path dir(config.data_dir);
  std::vector<std::string> exts;
  if (config.format == "auto") {
    exts = {".parquet", ".csv"};
  } else if (config.format == "csv" || config.format == "parquet") {
    exts = {"." + config.format};
  } else {
    throw InvalidArgument("unknown dataset format '" + config.format + "'");
  }
  for (const auto& ext : exts) {
    const auto path = dir / (stem + ext);
    if (std::filesystem::exists(path)) return path;
  }
  throw IoError("missing dataset artifact " + stem + " (looked for " + (dir / stem).string() +
                (exts.size() > 1 ? ".parquet and .csv" : exts.front()) + ")");
}

ReportBundle run_experiment(const ExperimentConfig& config) {
  ReportBundle b;
  b.experiment = config.experiment;
  b.config = config.to_json();
  Runtime rt(config);
  if (config.experiment == "c1") {
    run_c1(rt, b);
  } else if (config.experiment == "c2") {
    run_c2(rt, b);
  } else if (config.experiment == "c3") {
    run_c3(rt, b);
  } else if (config.experiment == "c4") {
    run_c4(rt, b);
  } else if (config.experiment == "c5") {
    run_c5(rt, b);
  } else if (config.experiment == "c6") {
    run_c6(rt, b);
  } else {
    throw InvalidArgument("unknown experiment '" + config.experiment + "'");
  }
  b.summary["experiment"] = config.experiment;
  b.summary["evaluator_calls"] = rt.hub.evaluator_calls();
  return b;
}

std::string emit_plot_data(const ReportBundle& bundle, const std::string& kind) {
  const auto& headers = plot_headers();
  auto h = headers.find(kind);
  if (h == headers.end()) {
    throw InvalidArgument("unknown plot kind '" + kind + "' (heatmap, sensitivity, transfer, scatter)");
  }
  Csv csv(h->second);
  for (const auto& [k, rows] : bundle.plots) {
    if (k != kind) continue;
    for (const auto& r : rows) csv.row(r);
  }
  return csv.str();
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw IoError("cannot write " + (dir / name).string());
    os << text;
  };
  for (const auto& [name, text] : bundle.files) write(name, text);
  for (const auto& [kind, rows] : bundle.plots) write("plot_" + kind + ".csv", emit_plot_data(bundle, kind));
  write("summary.json", bundle.summary.dump(2) + "\n");
  write("config.json", bundle.config.dump(2) + "\n");
}

}  // namespace priorclean
