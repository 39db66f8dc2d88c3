// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//   acceptance [--only <prefix>]

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "priorclean/actions.hpp"
#include "priorclean/agent.hpp"
#include "priorclean/analysis.hpp"
#include "priorclean/cache.hpp"
#include "priorclean/env.hpp"
#include "priorclean/evaluator.hpp"
#include "priorclean/greedy.hpp"
#include "priorclean/inject.hpp"
#include "priorclean/metrics.hpp"
#include "priorclean/observer.hpp"
#include "priorclean/rewards.hpp"
#include "priorclean/synth.hpp"
#include "test_util.hpp"

using namespace priorclean;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

Table blob_table(size_t rows, size_t numeric, size_t categorical, size_t classes, double sep,
                 uint64_t seed) {
  BlobSpec s;
  s.rows = rows;
  s.numeric = numeric;
  s.categorical = categorical;
  s.classes = classes;
  s.separation = sep;
  s.seed = seed;
  return make_blobs(s);
}

bool has_imputer(const Pipeline& p) {
  for (const auto& a : p.steps) {
    if (a.family() == Family::kImputer) return true;
  }
  return false;
}

Verdict enumeration() {
  Verdict v;
  const std::pair<const char*, size_t> cases[] = {{"discrete7", 112}, {"extended9", 302}, {"param17", 834}};
  std::ostringstream got;
  for (const auto& [suite, want] : cases) {
    const ActionSuite s = ActionSuite::by_name(suite);
    const size_t n = enumerate_pipelines(s).size();
    got << suite << "=" << n << " ";
    v.require(n == want && pipeline_count(s) == want, std::string(suite) + " count " + std::to_string(n));
  }
  if (v.ok) v.detail = got.str();
  return v;
}

Verdict cache_accounting() {
  Verdict v;
  CountingMockEvaluator mock;
  EvaluationHub hub(mock);
  CleaningCache cache;
  SearchSession s(inject_mcar(inject_outliers(testutil::blobs(200, 4, 7, 1.5), 0.05, 3), 0.15, 42), hub, cache);
  const auto pool = subsample_pipelines(enumerate_pipelines(ActionSuite::discrete7()), 20, 42);
  const SearchReport a = greedy_search(s, pool, RewardKind::kR7);
  const SearchReport b = greedy_search(s, pool, RewardKind::kR3);
  v.require(pool.size() == 20, "pool size " + std::to_string(pool.size()));
  v.require(a.evaluator_calls == 22 && mock.calls() == 22, "first pass calls " + std::to_string(mock.calls()));
  v.require(b.evaluator_calls == 0 && mock.calls() == 22, "second pass calls " + std::to_string(b.evaluator_calls));
  if (v.ok) v.detail = "calls 22 then 0";
  return v;
}

Verdict reward_collapse() {
  Verdict v;
  const std::vector<Table> tables = {
      inject_mcar(blob_table(150, 4, 0, 2, 3.0, 9), 0.15, 42),
      inject_mcar(blob_table(200, 5, 1, 3, 2.0, 17), 0.15, 7),
      inject_mcar(inject_outliers(blob_table(120, 3, 0, 2, 1.5, 23), 0.05, 1), 0.15, 3),
  };
  const auto pool = enumerate_pipelines(ActionSuite::discrete7());
  size_t r1_checked = 0;
  for (size_t ti = 0; ti < tables.size(); ++ti) {
    ReferenceForestEvaluator ref;
    EvaluationHub hub(ref);
    CleaningCache cache;
    SearchSession s(tables[ti], hub, cache);
    const SearchReport r1 = greedy_search(s, pool, RewardKind::kR1);
    for (const auto& sc : r1.scores) {
      if (!has_imputer(sc.pipeline) || sc.n_rows != tables[ti].n_rows()) continue;
      ++r1_checked;
      v.require(sc.reward == 1.0, "R1 of " + sc.canonical + " is " + std::to_string(sc.reward));
    }
    const SearchReport r6 = greedy_search(s, pool, RewardKind::kR6);
    v.require(r6.winner() && r6.winner()->canonical == "noop", "R6 argmax over full pool is not noop");
    Rng rng(ti + 1);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Pipeline> subset = subsample_pipelines(pool, 8 + rng.uniform_index(30), rng.next());
      const SearchReport sub = greedy_search(s, subset, RewardKind::kR6);
      v.require(sub.winner() && sub.winner()->canonical == "noop", "R6 argmax over a subset is not noop");
    }

    EnvConfig cfg;
    cfg.reward = RewardKind::kR5;
    CleaningEnv env(tables[ti], cfg, hub);
    std::mt19937_64 g(ti);
    for (int ep = 0; ep < 20; ++ep) {
      env.reset();
      const double r3_initial = compute_reward(RewardKind::kR3, env.table(), env.context()).raw;
      double sum = 0.0;
      for (size_t t = 0; t < cfg.horizon; ++t) {
        const StepOutcome o = env.step(g() % env.num_actions());
        if (!o.penalized) sum += o.raw_reward / 5.0;
      }
      const RewardContext fresh = RewardContext::make(env.context().reference, &hub);
      const double r3_final = compute_reward(RewardKind::kR3, env.table(), fresh).raw;
      v.require(std::fabs(sum - (r3_final - r3_initial)) <= 1e-9,
                "R5 telescoping off by " + std::to_string(std::fabs(sum - (r3_final - r3_initial))));
    }
  }
  if (v.ok) v.detail = std::to_string(r1_checked) + " R1 pipelines at 1.0, R6 picks noop, R5 telescopes";
  return v;
}

Verdict wasserstein() {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 200);
  std::normal_distribution<double> g(0, 1);
  double worst = 0;
  for (int pair = 0; pair < 100; ++pair) {
    std::vector<double> a(size(rng)), b(size(rng));
    const double scale = 0.5 + 3.0 * (pair % 5), shift = 0.1 * (pair % 11);
    for (double& x : a) x = g(rng);
    for (double& x : b) x = scale * g(rng) + shift;
    const double grid = oracle::w1_quantile_grid(a, b);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    worst = std::max(worst, std::fabs(wasserstein1_sorted(a, b) - grid));
  }
  v.require(worst <= 1e-6, "max deviation " + std::to_string(worst));

  Table t = testutil::blobs(200, 3);
  const ReferenceProfile ref = reset_reference(t);
  std::vector<Column> cols = t.columns();
  for (double& x : cols[1].values) x += 10.0 * ref.sd[1];
  const std::vector<double> d = column_drifts(t.with_columns(cols, "shift"), ref);
  v.require(d[1] == kDriftCap && kDriftCap == 5.0, "+10 sd shift drift " + std::to_string(d[1]));
  v.require(d[0] == 0.0 && d[2] == 0.0, "unshifted columns drift");
  if (v.ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |W1 - oracle| = %.2e, +10 sd shift capped at 5", worst);
    v.detail = buf;
  }
  return v;
}

Verdict ece() {
  Verdict v;
  std::mt19937_64 rng(77);
  double worst = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const size_t n = 1 + rng() % 100, k = 2 + rng() % 4;
    ProbabilityRows probs(n, std::vector<double>(k));
    std::vector<int32_t> labels(n);
    std::gamma_distribution<double> gam(0.5 + inst % 3, 1.0);
    for (size_t i = 0; i < n; ++i) {
      double z = 0;
      for (double& p : probs[i]) z += (p = gam(rng) + 1e-12);
      for (double& p : probs[i]) p /= z;
      labels[i] = static_cast<int32_t>(rng() % k);
    }
    // Exact bin edges: one-hot rows land in the closed last bin.
    if (inst % 10 == 0) {
      for (auto& row : probs) {
        std::fill(row.begin(), row.end(), 0.0);
        row[rng() % k] = 1.0;
      }
    }
    worst = std::max(worst, std::fabs(expected_calibration_error(probs, labels, 10) - oracle::ece(probs, labels, 10)));
  }
  v.require(worst <= 1e-12, "max deviation " + std::to_string(worst));
  if (v.ok) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "max |ECE - oracle| = %.2e", worst);
    v.detail = buf;
  }
  return v;
}

Verdict wilcoxon() {
  Verdict v;
  auto rounded = [](double p) { return std::round(p * 1e4) / 1e4; };
  // n = 10 with one negative difference of rank 1: W = 1.
  std::vector<double> x10, y10;
  for (int i = 1; i <= 10; ++i) {
    x10.push_back(i == 1 ? 0.0 : double(i));
    y10.push_back(i == 1 ? 1.0 : 0.0);
  }
  const TestResult a = wilcoxon_signed_rank(x10, y10);
  v.require(a.method == "exact" && a.statistic == 1.0 && rounded(a.p_value) == 0.0039,
            "n=10 W=1 gives p " + std::to_string(a.p_value));
  // n = 9, all differences positive: W = 0.
  std::vector<double> x9, y9;
  for (int i = 1; i <= 9; ++i) {
    x9.push_back(0.1 * i + 1.0);
    y9.push_back(1.0);
  }
  const TestResult b = wilcoxon_signed_rank(x9, y9);
  v.require(b.method == "exact" && b.statistic == 0.0 && rounded(b.p_value) == 0.0039,
            "n=9 W=0 gives p " + std::to_string(b.p_value));

  std::mt19937_64 rng(12);
  size_t cases = 0;
  for (size_t n = 1; n <= 12; ++n) {
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<double> x(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        // Integer grid: ties in |d| and zero differences both occur.
        x[i] = double(rng() % 7);
        y[i] = double(rng() % 7) + (trial % 2 ? 0.5 : 0.0);
      }
      const oracle::Wilcoxon o = oracle::wilcoxon_brute(x, y);
      if (o.n == 0) continue;
      ++cases;
      const TestResult two = wilcoxon_signed_rank(x, y, Alternative::kTwoSided);
      const TestResult gt = wilcoxon_signed_rank(x, y, Alternative::kGreater);
      const TestResult lt = wilcoxon_signed_rank(x, y, Alternative::kLess);
      const bool agree = std::fabs(two.p_value - o.p_two_sided) < 1e-12 &&
                         std::fabs(gt.p_value - o.p_greater) < 1e-12 &&
                         std::fabs(lt.p_value - o.p_less) < 1e-12 &&
                         two.statistic == std::min(o.w_plus, o.w_minus);
      v.require(agree, "brute-force disagreement at n=" + std::to_string(n));
    }
  }
  if (v.ok) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "p=%.4f (n=10,W=1), p=%.4f (n=9,W=0), %zu brute-force cases agree", a.p_value,
                  b.p_value, cases);
    v.detail = buf;
  }
  return v;
}

Verdict mdp_guards() {
  Verdict v;
  struct Case {
    Table table;
    RewardKind reward;
    std::string suite;
  };
  std::vector<Case> cases = {
      {inject_mcar(inject_outliers(testutil::blobs(40, 3), 0.3, 2), 0.15, 1), RewardKind::kR4, "discrete7"},
      {inject_outliers(testutil::blobs(14, 2, 3), 0.4, 5), RewardKind::kR3, "param17"},
      {inject_duplicates(inject_mcar(testutil::blobs(120, 4), 0.2, 4), 0.1, 6), RewardKind::kR7, "extended9"},
      {inject_mcar(testutil::blobs(80, 3, 11), 0.15, 8), RewardKind::kR2, "extended9"},
      {inject_mcar(testutil::blobs(60, 2, 13), 0.3, 9), RewardKind::kR6, "discrete7"},
  };
  std::mt19937_64 rng(99);
  size_t episodes = 0, penalties = 0, guards = 0;
  double lo = 0, hi = 0;
  for (size_t ci = 0; ci < cases.size(); ++ci) {
    CountingMockEvaluator mock;
    EvaluationHub hub(mock);
    EnvConfig cfg;
    cfg.reward = cases[ci].reward;
    cfg.suite = cases[ci].suite;
    CleaningEnv env(cases[ci].table, cfg, hub);
    for (int ep = 0; ep < 200; ++ep, ++episodes) {
      env.reset();
      std::vector<double> rewards;
      for (size_t t = 0; t < cfg.horizon; ++t) {
        const Digest before = table_fingerprint(env.table());
        const size_t rows_before = env.table().n_rows();
        const StepOutcome o = env.step(rng() % env.num_actions());
        rewards.push_back(o.reward);
        if (o.penalized) {
          ++penalties;
          v.require(o.reward == cfg.repeat_penalty, "penalty reward " + std::to_string(o.reward));
          v.require(table_fingerprint(env.table()) == before, "penalized step changed the table");
        }
        if (o.guard_triggered) ++guards;
        v.require(env.table().n_rows() >= cfg.min_rows || env.table().n_rows() == rows_before,
                  "rows fell to " + std::to_string(env.table().n_rows()));
        v.require(o.reward >= -1.0 && o.reward <= 1.0, "step reward out of [-1, 1]");
      }
      double sum = 0;
      for (double r : rewards) sum += r;
      const double disc = episode_return(rewards, cfg.gamma);
      lo = std::min({lo, sum, disc});
      hi = std::max({hi, sum, disc});
      v.require(sum >= -6.0 && sum <= 6.0 && disc >= -6.0 && disc <= 6.0, "episode return out of [-6, 6]");
    }
  }
  v.require(penalties > 0, "no repeated-family step was exercised");
  v.require(guards > 0, "the row guard never triggered");
  if (v.ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu episodes, %zu penalties, %zu row guards, returns in [%.3f, %.3f]", episodes,
                  penalties, guards, lo, hi);
    v.detail = buf;
  }
  return v;
}

Verdict learning() {
  Verdict v;
  ReferenceForestEvaluator ref;
  EvaluationHub hub(ref);
  EnvConfig cfg;
  cfg.reward = RewardKind::kR3;
  const Table source = inject_mcar(blob_table(200, 4, 0, 2, 4.0, 101), 0.15, 42);
  const Table target = inject_mcar(blob_table(240, 5, 0, 2, 4.0, 202), 0.15, 43);
  PpoConfig ppo;

  CleaningEnv rand_env(source, cfg, hub);
  const double random_mean = random_policy_mean(rand_env, 500, 7);
  CleaningEnv src_env(source, cfg, hub);
  const TrainResult trained = train_ppo(src_env, ppo, 3000);
  const double final_mean = trained.log.final_mean(100);
  v.require(final_mean > random_mean, "final mean " + std::to_string(final_mean) + " <= random mean " +
                                          std::to_string(random_mean));

  CleaningEnv scratch_env(target, cfg, hub);
  const TrainResult scratch = train_ppo(scratch_env, ppo, 2000);
  const std::optional<double> scratch_2k = scratch.log.rolling_at(2000);
  v.require(scratch_2k.has_value(), "scratch run has no rolling mean at 2000 steps");
  CleaningEnv ft_env(target, cfg, hub);
  const TrainResult ft = fine_tune(trained.checkpoint, ft_env, 2000);
  const size_t reach = scratch_2k ? ft.log.first_step_reaching(*scratch_2k).value_or(SIZE_MAX) : SIZE_MAX;
  v.require(reach <= 2000, "fine-tuning did not reach the scratch 2000-step rolling mean");
  if (v.ok) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "final-100 mean %.4f > random %.4f; fine-tune reaches scratch@2K %.4f at step %zu", final_mean,
                  random_mean, *scratch_2k, reach);
    v.detail = buf;
  }
  return v;
}

int shell(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Verdict determinism() {
  Verdict v;
  testutil::TempDir dir;
  const std::string cli = PRIORCLEAN_CLI;
  const fs::path data = dir / "data";
  v.require(shell("sh " + std::string(PRIORCLEAN_SOURCE_DIR) + "/tools/make_demo_data.sh " + cli + " " +
                  data.string()) == 0,
            "demo data generation failed");
  size_t compared = 0;
  for (int c = 1; c <= 6 && v.ok; ++c) {
    const std::string id = "c" + std::to_string(c);
    json cfg = json::parse(testutil::slurp(fs::path(PRIORCLEAN_SOURCE_DIR) / "configs" / (id + ".json")));
    cfg["data_dir"] = data.string();
    cfg["evaluator"] = "reference";
    cfg["seed"] = 42;
    const fs::path cfg_path = dir / (id + ".json");
    testutil::spit(cfg_path, cfg.dump(2));
    for (const char* run : {"run1", "run2"}) {
      const fs::path out = dir / run / id;
      v.require(shell(cli + " experiment " + id + " --config " + cfg_path.string() + " --out " + out.string()) == 0,
                id + " " + run + " failed");
    }
    if (!v.ok) break;
    size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(dir / "run1" / id)) {
      if (e.path().extension() != ".csv") continue;
      ++csvs;
      const fs::path twin = dir / "run2" / id / e.path().filename();
      v.require(fs::exists(twin) && testutil::slurp(e.path()) == testutil::slurp(twin),
                id + "/" + e.path().filename().string() + " differs between runs");
    }
    v.require(csvs > 0, id + " wrote no CSV reports");
    compared += csvs;
  }
  if (v.ok) v.detail = std::to_string(compared) + " CSV reports byte-identical across c1..c6";
  return v;
}

Verdict sidecar_protocol() {
  Verdict v;
  ExternalOptions o;
  o.command = {FAKE_SIDECAR};
  ExternalTfmEvaluator ev(o);
  Rng rng(5);
  size_t rows_checked = 0;
  try {
    for (int i = 0; i < 1000 && v.ok; ++i) {
      const size_t classes = 2 + rng.uniform_index(3);
      Table t = testutil::blobs((20 + rng.uniform_index(40)) * classes, 1 + rng.uniform_index(5), rng.next(), 2.0,
                                classes);
      if (i % 3 == 0) t = inject_mcar(t, 0.2, rng.next());
      std::vector<size_t> tr, te;
      for (size_t r = 0; r < t.n_rows(); ++r) (r % 4 ? tr : te).push_back(r);
      const Table test = t.select_rows(te, "");
      const EvaluationResult r = ev.evaluate(t.select_rows(tr, ""), test);
      v.require(r.probs.size() == test.n_rows(), "row count mismatch");
      for (const auto& row : r.probs) {
        double s = 0;
        for (double p : row) s += p;
        v.require(std::fabs(s - 1.0) <= 1e-6, "row sums to " + std::to_string(s));
        ++rows_checked;
      }
    }
    ExternalTfmEvaluator ev2(o);
    EvaluationHub hub(ev2);
    CleaningCache cache;
    SearchSession s(inject_mcar(inject_outliers(testutil::blobs(200, 4, 7, 1.5), 0.05, 3), 0.15, 42), hub, cache);
    const auto pool = subsample_pipelines(enumerate_pipelines(ActionSuite::discrete7()), 20, 42);
    const SearchReport a = greedy_search(s, pool, RewardKind::kR7);
    const SearchReport b = greedy_search(s, pool, RewardKind::kR7);
    v.require(a.evaluator_calls == 22 && b.evaluator_calls == 0 && ev2.requests_sent() == 22,
              "sidecar greedy made " + std::to_string(ev2.requests_sent()) + " calls");
  } catch (const std::exception& e) {
    v.require(false, e.what());
  }
  if (v.ok) v.detail = "1000 requests, " + std::to_string(rows_checked) + " rows, greedy calls 22 then 0";
  return v;
}

struct Criterion {
  std::string name;
  double budget_s;  // 0 = no runtime bound
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") only = argv[i + 1];
  }
  const std::vector<Criterion> criteria = {
      {"enumeration-exactness", 1, enumeration},
      {"cache-accounting", 1, cache_accounting},
      {"reward-collapse", 30, reward_collapse},
      {"w1-oracle-equivalence", 10, wasserstein},
      {"ece-brute-force", 0, ece},
      {"exact-wilcoxon", 0, wilcoxon},
      {"mdp-guards", 60, mdp_guards},
      {"learning-smoke", 900, learning},
      {"cli-determinism", 0, determinism},
      {"sidecar-protocol (secondary)", 0, sidecar_protocol},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && c.name.rfind(only, 0) != 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.ok && c.budget_s > 0 && secs >= c.budget_s) {
      v.ok = false;
      v.detail = "over the " + std::to_string(int(c.budget_s)) + "s budget";
    }
    failed += v.ok ? 0 : 1;
    std::printf("%s  %-30s %8.2fs  %s\n", v.ok ? "PASS" : "FAIL", c.name.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
