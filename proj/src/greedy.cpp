#include "priorclean/greedy.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "priorclean/error.hpp"
#include "priorclean/io.hpp"

namespace priorclean {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <typename F>
void parallel_for(size_t n, size_t threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

BaselineRow evaluate_baseline(SearchSession& s, const std::string& name,
                              const std::vector<Pipeline>& pipelines) {
  BaselineRow row;
  row.name = name;
  for (size_t k = 0; k < pipelines.size(); ++k) {
    if (k) row.pipeline += " | ";
    row.pipeline += pipelines[k].canonical();
  }
  try {
    for (const Pipeline& p : pipelines) {
      auto cleaned = s.cache().get(s.dirty(), s.dirty_fingerprint(), p);
      auto r = s.hub().evaluate(cleaned->table, cleaned->fingerprint, EvalProtocol::kBaseline);
      row.accuracy += r->accuracy;
      row.ece += r->ece;
    }
    row.accuracy /= static_cast<double>(pipelines.size());
    row.ece /= static_cast<double>(pipelines.size());
  } catch (const Error& e) {
    row = BaselineRow{name, row.pipeline, 0.0, 0.0, true, e.what()};
  }
  return row;
}

}  // namespace

SearchSession::SearchSession(Table dirty, EvaluationHub& hub, CleaningCache& cache)
    : dirty_(std::move(dirty)),
      dirty_fp_(table_fingerprint(dirty_)),
      hub_(hub),
      cache_(cache),
      ctx_(RewardContext::make(dirty_, &hub)) {}

Pipeline baseline_pipeline(const std::string& name) {
  if (name == "B1") return Pipeline{{Action::impute_mean(), Action::scale_minmax()}};
  if (name == "B2") return Pipeline{{Action::impute_mean(), Action::scale_zscore()}};
  throw InvalidArgument("no fixed pipeline for baseline " + name);
}

SearchReport greedy_search(SearchSession& session, const std::vector<Pipeline>& pipelines,
                           RewardKind kind, const SearchOptions& options) {
  if (pipelines.empty()) throw InvalidArgument("greedy search needs at least one pipeline");
  SearchReport report;
  report.kind = kind;
  const size_t calls_before = session.hub().evaluator_calls();
  if (options.baselines) {
    report.baselines.push_back(evaluate_baseline(session, "B0", {Pipeline{}}));
    report.baselines.push_back(evaluate_baseline(session, "B1", {baseline_pipeline("B1")}));
  }
  report.scores.resize(pipelines.size());
  parallel_for(pipelines.size(), options.threads, [&](size_t i) {
    PipelineScore& s = report.scores[i];
    s.pipeline = pipelines[i];
    s.canonical = pipelines[i].canonical();
    try {
      auto cleaned = session.cache().get(session.dirty(), session.dirty_fingerprint(), s.pipeline);
      s.n_rows = cleaned->table.n_rows();
      s.guard_triggered = cleaned->guard_triggered;
      auto eval =
          session.hub().evaluate(cleaned->table, cleaned->fingerprint, EvalProtocol::kReward);
      s.accuracy = eval->accuracy;
      s.ece = eval->ece;
      RewardValue r = compute_reward(kind, cleaned->table, cleaned->fingerprint, session.context());
      s.reward = r.value;
      s.raw_reward = r.raw;
    } catch (const Error& e) {
      if (!e.user_error() && dynamic_cast<const EvaluatorError*>(&e) == nullptr) throw;
      s.failed = true;
      s.error = e.what();
    }
  });
  for (size_t i = 0; i < report.scores.size(); ++i) {
    const PipelineScore& s = report.scores[i];
    if (s.failed) {
      ++report.failures;
      continue;
    }
    if (!report.best) {
      report.best = i;
      continue;
    }
    const PipelineScore& b = report.scores[*report.best];
    if (s.reward > b.reward || (s.reward == b.reward && canonical_less(s.pipeline, b.pipeline))) {
      report.best = i;
    }
  }
  if (report.best) report.best_score = report.scores[*report.best].reward;
  report.evaluator_calls = session.hub().evaluator_calls() - calls_before;
  return report;
}

std::vector<BaselineRow> run_baselines(SearchSession& session) {
  return {
      evaluate_baseline(session, "B0", {Pipeline{}}),
      evaluate_baseline(session, "B1", {baseline_pipeline("B1")}),
      evaluate_baseline(session, "B2", {baseline_pipeline("B2")}),
      evaluate_baseline(session, "B3",
                        {Pipeline{{Action::impute_mean()}}, Pipeline{{Action::impute_median()}},
                         Pipeline{{Action::scale_minmax()}}}),
  };
}

TaxonomyReport rank_rewards(SearchSession& session, const std::vector<Pipeline>& pipelines,
                            const std::vector<RewardKind>& rewards, const SearchOptions& options) {
  TaxonomyReport report;
  report.rewards = rewards;
  const size_t before = session.hub().evaluator_calls();
  SearchOptions o = options;
  for (RewardKind kind : rewards) {
    report.searches.push_back(greedy_search(session, pipelines, kind, o));
  }
  report.evaluator_calls = session.hub().evaluator_calls() - before;
  return report;
}

std::string taxonomy_csv(const TaxonomyReport& report, const std::string& dataset) {
  std::ostringstream os;
  os << "dataset,reward,pipeline,length,score,raw,accuracy,ece,n_rows,status\n";
  for (const SearchReport& s : report.searches) {
    for (size_t i = 0; i < s.scores.size(); ++i) {
      const PipelineScore& p = s.scores[i];
      os << csv_escape(dataset) << ',' << reward_name(s.kind) << ',' << csv_escape(p.canonical)
         << ',' << p.pipeline.size() << ',';
      if (p.failed) {
        os << ",,,,," << "failed\n";
        continue;
      }
      os << num(p.reward) << ',' << num(p.raw_reward) << ',' << num(p.accuracy) << ','
         << num(p.ece) << ',' << p.n_rows << ',' << (s.best == i ? "best" : "ok") << '\n';
    }
  }
  return os.str();
}

std::string scatter_csv(const TaxonomyReport& report, const std::string& dataset) {
  std::ostringstream os;
  os << "dataset,reward,pipeline,score,accuracy\n";
  for (const SearchReport& s : report.searches) {
    for (const PipelineScore& p : s.scores) {
      if (p.failed) continue;
      os << csv_escape(dataset) << ',' << reward_name(s.kind) << ',' << csv_escape(p.canonical)
         << ',' << num(p.reward) << ',' << num(p.accuracy) << '\n';
    }
  }
  return os.str();
}

}  // namespace priorclean
