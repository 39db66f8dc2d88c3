#include "priorclean/actions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

#include <boost/math/distributions/normal.hpp>

#include "priorclean/error.hpp"
#include "priorclean/rng.hpp"
#include "priorclean/sampling.hpp"
#include "priorclean/stats.hpp"

namespace priorclean {

namespace {

std::string fmt_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", t);
  // Keep off-grid thresholds (e.g. 1.25) exact.
  if (std::stod(buf) != t) std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::kImputer: return "imputer";
    case Family::kOutlier: return "outlier";
    case Family::kScaler: return "scaler";
    case Family::kDedup: return "dedup";
  }
  return "?";
}

Action::Action(Params params) : params_(std::move(params)) {
  std::visit(Overloaded{
                 [](const ImputeParams& p) {
                   if (p.strategy == ImputeStrategy::kKnn && (p.k < 1 || p.k > 20)) {
                     throw InvalidArgument("KNN k must lie in [1, 20], got " +
                                           std::to_string(p.k));
                   }
                 },
                 [](const OutlierParams& p) {
                   if (!(p.threshold >= 0.5 && p.threshold <= 5.0)) {
                     throw InvalidArgument("outlier threshold must lie in [0.5, 5.0], got " +
                                           fmt_threshold(p.threshold));
                   }
                 },
                 [](const ScaleParams&) {}, [](const DedupParams&) {}},
             params_);
}

Family Action::family() const {
  switch (params_.index()) {
    case 0: return Family::kImputer;
    case 1: return Family::kOutlier;
    case 2: return Family::kScaler;
    default: return Family::kDedup;
  }
}

std::string Action::canonical() const {
  return std::visit(
      Overloaded{
          [](const ImputeParams& p) -> std::string {
            switch (p.strategy) {
              case ImputeStrategy::kMean: return "impute(mean)";
              case ImputeStrategy::kMedian: return "impute(median)";
              case ImputeStrategy::kKnn: return "impute(knn,k=" + std::to_string(p.k) + ")";
            }
            return "";
          },
          [](const OutlierParams& p) -> std::string {
            return std::string("outlier(") +
                   (p.method == OutlierMethod::kIqr ? "iqr" : "zscore") +
                   ",t=" + fmt_threshold(p.threshold) + ")";
          },
          [](const ScaleParams& p) -> std::string {
            switch (p.method) {
              case ScaleMethod::kMinMax: return "scale(minmax)";
              case ScaleMethod::kZscore: return "scale(zscore)";
              case ScaleMethod::kQuantile:
                return std::string("scale(quantile,out=") +
                       (p.output == QuantileOutput::kUniform ? "uniform" : "normal") + ")";
            }
            return "";
          },
          [](const DedupParams&) -> std::string { return "dedup"; }},
      params_);
}

Action Action::parse(const std::string& text) {
  auto bad = [&] { return InvalidArgument("cannot parse action '" + text + "'"); };
  if (text == "dedup") return dedup();
  const size_t open = text.find('(');
  if (open == std::string::npos || text.back() != ')') throw bad();
  const std::string name = text.substr(0, open);
  std::vector<std::string> args;
  std::string inner = text.substr(open + 1, text.size() - open - 2);
  size_t start = 0;
  while (start <= inner.size()) {
    size_t comma = inner.find(',', start);
    if (comma == std::string::npos) comma = inner.size();
    args.push_back(inner.substr(start, comma - start));
    start = comma + 1;
  }
  auto kv = [&](size_t i, const std::string& key) -> std::string {
    if (i >= args.size()) throw bad();
    const std::string prefix = key + "=";
    if (args[i].rfind(prefix, 0) != 0) throw bad();
    return args[i].substr(prefix.size());
  };
  try {
    if (name == "impute") {
      if (args[0] == "mean" && args.size() == 1) return impute_mean();
      if (args[0] == "median" && args.size() == 1) return impute_median();
      if (args[0] == "knn") return impute_knn(args.size() > 1 ? std::stoi(kv(1, "k")) : 5);
    } else if (name == "outlier") {
      if (args[0] == "iqr") return outlier_iqr(args.size() > 1 ? std::stod(kv(1, "t")) : 1.5);
      if (args[0] == "zscore") {
        return outlier_zscore(args.size() > 1 ? std::stod(kv(1, "t")) : 3.0);
      }
    } else if (name == "scale") {
      if (args[0] == "minmax" && args.size() == 1) return scale_minmax();
      if (args[0] == "zscore" && args.size() == 1) return scale_zscore();
      if (args[0] == "quantile") {
        std::string out = args.size() > 1 ? kv(1, "out") : "uniform";
        if (out == "uniform") return scale_quantile(QuantileOutput::kUniform);
        if (out == "normal") return scale_quantile(QuantileOutput::kNormal);
      }
    }
  } catch (const std::logic_error&) {
    throw bad();
  }
  throw bad();
}

std::string Pipeline::canonical() const {
  if (steps.empty()) return "noop";
  std::string out;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (i) out += "->";
    out += steps[i].canonical();
  }
  return out;
}

Pipeline Pipeline::parse(const std::string& text) {
  Pipeline p;
  if (text == "noop" || text.empty()) return p;
  size_t start = 0;
  while (true) {
    size_t arrow = text.find("->", start);
    p.steps.push_back(Action::parse(text.substr(start, arrow - start)));
    if (arrow == std::string::npos) break;
    start = arrow + 2;
  }
  p.validate();
  return p;
}

void Pipeline::validate() const {
  if (steps.size() > 3) throw InvalidArgument("pipelines have at most 3 steps");
  for (size_t i = 0; i < steps.size(); ++i) {
    for (size_t j = i + 1; j < steps.size(); ++j) {
      if (steps[i].family() == steps[j].family()) {
        throw InvalidArgument("pipeline repeats the " + family_name(steps[i].family()) +
                              " family: " + canonical());
      }
    }
  }
}

bool canonical_less(const Pipeline& a, const Pipeline& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.canonical() < b.canonical();
}

ActionSuite ActionSuite::discrete7() {
  return {"discrete7",
          {Action::impute_mean(), Action::impute_median(), Action::impute_knn(5),
           Action::outlier_iqr(1.5), Action::outlier_zscore(3.0), Action::scale_minmax(),
           Action::scale_zscore()}};
}

ActionSuite ActionSuite::extended9() {
  ActionSuite s = discrete7();
  s.name = "extended9";
  s.actions.push_back(Action::scale_quantile(QuantileOutput::kUniform));
  s.actions.push_back(Action::dedup());
  return s;
}

ActionSuite ActionSuite::param17() {
  ActionSuite s{"param17", {Action::impute_mean(), Action::impute_median()}};
  for (int k : {3, 5, 7, 10}) s.actions.push_back(Action::impute_knn(k));
  for (double t : {1.0, 1.5, 2.0, 2.5, 3.0}) s.actions.push_back(Action::outlier_iqr(t));
  for (double t : {2.0, 2.5, 3.0, 3.5}) s.actions.push_back(Action::outlier_zscore(t));
  s.actions.push_back(Action::scale_minmax());
  s.actions.push_back(Action::scale_zscore());
  return s;
}

ActionSuite ActionSuite::by_name(const std::string& name) {
  if (name == "discrete7") return discrete7();
  if (name == "extended9") return extended9();
  if (name == "param17") return param17();
  throw InvalidArgument("unknown action suite '" + name +
                        "' (discrete7, extended9, param17)");
}

// ---------------------------------------------------------------------------
// Operators.

namespace {

double column_mode(const Column& c) {
  std::map<double, size_t> counts;
  for (size_t i = 0; i < c.size(); ++i) {
    if (!c.is_missing(i)) ++counts[c.values[i]];
  }
  double best = 0.0;
  size_t best_count = 0;
  for (const auto& [v, n] : counts) {
    if (n > best_count) {
      best = v;
      best_count = n;
    }
  }
  return best;
}

void fill_column(Column& c, double value) {
  for (size_t i = 0; i < c.size(); ++i) {
    if (c.missing[i]) {
      c.values[i] = value;
      c.missing[i] = 0;
    }
  }
}

Table impute(const Table& t, const ImputeParams& p, const std::string& tag) {
  std::vector<Column> cols = t.columns();
  std::vector<std::string> warnings;
  std::vector<size_t> knn_columns;
  for (Column& c : cols) {
    const size_t missing = c.missing_count();
    if (missing == 0) continue;
    if (missing == c.size()) {
      warnings.push_back(tag + ": column '" + c.name + "' is entirely missing; left as is");
      continue;
    }
    if (!c.is_numeric()) {
      fill_column(c, column_mode(c));
    } else if (p.strategy == ImputeStrategy::kMean) {
      fill_column(c, mean(c.observed()));
    } else if (p.strategy == ImputeStrategy::kMedian) {
      fill_column(c, median(c.observed()));
    }
  }
  if (p.strategy == ImputeStrategy::kKnn) {
    std::vector<size_t> numeric;
    std::vector<double> mu;
    std::vector<double> sd;
    for (size_t j = 0; j < cols.size(); ++j) {
      const Column& c = cols[j];
      if (!c.is_numeric() || c.missing_count() == c.size()) continue;
      Moments m = moments(c.observed());
      numeric.push_back(j);
      mu.push_back(m.mean);
      sd.push_back(m.sd > 0.0 ? m.sd : 1.0);
    }
    std::vector<size_t> complete;
    std::vector<size_t> incomplete;
    for (size_t i = 0; i < t.n_rows(); ++i) {
      bool ok = true;
      for (size_t j : numeric) ok = ok && !cols[j].missing[i];
      (ok ? complete : incomplete).push_back(i);
    }
    if (complete.empty() && !incomplete.empty()) {
      warnings.push_back(tag + ": no complete rows; fell back to column means");
    }
    const size_t k = std::min(static_cast<size_t>(p.k), complete.size());
    // Imputed values are computed from the pre-imputation table.
    std::vector<Column> src = cols;
    std::vector<std::pair<double, size_t>> dist(complete.size());
    for (size_t i : incomplete) {
      for (size_t c = 0; c < complete.size(); ++c) {
        const size_t r = complete[c];
        double d2 = 0.0;
        for (size_t q = 0; q < numeric.size(); ++q) {
          const Column& col = src[numeric[q]];
          if (col.missing[i]) continue;
          const double z = (col.values[i] - col.values[r]) / sd[q];
          d2 += z * z;
        }
        dist[c] = {d2, r};
      }
      if (k > 0) {
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                          dist.end());
      }
      for (size_t q = 0; q < numeric.size(); ++q) {
        Column& col = cols[numeric[q]];
        if (!col.missing[i]) continue;
        double v = mu[q];
        if (k > 0) {
          double s = 0.0;
          for (size_t n = 0; n < k; ++n) s += src[numeric[q]].values[dist[n].second];
          v = s / static_cast<double>(k);
        }
        col.values[i] = v;
        col.missing[i] = 0;
      }
    }
  }
  Table out = t.with_columns(std::move(cols), tag);
  for (const std::string& w : warnings) out = out.with_warning(w);
  return out;
}

ActionOutcome remove_outliers(const Table& t, const OutlierParams& p, const std::string& tag,
                              const ApplyOptions& options) {
  std::vector<uint8_t> flagged(t.n_rows(), 0);
  for (size_t j : t.numeric_columns()) {
    const Column& c = t.column(j);
    std::vector<double> obs = c.observed();
    if (obs.empty()) continue;
    double lo;
    double hi;
    if (p.method == OutlierMethod::kIqr) {
      std::sort(obs.begin(), obs.end());
      const double q1 = quantile_sorted(obs, 0.25);
      const double q3 = quantile_sorted(obs, 0.75);
      const double iqr = q3 - q1;
      lo = q1 - p.threshold * iqr;
      hi = q3 + p.threshold * iqr;
    } else {
      Moments m = moments(obs);
      if (m.sd <= 0.0) continue;
      lo = m.mean - p.threshold * m.sd;
      hi = m.mean + p.threshold * m.sd;
      // |z| > t evaluated directly below to avoid fence rounding.
      for (size_t i = 0; i < c.size(); ++i) {
        if (!c.is_missing(i) && std::fabs(c.values[i] - m.mean) / m.sd > p.threshold) {
          flagged[i] = 1;
        }
      }
      continue;
    }
    for (size_t i = 0; i < c.size(); ++i) {
      if (!c.is_missing(i) && (c.values[i] < lo || c.values[i] > hi)) flagged[i] = 1;
    }
  }
  std::vector<size_t> keep;
  for (size_t i = 0; i < t.n_rows(); ++i) {
    if (!flagged[i]) keep.push_back(i);
  }
  if (keep.size() == t.n_rows()) return {t.with_transform(tag), false};
  if (keep.size() < options.min_rows) {
    return {t.with_transform(tag + "[guard: would keep " + std::to_string(keep.size()) +
                             " < " + std::to_string(options.min_rows) + " rows; skipped]"),
            true};
  }
  return {t.select_rows(keep, tag), false};
}

Table scale(const Table& t, const ScaleParams& p, const std::string& tag) {
  std::vector<Column> cols = t.columns();
  for (Column& c : cols) {
    if (!c.is_numeric()) continue;
    std::vector<double> obs = c.observed();
    if (obs.empty()) continue;
    if (p.method == ScaleMethod::kMinMax) {
      const auto [lo, hi] = std::minmax_element(obs.begin(), obs.end());
      const double range = *hi - *lo;
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.missing[i]) continue;
        c.values[i] = range > 0.0 ? (c.values[i] - *lo) / range : 0.0;
      }
    } else if (p.method == ScaleMethod::kZscore) {
      Moments m = moments(obs);
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.missing[i]) continue;
        c.values[i] = m.sd > 0.0 ? (c.values[i] - m.mean) / m.sd : 0.0;
      }
    } else {
      const std::vector<double> ranks = midranks(obs);
      const double n = static_cast<double>(obs.size());
      const boost::math::normal_distribution<double> normal;
      size_t k = 0;
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.missing[i]) continue;
        const double u = (ranks[k++] - 0.5) / n;
        c.values[i] = p.output == QuantileOutput::kUniform ? u : boost::math::quantile(normal, u);
      }
    }
  }
  return t.with_columns(std::move(cols), tag);
}

Table dedup(const Table& t, const std::string& tag) {
  std::unordered_set<uint64_t> seen;
  std::vector<size_t> keep;
  for (size_t i = 0; i < t.n_rows(); ++i) {
    if (seen.insert(row_fingerprint(t, i)).second) keep.push_back(i);
  }
  if (keep.size() == t.n_rows()) return t.with_transform(tag);
  return t.select_rows(keep, tag);
}

}  // namespace

ActionOutcome run_action(const Table& t, const Action& a, const ApplyOptions& options) {
  const std::string tag = a.canonical();
  return std::visit(
      Overloaded{
          [&](const ImputeParams& p) { return ActionOutcome{impute(t, p, tag), false}; },
          [&](const OutlierParams& p) { return remove_outliers(t, p, tag, options); },
          [&](const ScaleParams& p) { return ActionOutcome{scale(t, p, tag), false}; },
          [&](const DedupParams&) { return ActionOutcome{dedup(t, tag), false}; }},
      a.params());
}

Table apply_action(const Table& t, const Action& a, const ApplyOptions& options) {
  return run_action(t, a, options).table;
}

Table apply_pipeline(const Table& t, const Pipeline& p, const ApplyOptions& options) {
  p.validate();
  Table out = t;
  for (const Action& a : p.steps) out = apply_action(out, a, options);
  return out;
}

std::vector<Pipeline> enumerate_pipelines(const ActionSuite& suite, size_t max_len) {
  std::vector<Pipeline> out;
  std::vector<size_t> idx;
  const size_t n = suite.actions.size();
  // Depth-first over index sequences of a fixed length yields lexicographic
  // order within the length tier.
  auto recurse = [&](auto& self, size_t len) -> void {
    if (idx.size() == len) {
      Pipeline p;
      for (size_t i : idx) p.steps.push_back(suite.actions[i]);
      out.push_back(std::move(p));
      return;
    }
    for (size_t a = 0; a < n; ++a) {
      bool clash = false;
      for (size_t i : idx) clash = clash || suite.actions[i].family() == suite.actions[a].family();
      if (clash) continue;
      idx.push_back(a);
      self(self, len);
      idx.pop_back();
    }
  };
  for (size_t len = 0; len <= max_len; ++len) recurse(recurse, len);
  return out;
}

size_t pipeline_count(const ActionSuite& suite) {
  std::map<Family, size_t> sizes;
  for (const Action& a : suite.actions) ++sizes[a.family()];
  std::vector<size_t> s;
  for (const auto& [f, n] : sizes) s.push_back(n);
  size_t total = 1;
  for (size_t i = 0; i < s.size(); ++i) {
    total += s[i];
    for (size_t j = 0; j < s.size(); ++j) {
      if (j != i) total += s[i] * s[j];
    }
    for (size_t j = i + 1; j < s.size(); ++j) {
      for (size_t k = j + 1; k < s.size(); ++k) total += 6 * s[i] * s[j] * s[k];
    }
  }
  return total;
}

std::vector<Pipeline> subsample_pipelines(const std::vector<Pipeline>& pool, size_t budget,
                                          uint64_t seed) {
  std::vector<size_t> mandatory;
  std::vector<size_t> tier2;
  std::vector<size_t> tier3;
  for (size_t i = 0; i < pool.size(); ++i) {
    switch (pool[i].size()) {
      case 0:
      case 1: mandatory.push_back(i); break;
      case 2: tier2.push_back(i); break;
      default: tier3.push_back(i); break;
    }
  }
  if (budget < mandatory.size()) {
    throw InvalidArgument("pipeline budget " + std::to_string(budget) +
                          " is below the mandatory no-op + single-step set; minimum feasible "
                          "N_p is " + std::to_string(mandatory.size()));
  }
  if (budget > pool.size()) {
    throw InvalidArgument("pipeline budget " + std::to_string(budget) + " exceeds pool size " +
                          std::to_string(pool.size()));
  }
  const std::vector<size_t> quota =
      proportional_allocation({tier2.size(), tier3.size()}, budget - mandatory.size());
  Rng rng(derive_seed(seed, "subsample_pipelines"));
  std::vector<size_t> chosen = mandatory;
  for (size_t pick : rng.sample_without_replacement(tier2.size(), quota[0])) {
    chosen.push_back(tier2[pick]);
  }
  for (size_t pick : rng.sample_without_replacement(tier3.size(), quota[1])) {
    chosen.push_back(tier3[pick]);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Pipeline> out;
  out.reserve(chosen.size());
  for (size_t i : chosen) out.push_back(pool[i]);
  return out;
}

}  // namespace priorclean
