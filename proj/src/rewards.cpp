#include "priorclean/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "priorclean/error.hpp"
#include "priorclean/stats.hpp"

namespace priorclean {

namespace {

double clip1(double v) { return std::clamp(v, -1.0, 1.0); }

struct KindInfo {
  RewardKind kind;
  const char* name;
  const char* alias;
};

constexpr KindInfo kKinds[] = {
    {RewardKind::kR1, "R1", "completeness"},   {RewardKind::kR2, "R2", "accuracy"},
    {RewardKind::kR3, "R3", "multiobjective"}, {RewardKind::kR4, "R4", "driftpenalty"},
    {RewardKind::kR5, "R5", "incremental"},    {RewardKind::kR6, "R6", "distortion"},
    {RewardKind::kR7, "R7", "tfmaware"},       {RewardKind::kR6ad, "R6ad", "distortion+accuracy"},
};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double completeness(const Table& t) {
  const size_t cells = t.feature_cells();
  if (cells == 0) return 1.0;
  return 1.0 - static_cast<double>(t.missing_cells()) / static_cast<double>(cells);
}

}  // namespace

std::string reward_name(RewardKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

std::string reward_alias(RewardKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.alias;
  }
  return "?";
}

RewardKind parse_reward_kind(const std::string& s) {
  const std::string l = lower(s);
  for (const auto& k : kKinds) {
    if (l == lower(k.name) || l == k.alias) return k.kind;
  }
  throw InvalidArgument("unknown reward '" + s + "' (expected R1..R7, R6ad or an alias)");
}

std::vector<RewardKind> core_rewards() {
  return {RewardKind::kR1, RewardKind::kR2, RewardKind::kR3, RewardKind::kR4,
          RewardKind::kR5, RewardKind::kR6, RewardKind::kR7};
}

bool reward_uses_forest(RewardKind kind) {
  return kind == RewardKind::kR2 || kind == RewardKind::kR3 || kind == RewardKind::kR4 ||
         kind == RewardKind::kR5 || kind == RewardKind::kR6ad;
}

bool reward_uses_evaluator(RewardKind kind) { return kind == RewardKind::kR7; }

double duplicate_rate(const Table& t) {
  if (t.n_rows() == 0) return 0.0;
  return static_cast<double>(duplicate_row_count(t)) / static_cast<double>(t.n_rows());
}

double quality_score(const Table& t) { return completeness(t) * (1.0 - duplicate_rate(t)); }

double js_divergence(std::span<const double> a, std::span<const double> b, size_t bins) {
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : std::log(2.0);
  double lo = a[0];
  double hi = a[0];
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(hi > lo)) return 0.0;
  auto hist = [&](std::span<const double> x) {
    std::vector<double> h(bins, 0.0);
    for (double v : x) {
      auto k = static_cast<size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
      h[std::min(k, bins - 1)] += 1.0;
    }
    for (double& c : h) c /= static_cast<double>(x.size());
    return h;
  };
  const auto p = hist(a);
  const auto q = hist(b);
  double js = 0.0;
  for (size_t k = 0; k < bins; ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0) js += 0.5 * p[k] * std::log(p[k] / m);
    if (q[k] > 0) js += 0.5 * q[k] * std::log(q[k] / m);
  }
  return std::max(js, 0.0);
}

std::vector<double> correlation_matrix(const Table& t, const std::vector<size_t>& cols) {
  const size_t p = cols.size();
  std::vector<double> corr(p * p, 0.0);
  std::vector<double> x;
  std::vector<double> y;
  for (size_t a = 0; a < p; ++a) {
    corr[a * p + a] = 1.0;
    const Column& ca = t.column(cols[a]);
    for (size_t b = a + 1; b < p; ++b) {
      const Column& cb = t.column(cols[b]);
      x.clear();
      y.clear();
      for (size_t i = 0; i < t.n_rows(); ++i) {
        if (ca.missing[i] || cb.missing[i]) continue;
        x.push_back(ca.values[i]);
        y.push_back(cb.values[i]);
      }
      double r = x.size() >= 2 ? pearson(x, y) : 0.0;
      if (!std::isfinite(r)) r = 0.0;
      corr[a * p + b] = corr[b * p + a] = r;
    }
  }
  return corr;
}

RewardContext RewardContext::make(const Table& reference, EvaluationHub* hub) {
  RewardContext ctx;
  ctx.reference = reference;
  ctx.profile = reset_reference(reference);
  ctx.n0 = reference.n_rows();
  ctx.hub = hub;
  ctx.numeric = reference.numeric_columns();
  for (size_t j : ctx.numeric) {
    const auto obs = reference.column(j).observed();
    ctx.ref_var.push_back(obs.size() >= 2 ? moments(obs).variance : 0.0);
  }
  ctx.ref_corr = correlation_matrix(reference, ctx.numeric);
  double s = 0.0;
  for (double v : ctx.ref_corr) s += v * v;
  ctx.ref_corr_norm = std::sqrt(s);
  ctx.ref_skew = mean_abs_skewness(reference);
  return ctx;
}

double Distortion::weighted() const {
  return 0.30 * w1 + 0.25 * js + 0.20 * corr + 0.15 * logvar + 0.10 * skew;
}

Distortion distortion(const Table& t, const RewardContext& ctx) {
  Distortion d;
  d.w1 = wasserstein1_normalized(t, ctx.profile) / kDriftCap;
  const size_t p = ctx.numeric.size();
  if (p == 0) return d;
  if (t.n_cols() != ctx.reference.n_cols()) {
    throw SchemaError("cleaned table does not match the reference columns");
  }
  double js = 0.0;
  double logvar = 0.0;
  for (size_t k = 0; k < p; ++k) {
    const size_t j = ctx.numeric[k];
    const auto cur = t.column(j).observed();
    js += js_divergence(cur, ctx.profile.sorted[j]) / std::log(2.0);
    const double v = cur.size() >= 2 ? moments(cur).variance : 0.0;
    const double v0 = ctx.ref_var[k];
    double term = 0.0;
    if (v > 0.0 && v0 > 0.0) {
      term = std::min(1.0, std::fabs(std::log(v / v0)));
    } else if ((v > 0.0) != (v0 > 0.0)) {
      term = 1.0;
    }
    logvar += term;
  }
  d.js = std::min(1.0, js / static_cast<double>(p));
  d.logvar = logvar / static_cast<double>(p);
  const auto corr = correlation_matrix(t, ctx.numeric);
  double diff = 0.0;
  for (size_t k = 0; k < corr.size(); ++k) {
    const double e = corr[k] - ctx.ref_corr[k];
    diff += e * e;
  }
  d.corr = ctx.ref_corr_norm > 0.0 ? std::min(1.0, std::sqrt(diff) / ctx.ref_corr_norm) : 0.0;
  d.skew = std::min(1.0, std::fabs(mean_abs_skewness(t) - ctx.ref_skew) / (1.0 + ctx.ref_skew));
  return d;
}

RewardValue compute_reward(RewardKind kind, const Table& t, const RewardContext& ctx) {
  return compute_reward(kind, t, table_fingerprint(t), ctx);
}

RewardValue compute_reward(RewardKind kind, const Table& t, const Digest& fp,
                           const RewardContext& ctx) {
  RewardValue out;
  if (t.n_rows() == 0) {
    out.value = out.raw = -1.0;
    return out;
  }
  if (ctx.n0 == 0) throw InvalidArgument("reward context has an empty reference table");
  auto need_hub = [&] {
    if (!ctx.hub) throw InvalidArgument("reward " + reward_name(kind) + " needs an evaluator");
    return ctx.hub;
  };
  const double retention = static_cast<double>(t.n_rows()) / static_cast<double>(ctx.n0);
  auto r3 = [&] {
    const double acc = need_hub()->rf_accuracy(t, fp);
    return 0.50 * acc + 0.30 * retention + 0.20 * quality_score(t) -
           0.10 * wasserstein1_normalized(t, ctx.profile);
  };
  double raw = 0.0;
  switch (kind) {
    case RewardKind::kR1:
      raw = completeness(t) * std::sqrt(retention);
      break;
    case RewardKind::kR2:
      raw = need_hub()->rf_accuracy(t, fp);
      break;
    case RewardKind::kR3:
      raw = r3();
      break;
    case RewardKind::kR4: {
      const double acc = need_hub()->rf_accuracy(t, fp);
      raw = 0.70 * acc + 0.20 * retention + 0.10 * quality_score(t) -
            0.50 * wasserstein1_normalized(t, ctx.profile);
      break;
    }
    case RewardKind::kR5: {
      const double now = r3();
      double prev;
      if (ctx.prev_r3) {
        prev = *ctx.prev_r3;
      } else {
        prev = compute_reward(RewardKind::kR3, ctx.reference, ctx).raw;
      }
      raw = 5.0 * (now - prev);
      out.r3 = now;
      break;
    }
    case RewardKind::kR6:
      raw = 1.0 - distortion(t, ctx).weighted();
      break;
    case RewardKind::kR6ad:
      raw = 0.5 * need_hub()->rf_accuracy(t, fp) + 0.5 * (1.0 - distortion(t, ctx).weighted());
      break;
    case RewardKind::kR7: {
      const double acc = need_hub()->evaluate(t, fp, EvalProtocol::kReward)->accuracy;
      raw = 0.50 * acc + 0.35 * retention * retention + 0.15 * quality_score(t) -
            0.05 * wasserstein1_normalized(t, ctx.profile);
      break;
    }
  }
  if (!std::isfinite(raw)) {
    throw NumericalError("reward " + reward_name(kind) + " is not finite");
  }
  out.raw = raw;
  out.value = clip1(raw);
  return out;
}

}  // namespace priorclean
