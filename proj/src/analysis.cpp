#include "priorclean/analysis.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>

#include "priorclean/error.hpp"
#include "priorclean/stats.hpp"

namespace priorclean {

std::string alternative_name(Alternative a) {
  switch (a) {
    case Alternative::kTwoSided: return "two-sided";
    case Alternative::kGreater: return "greater";
    case Alternative::kLess: return "less";
  }
  return "?";
}

Alternative parse_alternative(const std::string& s) {
  if (s == "two-sided") return Alternative::kTwoSided;
  if (s == "greater") return Alternative::kGreater;
  if (s == "less") return Alternative::kLess;
  throw InvalidArgument("unknown alternative '" + s + "' (two-sided, greater, less)");
}

namespace {

// P(W+ <= w) under the null, where W+ sums the ranks given a positive sign.
// Ranks are doubled so mid-ranks become integers.
double exact_lower_tail(const std::vector<double>& ranks, double w) {
  std::vector<size_t> doubled;
  size_t total = 0;
  for (double r : ranks) {
    doubled.push_back(static_cast<size_t>(std::lround(2.0 * r)));
    total += doubled.back();
  }
  std::vector<double> count(total + 1, 0.0);
  count[0] = 1.0;
  size_t reach = 0;
  for (size_t r : doubled) {
    for (size_t s = reach + 1; s-- > 0;) {
      if (count[s] != 0.0) count[s + r] += count[s];
    }
    reach += r;
  }
  const auto limit = static_cast<long>(std::floor(2.0 * w + 1e-9));
  double below = 0.0;
  for (long s = 0; s <= std::min<long>(limit, static_cast<long>(total)); ++s) {
    below += count[static_cast<size_t>(s)];
  }
  return below / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

double normal_lower_tail(const std::vector<double>& ranks, double w) {
  const double n = static_cast<double>(ranks.size());
  const double mu = n * (n + 1.0) / 4.0;
  double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  std::map<double, size_t> ties;
  for (double r : ranks) ++ties[r];
  for (const auto& [r, t] : ties) {
    const double tt = static_cast<double>(t);
    var -= (tt * tt * tt - tt) / 48.0;
  }
  if (var <= 0.0) return 1.0;
  const double z = (w - mu + 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

}  // namespace

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                Alternative alternative) {
  if (x.size() != y.size()) throw InvalidArgument("wilcoxon: samples differ in length");
  if (x.empty()) throw InvalidArgument("wilcoxon: empty samples");
  std::vector<double> d;
  for (size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] - y[i];
    if (!std::isfinite(v)) throw InvalidArgument("wilcoxon: non-finite difference");
    if (v != 0.0) d.push_back(v);
  }
  TestResult r;
  r.alternative = alternative;
  r.n_effective = d.size();
  if (d.empty()) {
    r.degenerate = true;
    r.method = "exact";
    return r;
  }
  std::vector<double> absd(d.size());
  for (size_t i = 0; i < d.size(); ++i) absd[i] = std::fabs(d[i]);
  const std::vector<double> ranks = midranks(absd);
  double w_plus = 0.0;
  double w_minus = 0.0;
  for (size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? w_plus : w_minus) += ranks[i];

  const bool exact = d.size() <= 25;
  r.method = exact ? "exact" : "normal-approx";
  auto tail = [&](double w) {
    return exact ? exact_lower_tail(ranks, w) : normal_lower_tail(ranks, w);
  };
  switch (alternative) {
    case Alternative::kTwoSided:
      r.statistic = std::min(w_plus, w_minus);
      r.p_value = std::min(1.0, 2.0 * tail(r.statistic));
      break;
    case Alternative::kGreater:
      r.statistic = w_minus;
      r.p_value = std::min(1.0, tail(w_minus));
      break;
    case Alternative::kLess:
      r.statistic = w_plus;
      r.p_value = std::min(1.0, tail(w_plus));
      break;
  }
  return r;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman: samples differ in length");
  if (x.size() < 3) throw InvalidArgument("spearman needs at least 3 pairs");
  SpearmanResult r;
  r.n = x.size();
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  r.rho = pearson(rx, ry);
  if (!std::isfinite(r.rho)) {
    r.undefined = true;
    r.rho = std::nan("");
    r.p_value = std::nan("");
    return r;
  }
  const double df = static_cast<double>(r.n) - 2.0;
  if (std::fabs(r.rho) >= 1.0 - 1e-15) {
    r.p_value = 0.0;
    return r;
  }
  const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
  boost::math::students_t dist(df);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
  return r;
}

std::vector<double> rolling_mean(std::span<const double> values, size_t window) {
  std::vector<double> out;
  out.reserve(values.size());
  double sum = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

std::optional<size_t> detect_convergence(const std::vector<std::pair<size_t, double>>& log,
                                         size_t window, size_t span, double tol) {
  if (log.size() < window || window == 0) return std::nullopt;
  std::vector<double> values;
  for (const auto& e : log) values.push_back(e.second);
  const std::vector<double> roll = rolling_mean(values, window);
  const size_t first = window - 1;  // first index with a full window
  for (size_t i = first; i < log.size(); ++i) {
    const size_t step = log[i].first;
    if (step < log[first].first + span) continue;
    const size_t from = step - span;
    // The value in effect at `from` is the last entry at or before it.
    size_t j = i;
    while (j > first && log[j].first > from) --j;
    double lo = roll[j];
    double hi = roll[j];
    for (size_t k = j; k <= i; ++k) {
      lo = std::min(lo, roll[k]);
      hi = std::max(hi, roll[k]);
    }
    if (hi - lo < tol) return step;
  }
  return std::nullopt;
}

}  // namespace priorclean
