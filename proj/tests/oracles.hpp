// Slow, direct reference computations shared by the unit tests and the
// acceptance binary.
#ifndef PRIORCLEAN_TEST_ORACLES_HPP_
#define PRIORCLEAN_TEST_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

// W1 as the integral of |F^-1(u) - G^-1(u)| on the uniform grid of
// lcm(n, m) cells, on which both quantile functions are constant.
inline double w1_quantile_grid(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const uint64_t n = a.size(), m = b.size();
  const uint64_t cells = std::lcm(n, m);
  double total = 0.0;
  for (uint64_t k = 0; k < cells; ++k) {
    total += std::fabs(a[k * n / cells] - b[k * m / cells]);
  }
  return total / static_cast<double>(cells);
}

// W1 as the integral of |F(x) - G(x)| over x.
inline double w1_cdf(std::vector<double> a, std::vector<double> b) {
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (size_t i = 0; i + 1 < all.size(); ++i) {
    const double x = all[i];
    const double fa = double(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / double(a.size());
    const double fb = double(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / double(b.size());
    total += std::fabs(fa - fb) * (all[i + 1] - x);
  }
  return total;
}

// ECE computed one bin at a time. Confidence is the top probability (first
// index on ties); bin b holds [b/B, (b+1)/B) and the last bin is closed.
inline double ece(const std::vector<std::vector<double>>& probs, const std::vector<int32_t>& labels,
                  size_t bins = 10) {
  const double n = static_cast<double>(probs.size());
  double total = 0.0;
  for (size_t b = 0; b < bins; ++b) {
    const double lo = double(b) / double(bins);
    const double hi = double(b + 1) / double(bins);
    double count = 0, correct = 0, conf_sum = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
      size_t best = 0;
      for (size_t k = 1; k < probs[i].size(); ++k) {
        if (probs[i][k] > probs[i][best]) best = k;
      }
      const double c = probs[i][best];
      const bool in = (b + 1 == bins) ? (c >= lo && c <= hi) : (c >= lo && c < hi);
      if (!in) continue;
      count += 1;
      conf_sum += c;
      correct += (static_cast<int32_t>(best) == labels[i]) ? 1 : 0;
    }
    if (count > 0) total += count / n * std::fabs(correct / count - conf_sum / count);
  }
  return total;
}

// Mid-ranks of |d| for nonzero differences.
inline std::vector<double> abs_midranks(const std::vector<double>& d) {
  std::vector<size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return std::fabs(d[i]) < std::fabs(d[j]); });
  std::vector<double> r(d.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && std::fabs(d[idx[j + 1]]) == std::fabs(d[idx[i]])) ++j;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = (double(i) + double(j)) / 2.0 + 1.0;
    i = j + 1;
  }
  return r;
}

struct Wilcoxon {
  double w_plus = 0, w_minus = 0;
  size_t n = 0;
  double p_two_sided = 1, p_greater = 1, p_less = 1;
};

// Exact signed-rank test by visiting all 2^n sign patterns of the ranks.
inline Wilcoxon wilcoxon_brute(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> d;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  Wilcoxon out;
  out.n = d.size();
  if (d.empty()) return out;
  const std::vector<double> r = abs_midranks(d);
  for (size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? out.w_plus : out.w_minus) += r[i];
  const double stat = std::min(out.w_plus, out.w_minus);
  const uint64_t total = uint64_t{1} << d.size();
  uint64_t le_min = 0, le_minus = 0, le_plus = 0;
  for (uint64_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (size_t i = 0; i < d.size(); ++i) {
      if (mask >> i & 1) w += r[i];
    }
    le_min += (w <= stat + 1e-9);
    le_minus += (w <= out.w_minus + 1e-9);
    le_plus += (w <= out.w_plus + 1e-9);
  }
  out.p_two_sided = std::min(1.0, 2.0 * double(le_min) / double(total));
  out.p_greater = double(le_minus) / double(total);
  out.p_less = double(le_plus) / double(total);
  return out;
}

}  // namespace oracle

#endif  // PRIORCLEAN_TEST_ORACLES_HPP_
