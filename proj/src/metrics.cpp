#include "priorclean/metrics.hpp"

#include <cmath>

#include "priorclean/error.hpp"

namespace priorclean {

size_t argmax(std::span<const double> probs) {
  size_t best = 0;
  for (size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return best;
}

double accuracy(const ProbabilityRows& probs, std::span<const int32_t> labels) {
  if (probs.size() != labels.size()) {
    throw InvalidArgument("accuracy: " + std::to_string(probs.size()) +
                          " probability rows for " + std::to_string(labels.size()) + " labels");
  }
  if (probs.empty()) return 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (static_cast<int32_t>(argmax(probs[i])) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

double expected_calibration_error(const ProbabilityRows& probs,
                                  std::span<const int32_t> labels, size_t bins) {
  if (bins == 0) throw InvalidArgument("ECE needs at least one bin");
  if (probs.empty()) throw InvalidArgument("ECE of an empty prediction set");
  if (probs.size() != labels.size()) {
    throw InvalidArgument("ECE: " + std::to_string(probs.size()) + " probability rows for " +
                          std::to_string(labels.size()) + " labels");
  }
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> correct(bins, 0.0);
  std::vector<size_t> count(bins, 0);
  const double nb = static_cast<double>(bins);
  for (size_t i = 0; i < probs.size(); ++i) {
    const size_t pred = argmax(probs[i]);
    const double conf = probs[i][pred];
    size_t b = static_cast<size_t>(std::max(0.0, std::floor(conf * nb)));
    if (b >= bins) b = bins - 1;
    // Align with the edges b / bins as computed in double precision.
    while (b > 0 && conf < static_cast<double>(b) / nb) --b;
    while (b + 1 < bins && conf >= static_cast<double>(b + 1) / nb) ++b;
    conf_sum[b] += conf;
    correct[b] += static_cast<int32_t>(pred) == labels[i] ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(probs.size());
  double ece = 0.0;
  for (size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nbk = static_cast<double>(count[b]);
    ece += (nbk / n) * std::fabs(correct[b] / nbk - conf_sum[b] / nbk);
  }
  return ece;
}

}  // namespace priorclean
