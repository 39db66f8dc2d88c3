#ifndef PRIORCLEAN_METRICS_HPP_
#define PRIORCLEAN_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace priorclean {

using ProbabilityRows = std::vector<std::vector<double>>;

// Index of the largest probability; ties resolve to the lowest index.
size_t argmax(std::span<const double> probs);

double accuracy(const ProbabilityRows& probs, std::span<const int32_t> labels);

// Expected calibration error over `bins` equal-width bins of the predicted
// class probability. Bin b covers [b/bins, (b+1)/bins); the last bin is
// closed. Empty bins contribute nothing.
double expected_calibration_error(const ProbabilityRows& probs,
                                  std::span<const int32_t> labels, size_t bins = 10);

}  // namespace priorclean

#endif  // PRIORCLEAN_METRICS_HPP_
