#ifndef PRIORCLEAN_SYNTH_HPP_
#define PRIORCLEAN_SYNTH_HPP_

#include <cstddef>
#include <cstdint>

#include "priorclean/table.hpp"

namespace priorclean {

struct BlobSpec {
  size_t rows = 200;
  size_t numeric = 4;
  size_t categorical = 0;  // extra categorical columns with 3 levels
  size_t classes = 2;
  double separation = 3.0;  // distance between class centers, in sd units
  uint64_t seed = 42;
};

// Gaussian class blobs: class k centers at separation * k on every numeric
// feature (alternating sign by column), unit noise, classes of near-equal
// size in round-robin order. Categorical columns depend on the class with
// probability 0.7. Label column "class" with classes c0, c1, ...
Table make_blobs(const BlobSpec& spec);

}  // namespace priorclean

#endif  // PRIORCLEAN_SYNTH_HPP_
