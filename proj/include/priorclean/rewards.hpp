#ifndef PRIORCLEAN_REWARDS_HPP_
#define PRIORCLEAN_REWARDS_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "priorclean/cache.hpp"
#include "priorclean/observer.hpp"
#include "priorclean/table.hpp"

namespace priorclean {

// R1..R7 plus R6ad, an extra accuracy-plus-distortion mix
// 0.5 * Acc_RF + 0.5 * R6.
enum class RewardKind { kR1, kR2, kR3, kR4, kR5, kR6, kR7, kR6ad };

std::string reward_name(RewardKind kind);   // "R1" ... "R7", "R6ad"
std::string reward_alias(RewardKind kind);  // completeness ... tfmaware
// Accepts names and aliases, case-insensitive.
RewardKind parse_reward_kind(const std::string& s);
// R1..R7, without R6ad.
std::vector<RewardKind> core_rewards();
bool reward_uses_forest(RewardKind kind);
bool reward_uses_evaluator(RewardKind kind);

// (1 - r_miss) * (1 - r_dup).
double quality_score(const Table& t);
// (n_rows - distinct row fingerprints) / n_rows; 0 for an empty table.
double duplicate_rate(const Table& t);

// Jensen-Shannon divergence (natural log) between histograms of two samples
// over `bins` equal-width bins spanning their shared range.
double js_divergence(std::span<const double> a, std::span<const double> b, size_t bins = 50);

// Reference-table state every reward is measured against.
struct RewardContext {
  Table reference;
  ReferenceProfile profile;
  size_t n0 = 0;
  EvaluationHub* hub = nullptr;
  // R3 of the previous step; unset means R3 of the reference table.
  std::optional<double> prev_r3;

  // Cached reference statistics for the distortion components.
  std::vector<size_t> numeric;
  std::vector<double> ref_var;
  std::vector<double> ref_corr;  // row-major, |numeric| x |numeric|
  double ref_corr_norm = 0.0;
  double ref_skew = 0.0;

  static RewardContext make(const Table& reference, EvaluationHub* hub);
};

struct Distortion {
  double w1 = 0.0;
  double js = 0.0;
  double corr = 0.0;
  double logvar = 0.0;
  double skew = 0.0;

  // 0.30 w1 + 0.25 js + 0.20 corr + 0.15 logvar + 0.10 skew.
  double weighted() const;
};

// Each component in [0, 1]: drift / 5, mean JS / ln 2, relative Frobenius
// correlation shift, mean per-column |log variance ratio| (each capped at 1),
// and the relative shift of mean |skewness|.
Distortion distortion(const Table& t, const RewardContext& ctx);

// Pearson correlation matrix of the given columns over pairwise-complete
// rows; undefined entries (constant columns) are 0 off the diagonal.
std::vector<double> correlation_matrix(const Table& t, const std::vector<size_t>& cols);

struct RewardValue {
  double value = 0.0;  // clipped to [-1, 1]
  double raw = 0.0;    // before clipping
  std::optional<double> r3;  // R3 of `t`, set for R5
};

// Scores a cleaned table. Classifier results come through ctx.hub; failures
// propagate as exceptions. A table with no rows scores -1.
RewardValue compute_reward(RewardKind kind, const Table& t, const RewardContext& ctx);
RewardValue compute_reward(RewardKind kind, const Table& t, const Digest& fp,
                           const RewardContext& ctx);

}  // namespace priorclean

#endif  // PRIORCLEAN_REWARDS_HPP_
