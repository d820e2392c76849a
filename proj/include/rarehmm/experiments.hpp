#pragma once

#include "rarehmm/entropy.hpp"
#include "rarehmm/model.hpp"
#include "rarehmm/reconstruction.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rarehmm {

// Binary entropy -q log q - (1-q) log(1-q) in nats; 0 at both endpoints.
double binary_entropy(double q);

// Closed-form entropy-rate bounds for the symmetric binary chain observed
// through a binary symmetric channel with crossover eps:
//   g(eps) - (1-2eps)^2 * q * log(q) / (1-eps) <= h(Y) <= g(q) + g(eps)
// where q is the per-step flip probability. Nats.
struct BscBounds {
  double lower = 0.0;
  double upper = 0.0;
};
BscBounds bsc_entropy_bounds(double q, double eps);

/// Detects the symmetric-binary special case and reports its flip
/// probability (p times the off-diagonal rate) and crossover.
struct BscShape {
  bool applicable = false;
  double flip_probability = 0.0;
  double crossover = 0.0;
};
BscShape detect_bsc_shape(const GeneratorMatrix& gen, const Channel& channel,
                          double p);

/// One p-value's worth of sweep results.
struct SweepRow {
  double p = 0.0;
  std::int64_t n = 0;
  int reps = 0;
  std::int64_t block_len = 0;  // L
  std::int64_t margin = 0;     // K
  double h_markov = 0.0;
  double h_chan_avg = 0.0;
  double h_joint = 0.0;  // h_markov + h_chan_avg (closed form)
  double h_y_est = 0.0;
  double h_y_stderr = 0.0;
  double h_xy_cond_est = 0.0;
  double h_xy_cond_stderr = 0.0;
  double defect = 0.0;  // h_markov + h_chan_avg - h_y_est
  double smoothing_error_rate = 0.0;
  double filtering_error_rate = 0.0;
  double freq_many = 0.0;
  double freq_boundary = 0.0;
  double freq_good_near = 0.0;
  double freq_good_far = 0.0;
  double mean_abs_offset = 0.0;
  double offset_entropy = 0.0;
  bool bsc_applicable = false;
  double bsc_lower = 0.0;
  double bsc_upper = 0.0;
};

struct SweepBudget {
  std::int64_t entropy_n = 10'000'000;
  int reps = 10;
  std::int64_t decode_n = 1'000'000;
  std::optional<std::int64_t> block_len_override;
  std::optional<std::int64_t> margin_override;
  int workers = 1;
};

// Block parameters used by the experiment drivers at a given p: the block
// length grows like 1/sqrt(p) (so multi-transition blocks stay a vanishing
// fraction while p*L <= 1/2), with the margin capped at a quarter block.
BlockParams regime_block_params(double p);

// One row per p; every estimator draws from streams derived from
// (master_seed, row, replicate), so results are deterministic and
// independent of worker count. Requires >= 3 p values spanning at least a
// decade.
std::vector<SweepRow> run_sweep(const GeneratorMatrix& gen,
                                const Channel& channel,
                                const std::vector<double>& p_list,
                                const SweepBudget& budget,
                                std::uint64_t master_seed);

/// Ratio-stability report for the conditional-entropy estimates of a
/// sweep: ratios h_xy_cond_est / p with their extremes.
struct FitReport {
  std::string quantity;
  std::vector<double> p_values;
  std::vector<double> ratios;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 0.0;  // max_ratio / min_ratio
  bool pass = false;
};

// Errors with insufficient_resolution when any row's estimate is not
// larger than three standard errors.
FitReport fit_conditional_entropy_rate(const std::vector<SweepRow>& rows);

/// Empirical block-event frequencies against exact binomial values where
/// the symmetric-binary structure makes those available.
struct EventScalingRow {
  double p = 0.0;
  std::int64_t block_len = 0;
  std::int64_t margin = 0;
  std::int64_t blocks = 0;
  double emp_many = 0.0;
  double emp_boundary = 0.0;
  double emp_good_far = 0.0;
  double emp_good_near_moving = 0.0;  // good_near with non-constant recon
  bool exact_available = false;
  double exact_many = 0.0;
  double exact_boundary = 0.0;
};

// Exact binomial event probabilities for per-step flip probability q.
double exact_many_probability(double q, std::int64_t block_len);
double exact_boundary_probability(double q, std::int64_t block_len,
                                  std::int64_t margin);

std::vector<EventScalingRow> event_scaling_report(
    const GeneratorMatrix& gen, const Channel& channel,
    const std::vector<double>& p_list, std::optional<BlockParams> fixed_params,
    std::int64_t blocks_per_p, std::uint64_t master_seed);

/// Paired decoding comparison on common sampled paths.
struct PairedDecodeRow {
  double p = 0.0;
  std::int64_t block_len = 0;
  std::int64_t margin = 0;
  std::int64_t n = 0;
  double smoothing_error_rate = 0.0;
  double filtering_error_rate = 0.0;
  double ratio = 0.0;  // filtering / smoothing; NaN when smoothing is 0
};

std::vector<PairedDecodeRow> smoothing_vs_filtering(
    const GeneratorMatrix& gen, const Channel& channel,
    const std::vector<double>& p_list, std::int64_t n_per_p,
    std::uint64_t master_seed, std::optional<BlockParams> fixed_params = {});

}  // namespace rarehmm
