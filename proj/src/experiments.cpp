#include "rarehmm/experiments.hpp"

#include "rarehmm/errors.hpp"
#include "rarehmm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rarehmm {

double binary_entropy(double q) {
  if (!(q >= 0.0) || !(q <= 1.0)) {
    fail(errc::model_invalid, "binary entropy needs q in [0, 1]");
  }
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
  return h;
}

BscBounds bsc_entropy_bounds(double q, double eps) {
  if (!(q > 0.0) || !(q < 1.0)) {
    fail(errc::model_invalid, "bounds need flip probability in (0, 1)");
  }
  if (!(eps > 0.0) || !(eps <= 0.5)) {
    fail(errc::model_invalid, "bounds need crossover in (0, 1/2]");
  }
  BscBounds bounds;
  const double coeff = (1.0 - 2.0 * eps) * (1.0 - 2.0 * eps);
  bounds.lower = binary_entropy(eps) - coeff * q * std::log(q) / (1.0 - eps);
  bounds.upper = binary_entropy(q) + binary_entropy(eps);
  return bounds;
}

BscShape detect_bsc_shape(const GeneratorMatrix& gen, const Channel& channel,
                          double p) {
  BscShape shape;
  if (gen.n_states() != 2 || channel.n_inputs() != 2 ||
      channel.n_outputs() != 2) {
    return shape;
  }
  const double rate01 = gen.rates(0, 1);
  const double rate10 = gen.rates(1, 0);
  if (rate01 != rate10) return shape;
  if (channel.emission(0, 1) != channel.emission(1, 0) ||
      channel.emission(0, 0) != channel.emission(1, 1)) {
    return shape;
  }
  const double eps = channel.emission(0, 1);
  if (!(eps > 0.0) || eps >= 0.5) return shape;
  shape.applicable = true;
  shape.flip_probability = p * rate01;
  shape.crossover = eps;
  return shape;
}

BlockParams regime_block_params(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    fail(errc::model_invalid, "block parameter policy needs p in (0, 1)");
  }
  // L ~ 3/sqrt(p) keeps the multi-transition fraction O(p*L^2/L) = O(sqrt(p))
  // of symbols while p*L stays <= 1/2; the margin only needs to cover the
  // cut-offset tail, which decays geometrically, so it is capped at 10.
  std::int64_t block_len =
      static_cast<std::int64_t>(std::ceil(3.0 / std::sqrt(p)));
  const auto cap = static_cast<std::int64_t>(std::floor(0.5 / p));
  block_len = std::max<std::int64_t>(2, std::min(block_len, cap));
  const double log_inv_p = -std::log(p);
  auto margin =
      static_cast<std::int64_t>(std::ceil(log_inv_p * log_inv_p - 1e-9));
  margin = std::min<std::int64_t>({margin, block_len / 4, 10});
  margin = std::max<std::int64_t>(margin, 1);
  return make_block_params(block_len, margin);
}

namespace {

void validate_p_list(const GeneratorMatrix& gen,
                     const std::vector<double>& p_list, bool need_decade) {
  if (p_list.empty()) fail(errc::model_invalid, "p list is empty");
  for (double p : p_list) {
    if (!(p > 0.0) || !(p < gen.p_max())) {
      std::ostringstream msg;
      msg << "p = " << p << " outside (0, " << gen.p_max() << ")";
      fail(errc::p_out_of_range, msg.str());
    }
  }
  if (need_decade) {
    if (p_list.size() < 3) {
      fail(errc::model_invalid, "sweep needs at least 3 p values");
    }
    const auto [lo, hi] = std::minmax_element(p_list.begin(), p_list.end());
    if (*hi / *lo < 10.0 * (1.0 - 1e-12)) {
      fail(errc::model_invalid, "sweep p values must span at least a decade");
    }
  }
}

BlockParams params_for(double p, std::optional<std::int64_t> len_override,
                       std::optional<std::int64_t> margin_override) {
  if (len_override || margin_override) {
    const BlockParams fallback = regime_block_params(p);
    return make_block_params(len_override.value_or(fallback.block_len),
                             margin_override.value_or(fallback.margin));
  }
  return regime_block_params(p);
}

}  // namespace

std::vector<SweepRow> run_sweep(const GeneratorMatrix& gen,
                                const Channel& channel,
                                const std::vector<double>& p_list,
                                const SweepBudget& budget,
                                std::uint64_t master_seed) {
  validate_p_list(gen, p_list, /*need_decade=*/true);
  // All parameter constraints checked before any estimator runs.
  std::vector<BlockParams> row_params;
  row_params.reserve(p_list.size());
  for (double p : p_list) {
    row_params.push_back(
        params_for(p, budget.block_len_override, budget.margin_override));
  }
  std::vector<SweepRow> rows;
  rows.reserve(p_list.size());
  for (std::size_t r = 0; r < p_list.size(); ++r) {
    const double p = p_list[r];
    const HmmModel model = make_model(gen, channel, p);
    const BlockParams params = row_params[r];

    SweepRow row;
    row.p = p;
    row.n = budget.entropy_n;
    row.reps = budget.reps;
    row.block_len = params.block_len;
    row.margin = params.margin;
    row.h_markov = model.entropy_markov;
    row.h_chan_avg = model.entropy_channel_avg;
    row.h_joint = model.entropy_markov + model.entropy_channel_avg;

    const EntropyTriple triple = estimate_entropy_mc_all(
        model, budget.entropy_n, budget.reps, master_seed,
        compose_stream(stream_tag::entropy, r, 0), budget.workers);
    row.h_y_est = triple.marginal.mean;
    row.h_y_stderr = triple.marginal.stderr_;
    row.h_xy_cond_est = triple.conditional.mean;
    row.h_xy_cond_stderr = triple.conditional.stderr_;
    row.defect = row.h_markov + row.h_chan_avg - row.h_y_est;

    const PathSample path = sample_path(
        model, budget.decode_n,
        RngStream(master_seed, compose_stream(stream_tag::decode, r, 0)));
    const SmoothResult smooth = smooth_path(model, path.y, params, path.x);
    row.smoothing_error_rate = smooth.error_rate();
    const SymbolSeq filtered = filter_path(model, path.y);
    std::int64_t filter_errors = 0;
    for (std::int64_t k = 0; k < smooth.reconstructed_len; ++k) {
      if (filtered[static_cast<std::size_t>(k)] !=
          path.x[static_cast<std::size_t>(k)]) {
        ++filter_errors;
      }
    }
    row.filtering_error_rate = smooth.reconstructed_len > 0
                                   ? static_cast<double>(filter_errors) /
                                         smooth.reconstructed_len
                                   : 0.0;

    const double blocks = static_cast<double>(smooth.n_blocks);
    row.freq_many = smooth.event_counts[0] / blocks;
    row.freq_boundary = smooth.event_counts[1] / blocks;
    row.freq_good_near = smooth.event_counts[2] / blocks;
    row.freq_good_far = smooth.event_counts[3] / blocks;
    row.mean_abs_offset = smooth.mean_abs_offset;
    row.offset_entropy = smooth.offset_entropy;

    const BscShape bsc = detect_bsc_shape(gen, channel, p);
    row.bsc_applicable = bsc.applicable;
    if (bsc.applicable) {
      const BscBounds bounds =
          bsc_entropy_bounds(bsc.flip_probability, bsc.crossover);
      row.bsc_lower = bounds.lower;
      row.bsc_upper = bounds.upper;
    }
    rows.push_back(row);
  }
  return rows;
}

FitReport fit_conditional_entropy_rate(const std::vector<SweepRow>& rows) {
  if (rows.size() < 3) {
    fail(errc::model_invalid, "rate fit needs at least 3 sweep rows");
  }
  FitReport report;
  report.quantity = "h_xy_cond_est / p";
  for (const SweepRow& row : rows) {
    // Resolved means above three standard errors and clear of rounding
    // noise; exactly-zero conditional entropy must land here, not in the
    // ratio report.
    if (!(row.h_xy_cond_est > 3.0 * row.h_xy_cond_stderr) ||
        row.h_xy_cond_est <= 1e-12) {
      std::ostringstream msg;
      msg << "estimate at p = " << row.p
          << " is not resolved above 3 standard errors; increase n or reps";
      fail(errc::insufficient_resolution, msg.str());
    }
    report.p_values.push_back(row.p);
    report.ratios.push_back(row.h_xy_cond_est / row.p);
  }
  const auto [lo, hi] =
      std::minmax_element(report.ratios.begin(), report.ratios.end());
  report.min_ratio = *lo;
  report.max_ratio = *hi;
  report.spread = report.max_ratio / report.min_ratio;
  report.pass = report.min_ratio > 0.0;
  return report;
}

double exact_many_probability(double q, std::int64_t block_len) {
  // Transition indicators are independent Bernoulli(q) across the L-1
  // steps, so P(two or more) = 1 - P(0) - P(1).
  const double steps = static_cast<double>(block_len - 1);
  const double none = std::pow(1.0 - q, steps);
  const double one = steps * q * std::pow(1.0 - q, steps - 1.0);
  return 1.0 - none - one;
}

double exact_boundary_probability(double q, std::int64_t block_len,
                                  std::int64_t margin) {
  // Exactly one transition whose cut falls in [1, K) or (L-K, L-1]:
  // 2*(K-1) of the L-1 equally likely cut positions.
  const double steps = static_cast<double>(block_len - 1);
  const double cuts = 2.0 * static_cast<double>(margin - 1);
  return cuts * q * std::pow(1.0 - q, steps - 1.0);
}

std::vector<EventScalingRow> event_scaling_report(
    const GeneratorMatrix& gen, const Channel& channel,
    const std::vector<double>& p_list, std::optional<BlockParams> fixed_params,
    std::int64_t blocks_per_p, std::uint64_t master_seed) {
  validate_p_list(gen, p_list, /*need_decade=*/false);
  if (blocks_per_p < 1000) {
    fail(errc::model_invalid, "event scaling needs >= 1000 blocks per p");
  }
  std::vector<EventScalingRow> rows;
  rows.reserve(p_list.size());
  for (std::size_t r = 0; r < p_list.size(); ++r) {
    const double p = p_list[r];
    const HmmModel model = make_model(gen, channel, p);
    const BlockParams params =
        fixed_params ? *fixed_params : regime_block_params(p);
    const CandidateSet candidates{params, model.n_states()};
    RngStream stream(master_seed, compose_stream(stream_tag::events, r, 0));
    const RowSampler transition(model.transition.probs);

    EventScalingRow row;
    row.p = p;
    row.block_len = params.block_len;
    row.margin = params.margin;
    row.blocks = blocks_per_p;

    std::int64_t many = 0;
    std::int64_t boundary = 0;
    std::int64_t good_far = 0;
    std::int64_t good_near_moving = 0;
    SymbolSeq block(static_cast<std::size_t>(params.block_len));
    for (std::int64_t b = 0; b < blocks_per_p; ++b) {
      Index state = sample_index(model.stationary, stream.next_double());
      block[0] = static_cast<Symbol>(state);
      for (std::int64_t k = 1; k < params.block_len; ++k) {
        state = transition.pick(state, stream.next_double());
        block[static_cast<std::size_t>(k)] = static_cast<Symbol>(state);
      }
      const SymbolSeq y = emit_observations(model, block, stream);
      switch (classify_block_coarse(block, params)) {
        case CoarseEventClass::many: ++many; break;
        case CoarseEventClass::boundary: ++boundary; break;
        case CoarseEventClass::good: {
          // Good blocks always admit at least one finite candidate (the
          // block itself), so the decoder is safe to run here.
          const MleResult mle =
              mle_block_shape(y, candidates, model.channel);
          if (classify_block(block, params, &mle.shape) ==
              EventClass::good_far) {
            ++good_far;
          } else if (!mle.shape.constant()) {
            ++good_near_moving;
          }
          break;
        }
      }
    }
    const double total = static_cast<double>(blocks_per_p);
    row.emp_many = many / total;
    row.emp_boundary = boundary / total;
    row.emp_good_far = good_far / total;
    row.emp_good_near_moving = good_near_moving / total;

    const BscShape bsc = detect_bsc_shape(gen, channel, p);
    if (bsc.applicable) {
      row.exact_available = true;
      row.exact_many =
          exact_many_probability(bsc.flip_probability, params.block_len);
      row.exact_boundary = exact_boundary_probability(
          bsc.flip_probability, params.block_len, params.margin);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<PairedDecodeRow> smoothing_vs_filtering(
    const GeneratorMatrix& gen, const Channel& channel,
    const std::vector<double>& p_list, std::int64_t n_per_p,
    std::uint64_t master_seed, std::optional<BlockParams> fixed_params) {
  validate_p_list(gen, p_list, /*need_decade=*/false);
  if (n_per_p < 100'000) {
    fail(errc::model_invalid, "paired decoding needs n >= 1e5 per p");
  }
  std::vector<PairedDecodeRow> rows;
  rows.reserve(p_list.size());
  for (std::size_t r = 0; r < p_list.size(); ++r) {
    const double p = p_list[r];
    const HmmModel model = make_model(gen, channel, p);
    const BlockParams params =
        fixed_params ? *fixed_params : regime_block_params(p);
    const PathSample path = sample_path(
        model, n_per_p,
        RngStream(master_seed, compose_stream(stream_tag::paired, r, 0)));

    const SmoothResult smooth = smooth_path(model, path.y, params, path.x);
    const SymbolSeq filtered = filter_path(model, path.y);
    std::int64_t filter_errors = 0;
    for (std::int64_t k = 0; k < smooth.reconstructed_len; ++k) {
      if (filtered[static_cast<std::size_t>(k)] !=
          path.x[static_cast<std::size_t>(k)]) {
        ++filter_errors;
      }
    }
    PairedDecodeRow row;
    row.p = p;
    row.block_len = params.block_len;
    row.margin = params.margin;
    row.n = smooth.reconstructed_len;
    row.smoothing_error_rate = smooth.error_rate();
    row.filtering_error_rate =
        static_cast<double>(filter_errors) / smooth.reconstructed_len;
    row.ratio = row.smoothing_error_rate > 0.0
                    ? row.filtering_error_rate / row.smoothing_error_rate
                    : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rarehmm
