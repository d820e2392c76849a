#include "rarehmm/reconstruction.hpp"

#include "rarehmm/errors.hpp"
#include "rarehmm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <vector>

namespace rarehmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Mathematically tied candidates may differ by accumulated rounding;
// values this close are treated as ties and resolved lexicographically.
double tie_tolerance(double value) {
  return 1e-11 * (1.0 + std::abs(value));
}

void require_distinguishing(const HmmModel& model, const char* what) {
  if (!check_distinguishing(model.channel).distinguishing) {
    std::ostringstream msg;
    msg << what << " requires a statistically distinguishing channel";
    fail(errc::model_invalid, msg.str());
  }
}

}  // namespace

BlockParams make_block_params(std::int64_t block_len, std::int64_t margin) {
  if (margin < 1) {
    fail(errc::incompatible_params, "margin K must be at least 1");
  }
  if (block_len < 2 * margin) {
    std::ostringstream msg;
    msg << "block length L = " << block_len << " must be at least 2K = "
        << 2 * margin;
    fail(errc::incompatible_params, msg.str());
  }
  return BlockParams{block_len, margin};
}

BlockParams block_params_from_p(double p,
                                std::optional<std::int64_t> block_len_override,
                                std::optional<std::int64_t> margin_override) {
  if (!(p > 0.0) || !(p < 1.0)) {
    fail(errc::model_invalid, "block parameter defaults need p in (0, 1)");
  }
  // Ceiling with a small backoff so exact integer powers of |log p| do not
  // round up through floating error.
  auto ceil_stable = [](double v) {
    return static_cast<std::int64_t>(std::ceil(v - 1e-9));
  };
  const double log_inv_p = -std::log(p);
  const std::int64_t margin =
      margin_override.value_or(ceil_stable(log_inv_p * log_inv_p));
  const std::int64_t block_len = block_len_override.value_or(
      ceil_stable(log_inv_p * log_inv_p * log_inv_p * log_inv_p));
  return make_block_params(block_len, margin);
}

SymbolSeq BlockShape::materialize() const {
  SymbolSeq block(static_cast<std::size_t>(len));
  for (std::int64_t t = 0; t < len; ++t) {
    block[static_cast<std::size_t>(t)] = at(t);
  }
  return block;
}

std::optional<BlockShape> parse_block_shape(std::span<const Symbol> block) {
  if (block.empty()) return std::nullopt;
  BlockShape shape;
  shape.len = static_cast<std::int64_t>(block.size());
  shape.head = block[0];
  shape.cut = shape.len;
  shape.tail = block[0];
  for (std::size_t t = 1; t < block.size(); ++t) {
    if (block[t] != block[t - 1]) {
      if (shape.cut != shape.len) return std::nullopt;  // second transition
      shape.cut = static_cast<std::int64_t>(t);
      shape.tail = block[t];
    } else if (shape.cut != shape.len && block[t] != shape.tail) {
      return std::nullopt;
    }
  }
  if (shape.cut == shape.len) shape.tail = shape.head;
  return shape;
}

double block_log_likelihood(std::span<const Symbol> u,
                            std::span<const Symbol> y,
                            const Channel& channel) {
  if (u.size() != y.size()) {
    fail(errc::length_mismatch, "blocks differ in length");
  }
  double ll = 0.0;
  for (std::size_t t = 0; t < u.size(); ++t) {
    const double q = channel.emission(u[t], y[t]);
    if (q <= 0.0) return kNegInf;
    ll += std::log(q);
  }
  return ll;
}

double block_log_likelihood(const BlockShape& u, std::span<const Symbol> y,
                            const Channel& channel) {
  if (u.len != static_cast<std::int64_t>(y.size())) {
    fail(errc::length_mismatch, "blocks differ in length");
  }
  double ll = 0.0;
  for (std::int64_t t = 0; t < u.len; ++t) {
    const double q = channel.emission(u.at(t), y[static_cast<std::size_t>(t)]);
    if (q <= 0.0) return kNegInf;
    ll += std::log(q);
  }
  return ll;
}

namespace {

// Lexicographic order on materialized blocks, walking the at-most-three
// constant segments induced by the two cuts.
int lex_compare(const BlockShape& a, const BlockShape& b) {
  std::int64_t t = 0;
  while (t < a.len) {
    const Symbol sa = a.at(t);
    const Symbol sb = b.at(t);
    if (sa != sb) return sa < sb ? -1 : 1;
    std::int64_t next = a.len;
    if (a.cut > t && a.cut < next) next = a.cut;
    if (b.cut > t && b.cut < next) next = b.cut;
    t = next;
  }
  return 0;
}

}  // namespace

MleResult mle_block_shape(std::span<const Symbol> y,
                          const CandidateSet& candidates,
                          const Channel& channel) {
  const std::int64_t len = candidates.params.block_len;
  const std::int64_t margin = candidates.params.margin;
  const Index s = candidates.n_states;
  if (static_cast<std::int64_t>(y.size()) != len) {
    fail(errc::length_mismatch, "observed block length does not match L");
  }
  if (s < 1 || s > channel.n_inputs()) {
    fail(errc::model_invalid, "candidate state count exceeds the channel");
  }

  // Per-state prefix sums of log Q(a, y_t). Zero-probability terms are
  // tracked by count so run-likelihoods stay representable as
  // (finite sum, impossible-count) pairs.
  const std::size_t width = static_cast<std::size_t>(len) + 1;
  std::vector<double> prefix(static_cast<std::size_t>(s) * width, 0.0);
  std::vector<std::int32_t> impossible(static_cast<std::size_t>(s) * width, 0);
  for (Index a = 0; a < s; ++a) {
    double* pf = prefix.data() + static_cast<std::size_t>(a) * width;
    std::int32_t* imp = impossible.data() + static_cast<std::size_t>(a) * width;
    for (std::int64_t t = 0; t < len; ++t) {
      const double q = channel.emission(a, y[static_cast<std::size_t>(t)]);
      pf[t + 1] = pf[t] + (q > 0.0 ? std::log(q) : 0.0);
      imp[t + 1] = imp[t] + (q > 0.0 ? 0 : 1);
    }
  }
  auto run_value = [&](Index a, std::int64_t from, std::int64_t to,
                       bool& possible) -> double {
    const double* pf = prefix.data() + static_cast<std::size_t>(a) * width;
    const std::int32_t* imp =
        impossible.data() + static_cast<std::size_t>(a) * width;
    possible = imp[to] == imp[from];
    return pf[to] - pf[from];
  };

  bool have_best = false;
  double best_value = kNegInf;
  BlockShape best_shape;
  auto consider = [&](const BlockShape& shape, double value) {
    if (!have_best || value > best_value + tie_tolerance(value)) {
      have_best = true;
      best_value = value;
      best_shape = shape;
      return;
    }
    if (value >= best_value - tie_tolerance(best_value)) {
      if (lex_compare(shape, best_shape) < 0) best_shape = shape;
      best_value = std::max(best_value, value);
    }
  };

  for (Index a = 0; a < s; ++a) {
    bool possible = false;
    const double value = run_value(a, 0, len, possible);
    if (possible) {
      consider(BlockShape{len, len, static_cast<Symbol>(a),
                          static_cast<Symbol>(a)},
               value);
    }
  }
  for (Index a = 0; a < s; ++a) {
    for (Index b = 0; b < s; ++b) {
      if (a == b) continue;
      for (std::int64_t cut = margin; cut <= len - margin; ++cut) {
        bool head_ok = false;
        bool tail_ok = false;
        const double head = run_value(a, 0, cut, head_ok);
        const double tail = run_value(b, cut, len, tail_ok);
        if (!head_ok || !tail_ok) continue;
        consider(BlockShape{len, cut, static_cast<Symbol>(a),
                            static_cast<Symbol>(b)},
                 head + tail);
      }
    }
  }
  if (!have_best) {
    fail(errc::all_impossible,
         "every candidate block has log-likelihood -inf for this observation");
  }
  return MleResult{best_shape, best_value};
}

SymbolSeq mle_block(std::span<const Symbol> y, const CandidateSet& candidates,
                    const Channel& channel) {
  return mle_block_shape(y, candidates, channel).shape.materialize();
}

const char* event_class_name(EventClass event) noexcept {
  switch (event) {
    case EventClass::many: return "many";
    case EventClass::boundary: return "boundary";
    case EventClass::good_near: return "good_near";
    case EventClass::good_far: return "good_far";
  }
  return "unknown";
}

std::int64_t count_transitions(std::span<const Symbol> block) {
  std::int64_t count = 0;
  for (std::size_t t = 1; t < block.size(); ++t) {
    if (block[t] != block[t - 1]) ++count;
  }
  return count;
}

CoarseEventClass classify_block_coarse(std::span<const Symbol> x,
                                       const BlockParams& params) {
  if (static_cast<std::int64_t>(x.size()) != params.block_len) {
    fail(errc::length_mismatch, "block length does not match L");
  }
  const auto shape = parse_block_shape(x);
  if (!shape) return CoarseEventClass::many;
  if (shape->constant()) return CoarseEventClass::good;
  const std::int64_t cut = shape->cut;
  if (cut < params.margin || cut > params.block_len - params.margin) {
    return CoarseEventClass::boundary;
  }
  return CoarseEventClass::good;
}

EventClass classify_block(std::span<const Symbol> x, const BlockParams& params,
                          const BlockShape* recon) {
  switch (classify_block_coarse(x, params)) {
    case CoarseEventClass::many: return EventClass::many;
    case CoarseEventClass::boundary: return EventClass::boundary;
    case CoarseEventClass::good: break;
  }
  if (recon == nullptr) {
    fail(errc::missing_reconstruction,
         "good blocks need the reconstruction to be split near/far");
  }
  return hamming(x, *recon) < params.margin ? EventClass::good_near
                                            : EventClass::good_far;
}

std::int64_t hamming(std::span<const Symbol> u, std::span<const Symbol> v) {
  if (u.size() != v.size()) {
    fail(errc::length_mismatch, "blocks differ in length");
  }
  std::int64_t d = 0;
  for (std::size_t t = 0; t < u.size(); ++t) {
    if (u[t] != v[t]) ++d;
  }
  return d;
}

std::int64_t hamming(std::span<const Symbol> u, const BlockShape& v) {
  if (static_cast<std::int64_t>(u.size()) != v.len) {
    fail(errc::length_mismatch, "blocks differ in length");
  }
  std::int64_t d = 0;
  for (std::int64_t t = 0; t < v.len; ++t) {
    if (u[static_cast<std::size_t>(t)] != v.at(t)) ++d;
  }
  return d;
}

namespace {

std::int64_t cut_offset_shapes(const std::optional<BlockShape>& xs,
                               const std::optional<BlockShape>& zs) {
  if (!xs || !zs || xs->constant() || zs->constant() ||
      xs->head != zs->head || xs->tail != zs->tail) {
    fail(errc::shape_mismatch,
         "cut offset needs two single-transition blocks with matching symbols");
  }
  return zs->cut - xs->cut;
}

}  // namespace

std::int64_t cut_offset(std::span<const Symbol> x, std::span<const Symbol> z) {
  if (x.size() != z.size()) {
    fail(errc::length_mismatch, "blocks differ in length");
  }
  return cut_offset_shapes(parse_block_shape(x), parse_block_shape(z));
}

std::int64_t cut_offset(std::span<const Symbol> x, const BlockShape& z) {
  return cut_offset_shapes(parse_block_shape(x), z);
}

namespace {

struct OffsetAccumulator {
  std::map<std::int64_t, std::int64_t> counts;
  std::int64_t total = 0;
  std::int64_t abs_sum = 0;

  void add(std::int64_t offset) {
    ++counts[offset];
    ++total;
    abs_sum += std::llabs(offset);
  }
  double mean_abs() const {
    return total > 0 ? static_cast<double>(abs_sum) / total : 0.0;
  }
  double entropy() const {
    if (total == 0) return 0.0;
    double h = 0.0;
    for (const auto& [offset, count] : counts) {
      (void)offset;
      const double f = static_cast<double>(count) / total;
      h -= f * std::log(f);
    }
    return h;
  }
};

}  // namespace

namespace {

// Per-position channel argmax, used only when a zero-entry channel makes
// every candidate impossible for a block; for the noiseless channel this
// reproduces the hidden block exactly.
void symbolwise_fallback(std::span<const Symbol> y_block,
                         const Channel& channel, std::span<Symbol> out) {
  for (std::size_t t = 0; t < y_block.size(); ++t) {
    Index best = 0;
    for (Index a = 1; a < channel.n_inputs(); ++a) {
      if (channel.emission(a, y_block[t]) >
          channel.emission(best, y_block[t])) {
        best = a;
      }
    }
    out[t] = static_cast<Symbol>(best);
  }
}

}  // namespace

SmoothResult smooth_path(const HmmModel& model, std::span<const Symbol> y,
                         const BlockParams& params,
                         std::span<const Symbol> x) {
  require_distinguishing(model, "block decoding");
  const std::int64_t len = params.block_len;
  const std::int64_t n = static_cast<std::int64_t>(y.size());
  if (n < len) {
    std::ostringstream msg;
    msg << "path length " << n << " is shorter than one block (L = " << len
        << ")";
    fail(errc::path_too_short, msg.str());
  }
  if (!x.empty() && x.size() != y.size()) {
    fail(errc::length_mismatch, "hidden and observed paths differ in length");
  }

  SmoothResult result;
  result.n_blocks = n / len;
  result.reconstructed_len = result.n_blocks * len;
  result.reconstruction.resize(static_cast<std::size_t>(result.reconstructed_len));
  result.have_truth = !x.empty();
  if (result.have_truth) {
    result.diagnostics.reserve(static_cast<std::size_t>(result.n_blocks));
  }

  const CandidateSet candidates{params, model.n_states()};
  OffsetAccumulator offsets;

  for (std::int64_t b = 0; b < result.n_blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b * len);
    const auto y_block = y.subspan(begin, static_cast<std::size_t>(len));
    const std::span<Symbol> recon_block(result.reconstruction.data() + begin,
                                        static_cast<std::size_t>(len));
    bool from_candidates = true;
    MleResult mle;
    try {
      mle = mle_block_shape(y_block, candidates, model.channel);
    } catch (const Error& e) {
      if (e.code() != errc::all_impossible) throw;
      from_candidates = false;
    }
    if (from_candidates) {
      for (std::int64_t t = 0; t < len; ++t) {
        recon_block[static_cast<std::size_t>(t)] = mle.shape.at(t);
      }
    } else {
      symbolwise_fallback(y_block, model.channel, recon_block);
    }
    if (!result.have_truth) continue;

    const auto x_block = x.subspan(begin, static_cast<std::size_t>(len));
    BlockDiagnostic diag;
    diag.block_index = b;
    diag.transitions = count_transitions(x_block);
    diag.hamming_distance = hamming(x_block, recon_block);
    diag.loglik_truth = block_log_likelihood(x_block, y_block, model.channel);
    const auto x_shape = parse_block_shape(x_block);
    if (x_shape && !x_shape->constant()) diag.true_cut = x_shape->cut;

    switch (classify_block_coarse(x_block, params)) {
      case CoarseEventClass::many: diag.event = EventClass::many; break;
      case CoarseEventClass::boundary: diag.event = EventClass::boundary; break;
      case CoarseEventClass::good:
        diag.event = diag.hamming_distance < params.margin
                         ? EventClass::good_near
                         : EventClass::good_far;
        break;
    }
    if (from_candidates) {
      diag.recon_cut = mle.shape.constant() ? -1 : mle.shape.cut;
      diag.loglik_recon = mle.log_likelihood;
      if (diag.event == EventClass::good_near) {
        if (mle.shape.constant()) {
          if (diag.hamming_distance != 0) {
            ++result.good_near_constant_mismatches;
          }
        } else if (x_shape && !x_shape->constant()) {
          diag.offset = cut_offset_shapes(x_shape, mle.shape);
          diag.has_offset = true;
          offsets.add(diag.offset);
        }
      }
    } else {
      diag.recon_cut = -1;
      diag.loglik_recon =
          block_log_likelihood(recon_block, y_block, model.channel);
    }

    result.event_counts[static_cast<std::size_t>(diag.event)] += 1;
    result.symbol_errors += diag.hamming_distance;
    result.diagnostics.push_back(diag);
  }

  result.offset_samples = offsets.total;
  result.mean_abs_offset = offsets.mean_abs();
  result.offset_entropy = offsets.entropy();
  return result;
}

SymbolSeq filter_path(const HmmModel& model, std::span<const Symbol> y) {
  if (y.empty()) fail(errc::model_invalid, "observation sequence is empty");
  const Index s = model.n_states();
  Vector alpha(s);
  Vector tmp(s);
  SymbolSeq x_hat(y.size());
  for (Index i = 0; i < s; ++i) {
    alpha(i) =
        model.stationary.weights(i) * model.channel.emission(i, y[0]);
  }
  auto pick_argmax = [&](const Vector& v) {
    Index best = 0;
    for (Index i = 1; i < s; ++i) {
      if (v(i) > v(best)) best = i;
    }
    return best;
  };
  auto normalize = [&](Vector& v) {
    const double total = v.sum();
    if (total > 0.0) v /= total;
  };
  normalize(alpha);
  x_hat[0] = static_cast<Symbol>(pick_argmax(alpha));
  for (std::size_t k = 1; k < y.size(); ++k) {
    tmp.noalias() = model.transition.probs.transpose() * alpha;
    for (Index j = 0; j < s; ++j) {
      tmp(j) *= model.channel.emission(j, y[k]);
    }
    normalize(tmp);
    alpha = tmp;
    x_hat[k] = static_cast<Symbol>(pick_argmax(alpha));
  }
  return x_hat;
}

OffsetTailHistogram offset_tail_histogram(const HmmModel& model,
                                          const BlockParams& params,
                                          std::int64_t blocks,
                                          RngStream stream,
                                          std::int64_t max_attempts_per_block) {
  require_distinguishing(model, "cut-offset statistics");
  if (blocks < 100) {
    fail(errc::model_invalid, "offset tail needs at least 100 blocks");
  }
  const CandidateSet candidates{params, model.n_states()};
  OffsetTailHistogram tail;
  OffsetAccumulator offsets;
  for (std::int64_t b = 0; b < blocks; ++b) {
    const SymbolSeq x = sample_hidden_block_conditioned(
        model, params, stream, CoarseEventClass::good, max_attempts_per_block,
        /*require_transition=*/true);
    const SymbolSeq y = emit_observations(model, x, stream);
    const MleResult mle = mle_block_shape(y, candidates, model.channel);
    const std::int64_t delta = hamming(x, mle.shape);
    ++tail.hamming_counts[delta];
    ++tail.blocks;
    if (mle.shape.constant()) {
      ++tail.constant_recon_blocks;
      continue;
    }
    // Offsets are tallied on near-reconstructions, where the matching
    // symbol pattern is guaranteed.
    if (delta < params.margin) {
      offsets.add(cut_offset_shapes(parse_block_shape(x), mle.shape));
    }
  }
  tail.offset_counts = offsets.counts;
  tail.offset_entropy = offsets.entropy();
  tail.mean_abs_offset = offsets.mean_abs();
  return tail;
}

}  // namespace rarehmm
