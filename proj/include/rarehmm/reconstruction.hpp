#pragma once

#include "rarehmm/model.hpp"
#include "rarehmm/rng.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace rarehmm {

inline constexpr std::int64_t kDefaultRejectionBudget = 1'000'000;

/// Block decoding parameters: block length and the margin that cut
/// positions must keep from either block end. Requires block_len >= 2*margin
/// so the single-cut candidate stratum is non-empty.
struct BlockParams {
  std::int64_t block_len = 0;  // L
  std::int64_t margin = 0;     // K
};

BlockParams make_block_params(std::int64_t block_len, std::int64_t margin);

// Defaults K = ceil(ln(1/p)^2), L = ceil(ln(1/p)^4); explicit overrides
// replace either value.
BlockParams block_params_from_p(double p,
                                std::optional<std::int64_t> block_len_override = {},
                                std::optional<std::int64_t> margin_override = {});

/// A block with at most one transition: head^cut tail^(len-cut).
/// cut == len encodes the constant block head^len.
struct BlockShape {
  std::int64_t len = 0;
  std::int64_t cut = 0;
  Symbol head = 0;
  Symbol tail = 0;

  bool constant() const { return cut == len; }
  Symbol at(std::int64_t t) const { return t < cut ? head : tail; }
  SymbolSeq materialize() const;
};

// Parses a block into a BlockShape; nullopt if it has two or more
// transitions. Constant blocks come back with cut == len.
std::optional<BlockShape> parse_block_shape(std::span<const Symbol> block);

/// Candidate set for block decoding: all constant blocks plus all
/// single-cut blocks whose cut lies in [margin, len-margin].
struct CandidateSet {
  BlockParams params;
  Index n_states = 0;

  std::int64_t size() const {
    const std::int64_t span = params.block_len - 2 * params.margin + 1;
    return n_states + n_states * (n_states - 1) * span;
  }
};

// Emission log-likelihood of hidden block u for observed block y,
// sum_t log Q(u_t, y_t), with log 0 = -inf.
double block_log_likelihood(std::span<const Symbol> u,
                            std::span<const Symbol> y, const Channel& channel);
double block_log_likelihood(const BlockShape& u, std::span<const Symbol> y,
                            const Channel& channel);

/// Maximum-likelihood candidate for an observed block, with its
/// log-likelihood. Ties are broken toward the lexicographically smallest
/// block (state indices ascending, positions left to right).
struct MleResult {
  BlockShape shape;
  double log_likelihood = 0.0;
};
MleResult mle_block_shape(std::span<const Symbol> y,
                          const CandidateSet& candidates,
                          const Channel& channel);
SymbolSeq mle_block(std::span<const Symbol> y, const CandidateSet& candidates,
                    const Channel& channel);

/// Hidden-block event classes. A block is `many` with two or more
/// transitions, `boundary` with exactly one transition cut closer than
/// `margin` to either end, and `good` otherwise. Good blocks split by
/// whether the reconstruction lands within Hamming distance `margin` of
/// the truth (`good_near`) or not (`good_far`).
enum class CoarseEventClass { many, boundary, good };
enum class EventClass { many = 0, boundary = 1, good_near = 2, good_far = 3 };

const char* event_class_name(EventClass event) noexcept;

std::int64_t count_transitions(std::span<const Symbol> block);

CoarseEventClass classify_block_coarse(std::span<const Symbol> x,
                                       const BlockParams& params);
// Refined classification; `recon` may be null only for blocks that end up
// many/boundary, otherwise the good split is undecidable.
EventClass classify_block(std::span<const Symbol> x, const BlockParams& params,
                          const BlockShape* recon);

std::int64_t hamming(std::span<const Symbol> u, std::span<const Symbol> v);
std::int64_t hamming(std::span<const Symbol> u, const BlockShape& v);

// Signed cut displacement between two single-transition blocks with the
// same head/tail symbols: recon cut minus true cut.
std::int64_t cut_offset(std::span<const Symbol> x, std::span<const Symbol> z);
std::int64_t cut_offset(std::span<const Symbol> x, const BlockShape& z);

/// Per-block decoding record emitted by smooth_path when the true hidden
/// path is supplied.
struct BlockDiagnostic {
  std::int64_t block_index = 0;
  EventClass event = EventClass::many;
  std::int64_t transitions = 0;
  std::int64_t true_cut = -1;   // -1 unless exactly one transition
  std::int64_t recon_cut = -1;  // -1 when the reconstruction is constant
  bool has_offset = false;      // true on good_near single-transition blocks
  std::int64_t offset = 0;
  std::int64_t hamming_distance = 0;
  double loglik_recon = 0.0;
  double loglik_truth = 0.0;
};

struct SmoothResult {
  SymbolSeq reconstruction;            // first n_blocks * block_len symbols
  std::int64_t n_blocks = 0;
  std::int64_t reconstructed_len = 0;  // trailing partial block excluded

  // Populated only when the true hidden path was supplied.
  bool have_truth = false;
  std::array<std::int64_t, 4> event_counts{};  // indexed by EventClass
  std::int64_t symbol_errors = 0;
  // good_near blocks whose constant reconstruction fails to reproduce the
  // hidden block exactly; always expected to be zero.
  std::int64_t good_near_constant_mismatches = 0;
  std::vector<BlockDiagnostic> diagnostics;

  // Cut-offset statistics over good_near blocks with a moving
  // reconstruction (recon non-constant).
  std::int64_t offset_samples = 0;
  double mean_abs_offset = 0.0;
  double offset_entropy = 0.0;

  double error_rate() const {
    return reconstructed_len > 0
               ? static_cast<double>(symbol_errors) / reconstructed_len
               : 0.0;
  }
};

// Two-sided block decoding: the observed path is split into consecutive
// disjoint blocks of length params.block_len, each decoded by mle_block.
// Pass the true hidden path x to collect event tallies and error counts.
SmoothResult smooth_path(const HmmModel& model, std::span<const Symbol> y,
                         const BlockParams& params,
                         std::span<const Symbol> x = {});

// Causal decoder baseline: x_hat[k] = argmax_i P(X_k = i | Y_0..Y_k),
// ties to the smallest state index.
SymbolSeq filter_path(const HmmModel& model, std::span<const Symbol> y);

/// Empirical cut-offset tail collected from conditioned single-transition
/// blocks run through the MLE decoder.
struct OffsetTailHistogram {
  std::map<std::int64_t, std::int64_t> offset_counts;   // recon moving only
  std::map<std::int64_t, std::int64_t> hamming_counts;  // all blocks
  std::int64_t blocks = 0;
  std::int64_t constant_recon_blocks = 0;
  double offset_entropy = 0.0;
  double mean_abs_offset = 0.0;
};

OffsetTailHistogram offset_tail_histogram(
    const HmmModel& model, const BlockParams& params, std::int64_t blocks,
    RngStream stream,
    std::int64_t max_attempts_per_block = kDefaultRejectionBudget);

}  // namespace rarehmm
