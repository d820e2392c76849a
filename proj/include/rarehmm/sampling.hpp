#pragma once

#include "rarehmm/model.hpp"
#include "rarehmm/reconstruction.hpp"
#include "rarehmm/rng.hpp"

#include <cstdint>
#include <span>

namespace rarehmm {

/// Paired hidden/observed realization with its provenance key.
struct PathSample {
  SymbolSeq x;
  SymbolSeq y;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  std::uint64_t model_fingerprint = 0;
};

/// Inverse-CDF sampler over the rows of a row-stochastic matrix, with
/// cumulative sums precomputed per row.
class RowSampler {
 public:
  explicit RowSampler(const Matrix& row_stochastic);
  Index pick(Index row, double u) const;

 private:
  Matrix cumulative_;
};

Index sample_index(const Distribution& dist, double u);

// Stationary-start sample of the hidden chain and its channel output.
// Deterministic given (model, n, stream). Draw order per step: next hidden
// symbol, then its observation.
PathSample sample_path(const HmmModel& model, std::int64_t n,
                       RngStream stream);

// Channel output for a given hidden block.
SymbolSeq emit_observations(const HmmModel& model, std::span<const Symbol> x,
                            RngStream& stream);

// Rejection-samples a stationary hidden block whose transition pattern
// falls in the requested event class. `require_transition` additionally
// demands at least one transition (used for cut-offset statistics, where
// constant blocks carry no cut).
SymbolSeq sample_hidden_block_conditioned(
    const HmmModel& model, const BlockParams& params, RngStream& stream,
    CoarseEventClass event,
    std::int64_t max_attempts = kDefaultRejectionBudget,
    bool require_transition = false);

}  // namespace rarehmm
