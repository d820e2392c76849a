#include "rarehmm/sampling.hpp"

#include "rarehmm/errors.hpp"

#include <sstream>

namespace rarehmm {

RowSampler::RowSampler(const Matrix& row_stochastic)
    : cumulative_(row_stochastic) {
  for (Index i = 0; i < cumulative_.rows(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < cumulative_.cols(); ++j) {
      acc += cumulative_(i, j);
      cumulative_(i, j) = acc;
    }
  }
}

Index RowSampler::pick(Index row, double u) const {
  const Index cols = cumulative_.cols();
  for (Index j = 0; j + 1 < cols; ++j) {
    if (u < cumulative_(row, j)) return j;
  }
  return cols - 1;
}

Index sample_index(const Distribution& dist, double u) {
  double acc = 0.0;
  const Index n = dist.size();
  for (Index k = 0; k + 1 < n; ++k) {
    acc += dist.weights(k);
    if (u < acc) return k;
  }
  return n - 1;
}

PathSample sample_path(const HmmModel& model, std::int64_t n,
                       RngStream stream) {
  if (n < 1) fail(errc::model_invalid, "path length must be at least 1");
  PathSample sample;
  sample.master_seed = stream.master_seed();
  sample.stream_index = stream.stream_index();
  sample.model_fingerprint = model.fingerprint;
  sample.x.resize(static_cast<std::size_t>(n));
  sample.y.resize(static_cast<std::size_t>(n));

  const RowSampler transition(model.transition.probs);
  const RowSampler emission(model.channel.emission);

  Index state = sample_index(model.stationary, stream.next_double());
  sample.x[0] = static_cast<Symbol>(state);
  sample.y[0] = static_cast<Symbol>(emission.pick(state, stream.next_double()));
  for (std::int64_t k = 1; k < n; ++k) {
    state = transition.pick(state, stream.next_double());
    sample.x[static_cast<std::size_t>(k)] = static_cast<Symbol>(state);
    sample.y[static_cast<std::size_t>(k)] =
        static_cast<Symbol>(emission.pick(state, stream.next_double()));
  }
  return sample;
}

SymbolSeq emit_observations(const HmmModel& model, std::span<const Symbol> x,
                            RngStream& stream) {
  const RowSampler emission(model.channel.emission);
  SymbolSeq y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    y[k] = static_cast<Symbol>(emission.pick(x[k], stream.next_double()));
  }
  return y;
}

SymbolSeq sample_hidden_block_conditioned(const HmmModel& model,
                                          const BlockParams& params,
                                          RngStream& stream,
                                          CoarseEventClass event,
                                          std::int64_t max_attempts,
                                          bool require_transition) {
  const std::int64_t len = params.block_len;
  const RowSampler transition(model.transition.probs);
  SymbolSeq block(static_cast<std::size_t>(len));
  for (std::int64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    Index state = sample_index(model.stationary, stream.next_double());
    block[0] = static_cast<Symbol>(state);
    for (std::int64_t k = 1; k < len; ++k) {
      state = transition.pick(state, stream.next_double());
      block[static_cast<std::size_t>(k)] = static_cast<Symbol>(state);
    }
    if (classify_block_coarse(block, params) != event) continue;
    if (require_transition && count_transitions(block) == 0) continue;
    return block;
  }
  std::ostringstream msg;
  msg << "no block matching the requested event class after " << max_attempts
      << " attempts";
  fail(errc::rejection_budget_exceeded, msg.str());
}

}  // namespace rarehmm
