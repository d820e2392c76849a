#pragma once

#include "rarehmm/model.hpp"
#include "rarehmm/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rarehmm {

inline constexpr std::int64_t kDefaultBracketBudget = std::int64_t{1} << 24;

// log P(Y = y) under stationary start, evaluated by the forward recursion
// with per-step renormalization (no underflow at any length). Returns
// -inf iff the observation has probability zero.
double forward_log_likelihood(const HmmModel& model,
                              std::span<const Symbol> y);

// log P(X = x, Y = y) = log pi_{x0} + sum log P + sum log Q.
double path_log_prob(const HmmModel& model, std::span<const Symbol> x,
                     std::span<const Symbol> y);

// log P(X = x | Y = y); -inf is a valid value, never a floating exception.
double posterior_log_likelihood(const HmmModel& model,
                                std::span<const Symbol> x,
                                std::span<const Symbol> y);

enum class EntropyKind { marginal, conditional, joint };

const char* entropy_kind_name(EntropyKind kind) noexcept;

/// Monte Carlo entropy-rate estimate: mean and standard error across
/// replicates of the per-path plug-in value.
struct EntropyEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::int64_t n = 0;
  int reps = 0;
  EntropyKind kind = EntropyKind::marginal;
};

/// The three estimates evaluated on common sampled paths, so that
/// marginal + conditional = joint holds per replicate up to rounding.
struct EntropyTriple {
  EntropyEstimate marginal;
  EntropyEstimate conditional;
  EntropyEstimate joint;
};

// Replicate r draws its path from RngStream(master_seed, stream_base + r);
// results reduce in replicate order regardless of worker count.
EntropyTriple estimate_entropy_mc_all(const HmmModel& model, std::int64_t n,
                                      int reps, std::uint64_t master_seed,
                                      std::uint64_t stream_base = 0,
                                      int workers = 1);

EntropyEstimate estimate_entropy_mc(const HmmModel& model, std::int64_t n,
                                    int reps, std::uint64_t master_seed,
                                    EntropyKind kind, int workers = 1);

/// Exact conditional-entropy sandwich at depth n:
///   lower = H(Y_n | Y_1..Y_{n-1}, X_1) <= h(Y) <= H(Y_n | Y_1..Y_{n-1}) = upper,
/// both by exhaustive enumeration over output prefixes.
struct Bracket {
  int depth = 0;
  double lower = 0.0;
  double upper = 0.0;
};

// All depths 1..max_depth from one depth-first enumeration. Errors with
// budget_exceeded when |T|^max_depth exceeds the term budget.
std::vector<Bracket> bracket_table(const HmmModel& model, int max_depth,
                                   std::int64_t budget = kDefaultBracketBudget);
Bracket exact_bracket(const HmmModel& model, int depth,
                      std::int64_t budget = kDefaultBracketBudget);

// Exact posterior of the middle symbol given neighbours and one output:
// P(X_0 = k | X_{-1} = i, X_1 = i2, Y_0 = j) over all states k.
Distribution posterior_middle_symbol(const HmmModel& model, Index i, Index i2,
                                     Index j);

/// Probability of the conditioning event {X_{-1}=i, X_1=i2, Y_0=j}
/// together with the entropy of the middle-symbol posterior.
struct MiddleSymbolEvent {
  double probability = 0.0;
  double entropy = 0.0;
};
MiddleSymbolEvent middle_symbol_event(const HmmModel& model, Index i, Index i2,
                                      Index j);

}  // namespace rarehmm
