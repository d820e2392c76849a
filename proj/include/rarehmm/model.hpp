#pragma once

#include "rarehmm/types.hpp"

#include <cstdint>

namespace rarehmm {

inline constexpr double kValidationTol = 1e-12;  // input validation
inline constexpr double kIdentityTol = 1e-10;    // exact-identity checks

/// Rate matrix A of the one-parameter family P(p) = I + p*A.
/// Diagonal strictly negative, off-diagonal non-negative, zero row sums,
/// and the off-diagonal support graph strongly connected.
struct GeneratorMatrix {
  Matrix rates;

  Index n_states() const { return rates.rows(); }
  double max_exit_rate() const {
    return rates.diagonal().cwiseAbs().maxCoeff();
  }
  // Exclusive upper bound on p keeping I + p*A row-stochastic.
  double p_max() const { return 1.0 / max_exit_rate(); }
};

/// Row-stochastic matrix.
struct TransitionMatrix {
  Matrix probs;
  Index n_states() const { return probs.rows(); }
};

/// Memoryless channel: emission(i, j) = P(output j | input i).
struct Channel {
  Matrix emission;
  Index n_inputs() const { return emission.rows(); }
  Index n_outputs() const { return emission.cols(); }
};

/// Probability vector.
struct Distribution {
  Vector weights;
  Index size() const { return weights.size(); }
};

GeneratorMatrix build_generator(const Matrix& raw);
Channel build_channel(const Matrix& raw);

TransitionMatrix transition_matrix(const GeneratorMatrix& gen, double p);

// Solves pi * A = 0 with the normalization sum(pi) = 1. Independent of p.
Distribution stationary_distribution(const GeneratorMatrix& gen);

// -sum w log w over the entries, 0 log 0 = 0. Nats.
double entropy_nats(const Eigen::Ref<const Vector>& weights);

// KL(a || b) in nats; +inf where a puts mass outside the support of b.
double kl_divergence(const Eigen::Ref<const Vector>& a,
                     const Eigen::Ref<const Vector>& b);

// Entropy rate of the chain, -sum_i pi_i sum_j P_ij log P_ij.
double markov_entropy(const TransitionMatrix& P, const Distribution& pi);

// Entropy of the channel output for a fixed input symbol.
double channel_entropy(const Channel& channel, Index input);

double average_channel_entropy(const Channel& channel, const Distribution& pi);

/// Pairwise row-distinguishability of a channel. The channel separates
/// states statistically iff all row pairs are distinct, equivalently all
/// off-diagonal KL divergences are strictly positive.
struct DistinguishingReport {
  bool distinguishing = false;
  Matrix kl;  // kl(i, i') = KL(row i || row i'); +inf on support mismatch
  double min_off_diagonal() const;
};
DistinguishingReport check_distinguishing(const Channel& channel);

/// Assembled chain/channel pair at a fixed p with cached exact entropies.
/// Immutable after construction.
struct HmmModel {
  GeneratorMatrix generator;
  double p = 0.0;
  TransitionMatrix transition;  // I + p*A
  Channel channel;
  Distribution stationary;
  double entropy_markov = 0.0;       // h(P(p))
  double entropy_channel_avg = 0.0;  // sum_i pi_i * channel_entropy(i)
  std::uint64_t fingerprint = 0;     // hash of (A, Q, p)

  Index n_states() const { return generator.n_states(); }
  Index n_outputs() const { return channel.n_outputs(); }
};
HmmModel make_model(const GeneratorMatrix& gen, const Channel& channel,
                    double p);

/// The pair process (X_n, Y_n) as a Markov chain on S x T, state (i, j)
/// mapped to index i*|T|+j.
struct JointChain {
  TransitionMatrix transition;
  Distribution stationary;
};
JointChain joint_chain(const HmmModel& model);

}  // namespace rarehmm
