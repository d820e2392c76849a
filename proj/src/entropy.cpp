#include "rarehmm/entropy.hpp"

#include "rarehmm/errors.hpp"
#include "rarehmm/parallel.hpp"
#include "rarehmm/sampling.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace rarehmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Elementwise log with log 0 = -inf kept as an explicit sentinel.
Matrix log_matrix(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      out(i, j) = m(i, j) > 0.0 ? std::log(m(i, j)) : kNegInf;
    }
  }
  return out;
}

}  // namespace

double forward_log_likelihood(const HmmModel& model,
                              std::span<const Symbol> y) {
  if (y.empty()) fail(errc::model_invalid, "observation sequence is empty");
  const Index s = model.n_states();
  // Column-major layouts so the inner sums walk contiguous memory:
  // pt(j*s + i) = P(i, j), qt(o*s + j) = Q(j, o).
  const Matrix& pm = model.transition.probs;
  const Matrix& qm = model.channel.emission;
  std::vector<double> pt(static_cast<std::size_t>(s * s));
  for (Index j = 0; j < s; ++j)
    for (Index i = 0; i < s; ++i)
      pt[static_cast<std::size_t>(j * s + i)] = pm(i, j);
  std::vector<double> qt(static_cast<std::size_t>(qm.cols() * s));
  for (Index o = 0; o < qm.cols(); ++o)
    for (Index j = 0; j < s; ++j)
      qt[static_cast<std::size_t>(o * s + j)] = qm(j, o);

  std::vector<double> alpha(static_cast<std::size_t>(s));
  std::vector<double> tmp(static_cast<std::size_t>(s));

  double log_likelihood = 0.0;
  double scale_acc = 1.0;

  const double* q0 = qt.data() + static_cast<std::size_t>(y[0]) * s;
  double c = 0.0;
  for (Index i = 0; i < s; ++i) {
    alpha[static_cast<std::size_t>(i)] = model.stationary.weights(i) * q0[i];
    c += alpha[static_cast<std::size_t>(i)];
  }
  if (c == 0.0) return kNegInf;
  double inv = 1.0 / c;
  for (Index i = 0; i < s; ++i) alpha[static_cast<std::size_t>(i)] *= inv;
  scale_acc = c;

  for (std::size_t k = 1; k < y.size(); ++k) {
    const double* qc = qt.data() + static_cast<std::size_t>(y[k]) * s;
    c = 0.0;
    for (Index j = 0; j < s; ++j) {
      const double* col = pt.data() + static_cast<std::size_t>(j) * s;
      double acc = 0.0;
      for (Index i = 0; i < s; ++i) acc += alpha[static_cast<std::size_t>(i)] * col[i];
      acc *= qc[j];
      tmp[static_cast<std::size_t>(j)] = acc;
      c += acc;
    }
    if (c == 0.0) return kNegInf;
    inv = 1.0 / c;
    for (Index j = 0; j < s; ++j)
      alpha[static_cast<std::size_t>(j)] = tmp[static_cast<std::size_t>(j)] * inv;
    // Batch the logs: every step scale is in (0, 1], so the accumulator
    // only shrinks; flush well before the double underflow threshold.
    scale_acc *= c;
    if (scale_acc < 1e-280) {
      log_likelihood += std::log(scale_acc);
      scale_acc = 1.0;
    }
  }
  return log_likelihood + std::log(scale_acc);
}

double path_log_prob(const HmmModel& model, std::span<const Symbol> x,
                     std::span<const Symbol> y) {
  if (x.size() != y.size()) {
    fail(errc::length_mismatch, "hidden and observed paths differ in length");
  }
  if (x.empty()) fail(errc::model_invalid, "paths are empty");
  const Index s = model.n_states();
  const Matrix logp = log_matrix(model.transition.probs);
  const Matrix logq = log_matrix(model.channel.emission);
  const double pi0 = model.stationary.weights(x[0]);
  if (pi0 <= 0.0) return kNegInf;
  double lp = std::log(pi0);
  const double* lpd = logp.data();  // column-major: (i, j) at j*s + i
  const double* lqd = logq.data();
  lp += lqd[static_cast<std::size_t>(y[0]) * s + x[0]];
  for (std::size_t k = 1; k < x.size(); ++k) {
    lp += lpd[static_cast<std::size_t>(x[k]) * s + x[k - 1]];
    lp += lqd[static_cast<std::size_t>(y[k]) * s + x[k]];
  }
  return std::isnan(lp) ? kNegInf : lp;
}

double posterior_log_likelihood(const HmmModel& model,
                                std::span<const Symbol> x,
                                std::span<const Symbol> y) {
  const double joint = path_log_prob(model, x, y);
  if (joint == kNegInf) return kNegInf;
  return joint - forward_log_likelihood(model, y);
}

const char* entropy_kind_name(EntropyKind kind) noexcept {
  switch (kind) {
    case EntropyKind::marginal: return "marginal";
    case EntropyKind::conditional: return "conditional";
    case EntropyKind::joint: return "joint";
  }
  return "unknown";
}

namespace {

struct ReplicateValues {
  double marginal = 0.0;
  double conditional = 0.0;
  double joint = 0.0;
};

EntropyEstimate summarize(const std::vector<ReplicateValues>& values,
                          double ReplicateValues::*field, std::int64_t n,
                          EntropyKind kind) {
  const int reps = static_cast<int>(values.size());
  double mean = 0.0;
  for (const auto& v : values) mean += v.*field;
  mean /= reps;
  double var = 0.0;
  for (const auto& v : values) {
    const double d = v.*field - mean;
    var += d * d;
  }
  var /= (reps - 1);
  EntropyEstimate est;
  est.mean = mean;
  est.stderr_ = std::sqrt(var / reps);
  est.n = n;
  est.reps = reps;
  est.kind = kind;
  return est;
}

}  // namespace

EntropyTriple estimate_entropy_mc_all(const HmmModel& model, std::int64_t n,
                                      int reps, std::uint64_t master_seed,
                                      std::uint64_t stream_base, int workers) {
  if (n < 1000) fail(errc::model_invalid, "Monte Carlo needs n >= 1000");
  if (reps < 2) fail(errc::model_invalid, "Monte Carlo needs reps >= 2");

  std::vector<ReplicateValues> values(static_cast<std::size_t>(reps));
  parallel_for(reps, workers, [&](int r) {
    RngStream stream(master_seed, stream_base + static_cast<std::uint64_t>(r));
    const PathSample path = sample_path(model, n, stream);
    const double lp_y = forward_log_likelihood(model, path.y);
    const double lp_xy = path_log_prob(model, path.x, path.y);
    auto& v = values[static_cast<std::size_t>(r)];
    const double dn = static_cast<double>(n);
    v.marginal = -lp_y / dn;
    v.conditional = (lp_y - lp_xy) / dn;
    v.joint = -lp_xy / dn;
  });

  EntropyTriple triple;
  triple.marginal =
      summarize(values, &ReplicateValues::marginal, n, EntropyKind::marginal);
  triple.conditional = summarize(values, &ReplicateValues::conditional, n,
                                 EntropyKind::conditional);
  triple.joint =
      summarize(values, &ReplicateValues::joint, n, EntropyKind::joint);
  return triple;
}

EntropyEstimate estimate_entropy_mc(const HmmModel& model, std::int64_t n,
                                    int reps, std::uint64_t master_seed,
                                    EntropyKind kind, int workers) {
  const EntropyTriple triple =
      estimate_entropy_mc_all(model, n, reps, master_seed, 0, workers);
  switch (kind) {
    case EntropyKind::marginal: return triple.marginal;
    case EntropyKind::conditional: return triple.conditional;
    case EntropyKind::joint: return triple.joint;
  }
  return triple.marginal;
}

namespace {

// Depth-first enumeration of output prefixes. At depth k the state matrix
// holds alpha(i, j) = P(X_1 = i, Y_1..Y_k = w, X_k = j); entropy terms for
// the prefix law and the (X_1, prefix) law accumulate per depth.
struct BracketAccumulator {
  std::vector<double> h_prefix;        // H(Y_1..Y_k)
  std::vector<double> h_with_initial;  // H(X_1, Y_1..Y_k)
};

void bracket_dfs(const Matrix& alpha, int depth, int max_depth,
                 const Matrix& transition, const Matrix& emission,
                 BracketAccumulator& acc) {
  const Index s = alpha.rows();
  const double pw = alpha.sum();
  if (pw <= 0.0) return;
  acc.h_prefix[static_cast<std::size_t>(depth)] -= pw * std::log(pw);
  for (Index i = 0; i < s; ++i) {
    const double pxi = alpha.row(i).sum();
    if (pxi > 0.0) {
      acc.h_with_initial[static_cast<std::size_t>(depth)] -=
          pxi * std::log(pxi);
    }
  }
  if (depth == max_depth) return;
  const Matrix propagated = alpha * transition;
  for (Index o = 0; o < emission.cols(); ++o) {
    const Matrix child =
        propagated.array().rowwise() *
        emission.col(o).transpose().array();
    bracket_dfs(child, depth + 1, max_depth, transition, emission, acc);
  }
}

}  // namespace

std::vector<Bracket> bracket_table(const HmmModel& model, int max_depth,
                                   std::int64_t budget) {
  if (max_depth < 1) fail(errc::model_invalid, "bracket depth must be >= 1");
  const Index t = model.n_outputs();
  double terms = 1.0;
  for (int k = 0; k < max_depth; ++k) {
    terms *= static_cast<double>(t);
    if (terms > static_cast<double>(budget)) {
      std::ostringstream msg;
      msg << "|T|^" << max_depth << " exceeds the term budget " << budget;
      fail(errc::budget_exceeded, msg.str());
    }
  }

  const Index s = model.n_states();
  BracketAccumulator acc;
  acc.h_prefix.assign(static_cast<std::size_t>(max_depth) + 1, 0.0);
  acc.h_with_initial.assign(static_cast<std::size_t>(max_depth) + 1, 0.0);
  acc.h_prefix[0] = 0.0;
  acc.h_with_initial[0] = entropy_nats(model.stationary.weights);

  // Depth 1 seeds: alpha(i, j) = [i == j] pi_i Q(i, o).
  for (Index o = 0; o < t; ++o) {
    Matrix alpha = Matrix::Zero(s, s);
    for (Index i = 0; i < s; ++i) {
      alpha(i, i) = model.stationary.weights(i) * model.channel.emission(i, o);
    }
    bracket_dfs(alpha, 1, max_depth, model.transition.probs,
                model.channel.emission, acc);
  }

  std::vector<Bracket> table;
  table.reserve(static_cast<std::size_t>(max_depth));
  for (int k = 1; k <= max_depth; ++k) {
    Bracket b;
    b.depth = k;
    b.upper = acc.h_prefix[static_cast<std::size_t>(k)] -
              acc.h_prefix[static_cast<std::size_t>(k - 1)];
    b.lower = acc.h_with_initial[static_cast<std::size_t>(k)] -
              acc.h_with_initial[static_cast<std::size_t>(k - 1)];
    table.push_back(b);
  }
  return table;
}

Bracket exact_bracket(const HmmModel& model, int depth, std::int64_t budget) {
  return bracket_table(model, depth, budget).back();
}

namespace {

// Unnormalized middle-symbol posterior weights w_k = P(i,k) P(k,i2) Q(k,j).
Vector middle_symbol_weights(const HmmModel& model, Index i, Index i2,
                             Index j) {
  const Index s = model.n_states();
  if (i < 0 || i >= s || i2 < 0 || i2 >= s || j < 0 || j >= model.n_outputs()) {
    fail(errc::model_invalid, "middle-symbol event indices out of range");
  }
  Vector w(s);
  for (Index k = 0; k < s; ++k) {
    w(k) = model.transition.probs(i, k) * model.transition.probs(k, i2) *
           model.channel.emission(k, j);
  }
  return w;
}

}  // namespace

Distribution posterior_middle_symbol(const HmmModel& model, Index i, Index i2,
                                     Index j) {
  Vector w = middle_symbol_weights(model, i, i2, j);
  const double total = w.sum();
  if (total <= 0.0) {
    fail(errc::empty_event,
         "conditioning event {X_-1, X_1, Y_0} has probability zero");
  }
  w /= total;
  return Distribution{std::move(w)};
}

MiddleSymbolEvent middle_symbol_event(const HmmModel& model, Index i, Index i2,
                                      Index j) {
  const Vector w = middle_symbol_weights(model, i, i2, j);
  const double total = w.sum();
  if (total <= 0.0) {
    fail(errc::empty_event,
         "conditioning event {X_-1, X_1, Y_0} has probability zero");
  }
  MiddleSymbolEvent event;
  event.probability = model.stationary.weights(i) * total;
  event.entropy = entropy_nats(w / total);
  return event;
}

}  // namespace rarehmm
