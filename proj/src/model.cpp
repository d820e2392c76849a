#include "rarehmm/model.hpp"

#include "rarehmm/errors.hpp"
#include "rarehmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <vector>

namespace rarehmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Strong connectivity of the directed graph on positive off-diagonal
// entries: every node reachable from 0 along edges and along reversed
// edges.
bool strongly_connected(const Matrix& rates) {
  const Index n = rates.rows();
  auto full_reach = [&](bool reversed) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v) {
        if (v == u || seen[static_cast<std::size_t>(v)]) continue;
        const double w = reversed ? rates(v, u) : rates(u, v);
        if (w > 0.0) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c; });
  };
  return full_reach(false) && full_reach(true);
}

double clamp_tiny_negative(double h) {
  return (h < 0.0 && h > -1e-12) ? 0.0 : h;
}

}  // namespace

GeneratorMatrix build_generator(const Matrix& raw) {
  if (raw.rows() != raw.cols() || raw.rows() < 2) {
    fail(errc::model_invalid, "generator must be square with at least 2 states");
  }
  const Index n = raw.rows();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double v = raw(i, j);
      if (!std::isfinite(v)) {
        fail(errc::model_invalid, "generator entries must be finite");
      }
      if (i == j && v >= 0.0) {
        std::ostringstream msg;
        msg << "diagonal entry (" << i << "," << i << ") must be negative";
        fail(errc::bad_sign, msg.str());
      }
      if (i != j && v < 0.0) {
        std::ostringstream msg;
        msg << "off-diagonal entry (" << i << "," << j << ") must be non-negative";
        fail(errc::bad_sign, msg.str());
      }
    }
    const double row_sum = raw.row(i).sum();
    if (std::abs(row_sum) > kValidationTol) {
      std::ostringstream msg;
      msg << "row " << i << " sums to " << row_sum << ", expected 0";
      fail(errc::non_zero_row_sum, msg.str());
    }
  }
  if (!strongly_connected(raw)) {
    fail(errc::reducible,
         "off-diagonal support graph is not strongly connected");
  }
  return GeneratorMatrix{raw};
}

Channel build_channel(const Matrix& raw) {
  if (raw.rows() < 1 || raw.cols() < 1) {
    fail(errc::model_invalid, "channel must be non-empty");
  }
  for (Index i = 0; i < raw.rows(); ++i) {
    for (Index j = 0; j < raw.cols(); ++j) {
      const double v = raw(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream msg;
        msg << "channel row " << i << " has a negative or non-finite entry";
        fail(errc::model_invalid, msg.str());
      }
    }
    const double row_sum = raw.row(i).sum();
    if (std::abs(row_sum - 1.0) > kValidationTol) {
      std::ostringstream msg;
      msg << "channel row " << i << " sums to " << row_sum << ", expected 1";
      fail(errc::model_invalid, msg.str());
    }
  }
  return Channel{raw};
}

TransitionMatrix transition_matrix(const GeneratorMatrix& gen, double p) {
  if (!(p > 0.0) || !(p < gen.p_max())) {
    std::ostringstream msg;
    msg << "p = " << p << " outside (0, " << gen.p_max() << ")";
    fail(errc::p_out_of_range, msg.str());
  }
  const Index n = gen.n_states();
  Matrix probs = Matrix::Identity(n, n) + p * gen.rates;
  return TransitionMatrix{std::move(probs)};
}

Distribution stationary_distribution(const GeneratorMatrix& gen) {
  const Index n = gen.n_states();
  // A^T pi = 0 with the last equation replaced by the normalization.
  Matrix system = gen.rates.transpose();
  system.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::ColPivHouseholderQR<Matrix> qr(system);
  Vector pi = qr.solve(rhs);
  const double residual = (gen.rates.transpose() * pi).cwiseAbs().maxCoeff();
  const double mass_defect = std::abs(pi.sum() - 1.0);
  if (!pi.allFinite() || residual > kIdentityTol || mass_defect > 1e-9 ||
      pi.minCoeff() < -1e-9) {
    fail(errc::singular_system,
         "stationary solve failed; generator should make this impossible");
  }
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return Distribution{std::move(pi)};
}

double entropy_nats(const Eigen::Ref<const Vector>& weights) {
  double h = 0.0;
  for (Index k = 0; k < weights.size(); ++k) {
    const double w = weights(k);
    if (w > 0.0) h -= w * std::log(w);
  }
  return clamp_tiny_negative(h);
}

double kl_divergence(const Eigen::Ref<const Vector>& a,
                     const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) {
    fail(errc::length_mismatch, "KL divergence needs equal-length vectors");
  }
  double d = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    if (a(k) > 0.0) {
      if (b(k) <= 0.0) return kInf;
      d += a(k) * (std::log(a(k)) - std::log(b(k)));
    }
  }
  return clamp_tiny_negative(d);
}

double markov_entropy(const TransitionMatrix& P, const Distribution& pi) {
  double h = 0.0;
  for (Index i = 0; i < P.n_states(); ++i) {
    const double w = pi.weights(i);
    if (w <= 0.0) continue;
    for (Index j = 0; j < P.n_states(); ++j) {
      const double q = P.probs(i, j);
      if (q > 0.0) h -= w * q * std::log(q);
    }
  }
  return clamp_tiny_negative(h);
}

double channel_entropy(const Channel& channel, Index input) {
  if (input < 0 || input >= channel.n_inputs()) {
    fail(errc::model_invalid, "channel input index out of range");
  }
  return entropy_nats(channel.emission.row(input).transpose());
}

double average_channel_entropy(const Channel& channel,
                               const Distribution& pi) {
  double h = 0.0;
  for (Index i = 0; i < channel.n_inputs(); ++i) {
    h += pi.weights(i) * channel_entropy(channel, i);
  }
  return h;
}

double DistinguishingReport::min_off_diagonal() const {
  double m = kInf;
  for (Index i = 0; i < kl.rows(); ++i) {
    for (Index j = 0; j < kl.cols(); ++j) {
      if (i != j) m = std::min(m, kl(i, j));
    }
  }
  return m;
}

DistinguishingReport check_distinguishing(const Channel& channel) {
  const Index s = channel.n_inputs();
  DistinguishingReport report;
  report.kl = Matrix::Zero(s, s);
  report.distinguishing = true;
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) {
      if (i == j) continue;
      report.kl(i, j) = kl_divergence(channel.emission.row(i).transpose(),
                                      channel.emission.row(j).transpose());
      const bool identical_rows =
          (channel.emission.row(i).array() == channel.emission.row(j).array())
              .all();
      if (i < j && identical_rows) report.distinguishing = false;
    }
  }
  return report;
}

HmmModel make_model(const GeneratorMatrix& gen, const Channel& channel,
                    double p) {
  if (channel.n_inputs() != gen.n_states()) {
    fail(errc::model_invalid,
         "channel input alphabet must match the state space");
  }
  HmmModel model;
  model.generator = gen;
  model.p = p;
  model.transition = transition_matrix(gen, p);
  model.channel = channel;
  model.stationary = stationary_distribution(gen);
  model.entropy_markov = markov_entropy(model.transition, model.stationary);
  model.entropy_channel_avg = average_channel_entropy(channel, model.stationary);

  std::uint64_t h = 0x243f6a8885a308d3ULL;
  auto absorb = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ bits);
  };
  absorb(static_cast<double>(gen.n_states()));
  absorb(static_cast<double>(channel.n_outputs()));
  for (Index i = 0; i < gen.n_states(); ++i)
    for (Index j = 0; j < gen.n_states(); ++j) absorb(gen.rates(i, j));
  for (Index i = 0; i < channel.n_inputs(); ++i)
    for (Index j = 0; j < channel.n_outputs(); ++j)
      absorb(channel.emission(i, j));
  absorb(p);
  model.fingerprint = h;
  return model;
}

JointChain joint_chain(const HmmModel& model) {
  const Index s = model.n_states();
  const Index t = model.n_outputs();
  const Index m = s * t;
  Matrix probs(m, m);
  Vector pi(m);
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < t; ++j) {
      const Index row = i * t + j;
      pi(row) = model.stationary.weights(i) * model.channel.emission(i, j);
      for (Index i2 = 0; i2 < s; ++i2) {
        for (Index j2 = 0; j2 < t; ++j2) {
          probs(row, i2 * t + j2) =
              model.transition.probs(i, i2) * model.channel.emission(i2, j2);
        }
      }
    }
  }
  return JointChain{TransitionMatrix{std::move(probs)},
                    Distribution{std::move(pi)}};
}

}  // namespace rarehmm
