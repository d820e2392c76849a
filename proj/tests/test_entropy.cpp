#include "rarehmm/entropy.hpp"

#include "rarehmm/errors.hpp"
#include "rarehmm/sampling.hpp"

#include "support/oracles.hpp"
#include "support/test_models.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace rarehmm;
using namespace rarehmm::testing;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
double g(double q) { return -q * std::log(q) - (1 - q) * std::log(1 - q); }
}  // namespace

TEST_CASE("forward likelihood: one-step closed form") {
  const HmmModel model = bsc_model(0.01, 0.1);
  const SymbolSeq y{0};
  CHECK(forward_log_likelihood(model, y) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("forward likelihood: noiseless channel reduces to the chain") {
  const HmmModel model = noiseless_model(0.02);
  const PathSample path = sample_path(model, 5000, RngStream(3, 0));
  double direct = std::log(model.stationary.weights(path.y[0]));
  for (std::size_t k = 1; k < path.y.size(); ++k) {
    direct += std::log(model.transition.probs(path.y[k - 1], path.y[k]));
  }
  CHECK(forward_log_likelihood(model, path.y) ==
        doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("forward and posterior match brute-force enumeration") {
  RngStream rng(808, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index s = 2 + static_cast<Index>(rng.next_u64() % 2);
    const Index t = 2 + static_cast<Index>(rng.next_u64() % 2);
    const HmmModel model = random_model(s, t, rng, 0.2 + 0.5 * rng.next_double());
    const std::size_t n = 1 + rng.next_u64() % 8;
    SymbolSeq y(n), x(n);
    for (std::size_t k = 0; k < n; ++k) {
      y[k] = static_cast<Symbol>(rng.next_u64() % t);
      x[k] = static_cast<Symbol>(rng.next_u64() % s);
    }
    CHECK(forward_log_likelihood(model, y) ==
          doctest::Approx(enum_log_prob_y(model, y)).epsilon(1e-9));
    CHECK(posterior_log_likelihood(model, x, y) ==
          doctest::Approx(enum_log_posterior(model, x, y)).epsilon(1e-9));
  }
}

TEST_CASE("impossible observations give -inf, not exceptions") {
  Matrix q(2, 3);
  q << 0.9, 0.1, 0.0, 0.2, 0.8, 0.0;  // output 2 unreachable
  const HmmModel model =
      make_model(binary_symmetric_generator(), build_channel(q), 0.1);
  const SymbolSeq y{0, 2, 1};
  CHECK(forward_log_likelihood(model, y) == -kInf);
  const SymbolSeq x{0, 0, 0};
  CHECK(posterior_log_likelihood(model, x, y) == -kInf);
}

TEST_CASE("posterior is certain for a noiseless channel") {
  const HmmModel model = noiseless_model(0.05);
  const PathSample path = sample_path(model, 2000, RngStream(4, 0));
  CHECK(std::abs(posterior_log_likelihood(model, path.x, path.y)) < 1e-9);

  SymbolSeq wrong = path.x;
  wrong[100] ^= 1;
  CHECK(posterior_log_likelihood(model, wrong, path.y) == -kInf);
}

TEST_CASE("monte carlo: conditional entropy of a noiseless channel is zero") {
  const HmmModel model = noiseless_model(0.05);
  const EntropyEstimate est = estimate_entropy_mc(
      model, 20000, 5, 99, EntropyKind::conditional);
  CHECK(std::abs(est.mean) < 1e-9);
}

TEST_CASE("monte carlo: joint estimate matches the closed form") {
  const HmmModel model = bsc_model(0.01, 0.1);
  const EntropyEstimate est =
      estimate_entropy_mc(model, 100000, 8, 123, EntropyKind::joint);
  const double exact = model.entropy_markov + model.entropy_channel_avg;
  CHECK(std::abs(est.mean - exact) < 3 * est.stderr_);
  CHECK(est.mean >= 0.0);
}

TEST_CASE("monte carlo: per-path chain rule is an identity") {
  const HmmModel model = bsc_model(0.01, 0.1);
  for (int rep = 0; rep < 5; ++rep) {
    const PathSample path =
        sample_path(model, 10000, RngStream(321, static_cast<std::uint64_t>(rep)));
    const double n = static_cast<double>(path.x.size());
    const double marginal = -forward_log_likelihood(model, path.y) / n;
    const double conditional =
        -posterior_log_likelihood(model, path.x, path.y) / n;
    const double joint = -path_log_prob(model, path.x, path.y) / n;
    CHECK(std::abs(marginal + conditional - joint) < 1e-9);
  }
}

TEST_CASE("monte carlo: replicate results are worker-count invariant") {
  const HmmModel model = bsc_model(0.02, 0.1);
  const EntropyTriple serial = estimate_entropy_mc_all(model, 5000, 6, 7, 0, 1);
  const EntropyTriple threaded =
      estimate_entropy_mc_all(model, 5000, 6, 7, 0, 4);
  CHECK(serial.marginal.mean == threaded.marginal.mean);
  CHECK(serial.conditional.stderr_ == threaded.conditional.stderr_);
}

TEST_CASE("bracket: monotone sandwich") {
  const HmmModel model = bsc_model(0.01, 0.1);
  const auto table = bracket_table(model, 12);
  REQUIRE(table.size() == 12);
  for (std::size_t k = 0; k < table.size(); ++k) {
    CHECK(table[k].lower <= table[k].upper);
    if (k > 0) {
      CHECK(table[k].upper <= table[k - 1].upper + 1e-12);
      CHECK(table[k].lower >= table[k - 1].lower - 1e-12);
    }
  }
  CHECK(table[0].upper == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bracket: regression values at depth 12") {
  // Frozen from the first enumeration run of this configuration.
  const HmmModel model = bsc_model(0.01, 0.1);
  const Bracket b = exact_bracket(model, 12);
  CHECK(b.lower == doctest::Approx(0.370307604180).epsilon(1e-9));
  CHECK(b.upper == doctest::Approx(0.370344348753).epsilon(1e-9));
  CHECK(b.upper - b.lower < 0.02);
}

TEST_CASE("bracket: noiseless channel collapses to the chain entropy") {
  const HmmModel model = noiseless_model(0.05);
  const auto table = bracket_table(model, 6);
  CHECK(table[0].upper == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (std::size_t k = 1; k < table.size(); ++k) {
    CHECK(table[k].lower == doctest::Approx(g(0.05)).epsilon(1e-12));
    CHECK(table[k].upper == doctest::Approx(g(0.05)).epsilon(1e-12));
  }
}

TEST_CASE("bracket: term budget") {
  RngStream rng(5150, 0);
  const HmmModel model = random_model(2, 5, rng);
  CHECK_THROWS_AS(bracket_table(model, 12), Error);  // 5^12 > 2^24
  try {
    bracket_table(model, 12);
  } catch (const Error& e) {
    CHECK(e.code() == errc::budget_exceeded);
  }
}

TEST_CASE("bracket contains the monte carlo marginal estimate") {
  const HmmModel model = bsc_model(0.01, 0.1);
  const Bracket b = exact_bracket(model, 12);
  const EntropyEstimate est =
      estimate_entropy_mc(model, 200000, 8, 2718, EntropyKind::marginal);
  CHECK(est.mean > b.lower - 3 * est.stderr_);
  CHECK(est.mean < b.upper + 3 * est.stderr_);
}

TEST_CASE("middle-symbol posterior: symmetric case cancels to the channel") {
  for (double p : {0.01, 0.001, 0.2}) {
    const HmmModel model = bsc_model(p, 0.1);
    const Distribution post = posterior_middle_symbol(model, 0, 1, 0);
    CHECK(post.weights(0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(post.weights(1) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(post.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

namespace {

HmmModel three_state_model(double p) {
  Matrix a(3, 3);
  a << -1.0, 0.7, 0.3, 0.2, -0.6, 0.4, 0.5, 0.5, -1.0;
  Matrix q(3, 3);
  q << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.3, 0.3, 0.4;
  return make_model(build_generator(a), build_channel(q), p);
}

}  // namespace

TEST_CASE("middle-symbol posterior: small-p limit") {
  const Index i = 0, i2 = 1, j = 0;
  const double q_i = 0.6, q_i2 = 0.2;
  Vector limit = Vector::Zero(3);
  limit(0) = q_i / (q_i + q_i2);
  limit(1) = q_i2 / (q_i + q_i2);
  double prev = kInf;
  for (double p : {1e-2, 1e-3, 1e-4}) {
    const Distribution post = posterior_middle_symbol(three_state_model(p), i, i2, j);
    const double dist = (post.weights - limit).cwiseAbs().maxCoeff();
    CHECK(dist < prev);
    prev = dist;
    if (p == 1e-4) CHECK(dist < 0.05);
  }
}

TEST_CASE("middle-symbol posterior: two-step paths through third states") {
  // 0 -> 1 has rate zero, so the event {X_-1=0, X_1=1} is only reachable
  // through state 2; the posterior must concentrate there.
  Matrix a(3, 3);
  a << -1.0, 0.0, 1.0, 1.0, -1.0, 0.0, 0.0, 1.0, -1.0;
  Matrix q(3, 3);
  q << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.3, 0.3, 0.4;
  const HmmModel model = make_model(build_generator(a), build_channel(q), 0.05);
  const Distribution post = posterior_middle_symbol(model, 0, 1, 0);
  CHECK(post.weights(2) == doctest::Approx(1.0).epsilon(1e-12));

  // Same event but with the third state unable to emit output j.
  Matrix q_blocked(3, 3);
  q_blocked << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.0, 0.5, 0.5;
  const HmmModel blocked =
      make_model(build_generator(a), build_channel(q_blocked), 0.05);
  CHECK_THROWS_AS(posterior_middle_symbol(blocked, 0, 1, 0), Error);
  try {
    posterior_middle_symbol(blocked, 0, 1, 0);
  } catch (const Error& e) {
    CHECK(e.code() == errc::empty_event);
  }
}

TEST_CASE("middle-symbol posterior: relabeling uninvolved states") {
  // Swap states 1 and 2 everywhere except the event (i=0, i2=3 kept fixed);
  // posterior entries must permute accordingly.
  RngStream rng(4242, 0);
  const HmmModel model = random_model(4, 3, rng, 0.3);
  Eigen::Vector4i perm(0, 2, 1, 3);
  Matrix a2(4, 4), q2(4, 3);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      a2(perm(i), perm(j)) = model.generator.rates(i, j);
    }
    for (Index j = 0; j < 3; ++j) {
      q2(perm(i), j) = model.channel.emission(i, j);
    }
  }
  const HmmModel permuted =
      make_model(build_generator(a2), build_channel(q2), model.p);
  const Distribution post = posterior_middle_symbol(model, 0, 3, 1);
  const Distribution post2 = posterior_middle_symbol(permuted, 0, 3, 1);
  for (Index k = 0; k < 4; ++k) {
    CHECK(post2.weights(perm(k)) ==
          doctest::Approx(post.weights(k)).epsilon(1e-12));
  }
}

TEST_CASE("middle-symbol event probability and entropy") {
  for (double p : {0.01, 0.1}) {
    const HmmModel model = bsc_model(p, 0.1);
    const MiddleSymbolEvent event = middle_symbol_event(model, 0, 1, 0);
    CHECK(event.entropy == doctest::Approx(g(0.1)).epsilon(1e-12));
    CHECK(event.probability > 0.0);
  }

  // P(event)/p stabilizes toward pi_i * A(i,i2) * (Q(i,j) + Q(i2,j)).
  const Index i = 0, i2 = 1, j = 0;
  double prev_ratio = 0.0;
  for (double p : {1e-2, 1e-3, 1e-4}) {
    const HmmModel model = three_state_model(p);
    const MiddleSymbolEvent event = middle_symbol_event(model, i, i2, j);
    const double ratio = event.probability / p;
    if (p == 1e-3) prev_ratio = ratio;
    if (p == 1e-4) {
      CHECK(std::abs(ratio / prev_ratio - 1.0) < 0.05);
      const HmmModel m = three_state_model(p);
      const double limit = m.stationary.weights(i) * m.generator.rates(i, i2) *
                           (m.channel.emission(i, j) + m.channel.emission(i2, j));
      CHECK(ratio == doctest::Approx(limit).epsilon(0.05));
    }
  }
}

TEST_CASE("monte carlo preconditions") {
  const HmmModel model = bsc_model(0.01, 0.1);
  CHECK_THROWS_AS(estimate_entropy_mc(model, 100, 5, 0, EntropyKind::joint),
                  Error);
  CHECK_THROWS_AS(estimate_entropy_mc(model, 5000, 1, 0, EntropyKind::joint),
                  Error);
}
