#include <doctest.h>

#include <cmath>
#include <random>

#include "collie/adjustment.hpp"
#include "oracles.hpp"

using namespace collie;

namespace {

Embedding rand_vec(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g;
  std::vector<double> v(d);
  for (auto& x : v) x = g(rng);
  return normalize(Embedding::from_doubles(v));
}

std::vector<GroundingPair> random_pairs(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::vector<GroundingPair> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"t" + std::to_string(i), rand_vec(rng, d), "i" + std::to_string(i), rand_vec(rng, d)});
  return out;
}

double max_oracle_error(const AdjustmentModel& m, const std::vector<GroundingPair>& pairs, double lambda) {
  std::vector<std::vector<double>> xs, ys;
  for (const auto& p : pairs) {
    xs.push_back(p.text_embedding.to_doubles());
    auto y = p.image_embedding.to_doubles();
    for (std::size_t k = 0; k < y.size(); ++k) y[k] -= xs.back()[k];
    ys.push_back(y);
  }
  const auto o = oracle::ridge(xs, ys, lambda);
  double err = 0.0;
  for (std::size_t p = 0; p < m.dim(); ++p) {
    err = std::max(err, std::abs(m.intercept()[p] - static_cast<double>(o.intercept[p])));
    for (std::size_t k = 0; k < m.dim(); ++k)
      err = std::max(err, std::abs(m.beta()(p, k) - static_cast<double>(o.beta[p][k])));
  }
  return err;
}

}  // namespace

TEST_CASE("no pairs predicts zero") {
  for (double lambda : {0.0, 0.001, 1.0}) {
    const auto m = fit_adjustment({}, 6, lambda);
    CHECK(m.num_training_pairs() == 0);
    for (double v : m.predict(Embedding({1, 2, 3, 4, 5, 6}))) CHECK(v == 0.0);
  }
}

TEST_CASE("one pair gives the constant difference vector") {
  std::mt19937_64 rng(1);
  const auto pairs = random_pairs(rng, 1, 8);
  const auto& p = pairs[0];
  for (double lambda : {0.0, 0.001, 10.0}) {
    const auto m = fit_adjustment(pairs, 8, lambda);
    CHECK(m.beta().norm() == 0.0);
    for (int q = 0; q < 3; ++q) {
      const auto out = m.predict(rand_vec(rng, 8));
      for (std::size_t k = 0; k < 8; ++k)
        CHECK(out[k] == doctest::Approx(double(p.image_embedding[k]) - p.text_embedding[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("matches the dense oracle on random problems") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (std::size_t d : {4u, 8u, 16u})
    for (std::size_t n : {1u, 2u, 3u, 7u, 10u, 16u, 17u, 25u, 40u})
      for (double lambda : {0.0, 1e-4, 1e-1, 1e-3}) {
        const auto pairs = random_pairs(rng, n, d);
        const auto m = fit_adjustment(pairs, d, lambda);
        CAPTURE(d);
        CAPTURE(n);
        CAPTURE(lambda);
        CHECK(max_oracle_error(m, pairs, lambda) < 1e-8);
        ++checked;
      }
  CHECK(checked == 108);
}

TEST_CASE("zero-target negatives join the design") {
  std::mt19937_64 rng(9);
  const auto pairs = random_pairs(rng, 5, 8);
  std::vector<Embedding> negs;
  for (int i = 0; i < 6; ++i) negs.push_back(rand_vec(rng, 8));
  const auto m = fit_adjustment(pairs, 8, 0.01, RegressionTargetMode::difference_with_zero_negatives, negs);
  CHECK(m.num_training_pairs() == 5);

  std::vector<std::vector<double>> xs, ys;
  for (const auto& p : pairs) {
    xs.push_back(p.text_embedding.to_doubles());
    auto y = p.image_embedding.to_doubles();
    for (std::size_t k = 0; k < 8; ++k) y[k] -= xs.back()[k];
    ys.push_back(y);
  }
  for (const auto& e : negs) {
    xs.push_back(e.to_doubles());
    ys.emplace_back(8, 0.0);
  }
  const auto o = oracle::ridge(xs, ys, 0.01);
  for (std::size_t p = 0; p < 8; ++p)
    for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(m.beta()(p, k) - double(o.beta[p][k])) < 1e-8);

  // Ignored in the default mode.
  const auto plain = fit_adjustment(pairs, 8, 0.01, RegressionTargetMode::difference_vector, negs);
  CHECK(plain.beta().isApprox(fit_adjustment(pairs, 8, 0.01).beta(), 0.0));
}

TEST_CASE("shrinkage is monotone in lambda") {
  std::mt19937_64 rng(4);
  for (std::size_t n : {5u, 30u}) {
    const auto pairs = random_pairs(rng, n, 12);
    double prev = INFINITY;
    for (double lambda : {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      const double f = fit_adjustment(pairs, 12, lambda).beta().norm();
      CHECK(f <= prev + 1e-12);
      prev = f;
    }
  }
}

TEST_CASE("pair order does not matter") {
  std::mt19937_64 rng(5);
  auto pairs = random_pairs(rng, 20, 10);
  const auto a = fit_adjustment(pairs, 10, 1e-3);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto b = fit_adjustment(pairs, 10, 1e-3);
  CHECK((a.beta() - b.beta()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((a.intercept() - b.intercept()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("recovers an exactly linear map") {
  std::mt19937_64 rng(6);
  const std::size_t d = 6, n = 30;
  std::normal_distribution<double> g;
  RowMatrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = 0.3 * g(rng);
  Eigen::VectorXd c(d);
  for (auto& v : c) v = 0.1 * g(rng);
  std::vector<GroundingPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = rand_vec(rng, d);
    Eigen::VectorXd tv(d);
    for (std::size_t k = 0; k < d; ++k) tv[k] = t[k];
    const Eigen::VectorXd img = tv + a * tv + c;
    pairs.push_back({"t", t, "i", Embedding::from_doubles({img.data(), d})});
  }
  const auto m = fit_adjustment(pairs, d, 1e-9);
  for (const auto& p : pairs) {
    const auto pred = m.predict(p.text_embedding);
    for (std::size_t k = 0; k < d; ++k)
      CHECK(std::abs(pred[k] - (double(p.image_embedding[k]) - p.text_embedding[k])) < 1e-4);
  }
}

TEST_CASE("overdetermined lambda 0 is ordinary least squares") {
  std::mt19937_64 rng(8);
  const auto pairs = random_pairs(rng, 40, 8);
  CHECK(max_oracle_error(fit_adjustment(pairs, 8, 0.0), pairs, 0.0) < 1e-8);
}

TEST_CASE("errors") {
  std::mt19937_64 rng(3);
  auto pairs = random_pairs(rng, 2, 4);
  CHECK_THROWS_AS(fit_adjustment(pairs, 4, -1.0), InvalidInput);
  CHECK_THROWS_AS(fit_adjustment(pairs, 5), DimensionMismatch);
  pairs.push_back({"x", rand_vec(rng, 4), "y", rand_vec(rng, 3)});
  CHECK_THROWS_AS(fit_adjustment(pairs, 4), DimensionMismatch);
  const auto m = fit_adjustment(random_pairs(rng, 3, 4), 4);
  CHECK_THROWS_AS(m.predict(Embedding({1, 2, 3})), DimensionMismatch);
}
