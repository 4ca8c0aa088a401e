#include <doctest.h>

#include <cmath>
#include <random>

#include "collie/scaling.hpp"
#include "collie/world.hpp"

using namespace collie;

namespace {

Embedding rand_unit(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g;
  std::vector<double> v(d);
  for (auto& x : v) x = g(rng);
  return normalize(Embedding::from_doubles(v));
}

NegativeCorpus random_corpus(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::vector<std::string> t;
  std::vector<Embedding> e;
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back("n" + std::to_string(i));
    e.push_back(rand_unit(rng, d));
  }
  return {t, e};
}

const char* kAllKinds[] = {"svr-linear", "svr-rbf", "svr-sigmoid", "knn", "linear", "logistic", "none", "exact"};

}  // namespace

TEST_CASE("config names round-trip and validate") {
  for (const char* k : kAllKinds) CHECK(ScalingConfig::parse(k).name() == k);
  CHECK_THROWS_AS(ScalingConfig::parse("svr-poly"), InvalidInput);
  ScalingConfig c;
  c.knn_k = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.svr_C = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.svr_epsilon = -0.1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("none is always one, exact matches only stored positives") {
  std::mt19937_64 rng(1);
  const auto corpus = random_corpus(rng, 20, 8);
  const auto p = rand_unit(rng, 8);
  const auto none = fit_scaling({}, corpus, ScalingConfig::parse("none"));
  CHECK(none.predict(rand_unit(rng, 8)) == 1.0);

  const std::vector<Embedding> pos{p};
  const auto exact = fit_scaling(pos, corpus, ScalingConfig::parse("exact"));
  CHECK(exact.predict(p) == 1.0);
  auto scaled = p.to_doubles();
  for (auto& v : scaled) v *= 3.0;
  CHECK(exact.predict(scaled) == 1.0);
  CHECK(exact.predict(rand_unit(rng, 8)) == 0.0);
  // With nothing stored the conservative gate is closed.
  CHECK(fit_scaling({}, corpus, ScalingConfig::parse("exact")).predict(p) == 0.0);
}

TEST_CASE("kinds that learn need a positive") {
  std::mt19937_64 rng(2);
  const auto corpus = random_corpus(rng, 10, 4);
  for (const char* k : {"svr-linear", "knn", "linear", "logistic"})
    CHECK_THROWS_AS(fit_scaling({}, corpus, ScalingConfig::parse(k)), InvalidInput);
  const std::vector<Embedding> wrong{rand_unit(rng, 5)};
  CHECK_THROWS_AS(fit_scaling(wrong, corpus, ScalingConfig::parse("knn")), DimensionMismatch);
}

TEST_CASE("knn exact neighbor recall") {
  const Embedding p({1, 0, 0}), q({0, 1, 0});
  const NegativeCorpus corpus({"q"}, {q});
  auto c = ScalingConfig::parse("knn");
  c.knn_k = 1;
  const std::vector<Embedding> pos{p};
  const auto m = fit_scaling(pos, corpus, c);
  CHECK(m.predict(p) == 1.0);
  CHECK(m.predict(q) == 0.0);
}

TEST_CASE("knn uniform weights on an equidistant query") {
  const Embedding p({1, 0}), q({0, 1});
  const NegativeCorpus corpus({"q"}, {q});
  auto c = ScalingConfig::parse("knn");
  c.knn_k = 2;
  c.knn_weighting = KnnWeighting::uniform;
  const std::vector<Embedding> pos{p};
  const auto m = fit_scaling(pos, corpus, c);
  CHECK(m.predict(std::vector<double>{0.5, 0.5}) == 0.5);
}

TEST_CASE("knn distance weights follow 1/d") {
  // query at distance 1 from the positive and 3 from the negative:
  // (1/1 * 1 + 1/3 * 0) / (1/1 + 1/3) = 0.75
  const NegativeCorpus corpus({"q"}, {Embedding({1, 0})});
  const std::vector<Embedding> pos{Embedding({-1, 0})};
  auto c = ScalingConfig::parse("knn");
  c.knn_k = 2;
  const auto m = fit_scaling(pos, corpus, c);
  // stored rows are unit vectors at -1 and +1 on the first axis
  CHECK(m.raw(std::vector<double>{-2.0, 0.0}) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("knn ties go to the earlier row") {
  // Two positives and a negative all at the same distance; K=1 keeps row 0.
  const NegativeCorpus corpus({"n"}, {Embedding({0, 0, 1})});
  const std::vector<Embedding> pos{Embedding({1, 0, 0}), Embedding({0, 1, 0})};
  auto c = ScalingConfig::parse("knn");
  c.knn_k = 1;
  c.knn_weighting = KnnWeighting::uniform;
  const auto m = fit_scaling(pos, corpus, c);
  const std::vector<double> centre{0.0, 0.0, 0.0};
  CHECK(m.raw(centre) == 1.0);
  CHECK(m.raw(centre) == m.raw(centre));
}

TEST_CASE("output range for every kind") {
  std::mt19937_64 rng(3);
  const auto corpus = random_corpus(rng, 60, 12);
  std::vector<Embedding> pos;
  for (int i = 0; i < 6; ++i) pos.push_back(rand_unit(rng, 12));
  std::normal_distribution<double> g(0.0, 3.0);
  for (const char* k : kAllKinds) {
    const auto m = fit_scaling(pos, corpus, ScalingConfig::parse(k));
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> q(12);
      for (auto& v : q) v = g(rng);
      const double s = m.predict(q);
      CHECK((s >= 0.0 && s <= 1.0));
    }
  }
}

TEST_CASE("negatives can be truncated") {
  std::mt19937_64 rng(4);
  const auto corpus = random_corpus(rng, 50, 6);
  const std::vector<Embedding> pos{rand_unit(rng, 6)};
  auto c = ScalingConfig::parse("svr-linear");
  c.negatives_count = 10;
  CHECK(fit_scaling(pos, corpus, c).negatives_count() == 10);
  c.negatives_count = 0;
  CHECK(fit_scaling(pos, corpus, c).negatives_count() == 50);
}

TEST_CASE("linear scaling is least squares on the labels") {
  // Rows (+-0.8, +-0.6): labels are exactly 0.5 + x0 / 1.6.
  const NegativeCorpus corpus({"a", "b"}, {Embedding({-0.8f, 0.6f}), Embedding({-0.8f, -0.6f})});
  const std::vector<Embedding> pos{Embedding({0.8f, 0.6f}), Embedding({0.8f, -0.6f})};
  const auto m = fit_scaling(pos, corpus, ScalingConfig::parse("linear"));
  CHECK(m.raw(std::vector<double>{0.0, 0.3}) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(m.raw(std::vector<double>{0.8, 0.0}) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(m.predict(std::vector<double>{1.6, 0.0}) == 1.0);
}

TEST_CASE("separation on the synthetic world") {
  WorldConfig wc;
  wc.seed = 42;
  const auto ds = generate_world(wc);
  const auto& nouns = *ds.nouns;
  std::vector<std::string> texts(nouns.texts().begin(), nouns.texts().begin() + 900);
  std::vector<Embedding> embs(nouns.embeddings().begin(), nouns.embeddings().begin() + 900);
  const NegativeCorpus train(texts, embs);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 0.02);
  const auto base = ds.pseudowords[0].text.to_doubles();
  std::vector<Embedding> pos;
  for (int i = 0; i < 5; ++i) {
    auto v = base;
    for (auto& x : v) x += g(rng);
    pos.push_back(normalize(Embedding::from_doubles(v)));
  }
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) REQUIRE(cosine_similarity(pos[i], pos[j]) >= 0.95);

  for (const char* k : {"svr-linear", "svr-rbf", "knn"}) {
    const auto m = fit_scaling(pos, train, ScalingConfig::parse(k));
    double on = 0, off = 0;
    for (const auto& p : pos) on += m.predict(p);
    for (std::size_t i = 900; i < 1000; ++i) off += m.predict(nouns.embeddings()[i]);
    CAPTURE(k);
    CHECK(on / 5 - off / 100 >= 0.5);
  }
}

TEST_CASE("fits are deterministic") {
  std::mt19937_64 rng(8);
  const auto corpus = random_corpus(rng, 80, 10);
  std::vector<Embedding> pos;
  for (int i = 0; i < 4; ++i) pos.push_back(rand_unit(rng, 10));
  const auto q = rand_unit(rng, 10);
  for (const char* k : kAllKinds) {
    const auto a = fit_scaling(pos, corpus, ScalingConfig::parse(k));
    const auto b = fit_scaling(pos, corpus, ScalingConfig::parse(k));
    CHECK(a.raw(q.to_doubles()) == b.raw(q.to_doubles()));
  }
}
