#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "collie/baselines.hpp"
#include "collie/collie_model.hpp"
#include "collie/world.hpp"

using namespace collie;

namespace {

const Dataset& world() {
  static const Dataset ds = [] {
    WorldConfig wc;
    wc.seed = 5;
    return generate_world(wc);
  }();
  return ds;
}

GroundingPair pair_of(const Referent& r) { return {r.expression, r.text, r.image_id, r.image}; }

CollieConfig with_scaling(const std::string& name) {
  CollieConfig c;
  c.scaling = ScalingConfig::parse(name);
  return c;
}

std::vector<Candidate> referent_candidates(const Dataset& ds) {
  std::vector<Candidate> c;
  for (const auto& r : ds.referents) c.push_back({r.image_id, r.image});
  return c;
}

}  // namespace

TEST_CASE("store keeps every pair in order") {
  const auto& ds = world();
  CollieModel m(ds.dim, ds.nouns);
  m.add_example(pair_of(ds.referents[0]));
  CHECK(m.store().size() == 1);
  m.add_example(pair_of(ds.referents[0]));
  CHECK(m.store().size() == 2);
  for (std::size_t i = 2; i < 50; ++i) m.add_example(pair_of(ds.referents[i]));
  CHECK(m.store().size() == 50);
  for (std::size_t i = 2; i < 50; ++i) CHECK(m.store()[i].image_id == ds.referents[i].image_id);
  CHECK_FALSE(m.trained());
  CHECK_THROWS_AS(m.transform(ds.referents[0].text), UntrainedModel);
  m.retrain();
  CHECK(m.trained());
  CHECK(m.adjustment().num_training_pairs() == 50);
  m.add_example(pair_of(ds.referents[60]));
  CHECK_FALSE(m.trained());
}

TEST_CASE("dimension checks") {
  const auto& ds = world();
  CollieModel m(ds.dim, ds.nouns);
  const Embedding small({1, 0, 0});
  CHECK_THROWS_AS(m.add_example({"x", small, "y", ds.referents[0].image}), DimensionMismatch);
  CHECK_THROWS_AS(m.transform(small), DimensionMismatch);
  CHECK_THROWS_AS(CollieModel(ds.dim + 1, ds.nouns), DimensionMismatch);
}

TEST_CASE("empty store is the identity") {
  const auto& ds = world();
  CollieModel m(ds.dim, ds.nouns);
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& r : ds.referents) {
      const auto out = m.transform_doubles(r.text);
      for (std::size_t k = 0; k < ds.dim; ++k) CHECK(std::abs(out[k] - r.text[k]) < 1e-9);
    }
    m.retrain();
  }
}

TEST_CASE("one pair with knn gating maps its text onto its image") {
  const auto& ds = world();
  for (std::size_t i : {0u, 17u, 84u}) {
    CollieModel m(ds.dim, ds.nouns, with_scaling("knn"));
    m.add_example(pair_of(ds.referents[i]));
    m.retrain();
    CHECK(m.scale(ds.referents[i].text) == 1.0);
    CHECK(cosine_similarity(m.transform(ds.referents[i].text), ds.referents[i].image) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("a closed gate leaves the query unchanged") {
  const auto& ds = world();
  CollieModel m(ds.dim, ds.nouns, with_scaling("exact"));
  m.add_example(pair_of(ds.referents[3]));
  m.retrain();
  const auto& q = ds.referents[40].text;
  CHECK(m.scale(q) == 0.0);
  CHECK(cosine_similarity(m.transform(q), q) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("nouns far from the taught words are left alone under knn") {
  const auto& ds = world();
  CollieModel m(ds.dim, ds.nouns, with_scaling("knn"));
  for (std::size_t i = 0; i < 10; ++i) m.add_example({ds.pseudowords[i].word, ds.pseudowords[i].text,
                                                      ds.categories[i].image_ids[0], ds.categories[i].images[0]});
  m.retrain();
  std::size_t kept = 0;
  for (const auto& e : ds.nouns->embeddings()) kept += cosine_similarity(m.transform(e), e) >= 0.99;
  CHECK(kept == ds.nouns->size());
}

TEST_CASE("retraining an unchanged store is bit-stable") {
  const auto& ds = world();
  for (const char* k : {"svr-linear", "svr-rbf", "knn", "logistic", "linear"}) {
    CollieModel m(ds.dim, ds.nouns, with_scaling(k));
    for (std::size_t i = 0; i < 12; ++i) m.add_example(pair_of(ds.referents[i * 7]));
    m.retrain();
    const auto a = m.transform_doubles(ds.referents[5].text);
    const auto beta = m.adjustment().beta();
    m.retrain();
    CHECK(m.transform_doubles(ds.referents[5].text) == a);
    CHECK(m.adjustment().beta() == beta);
  }
}

TEST_CASE("taught pairs rank their image near the top") {
  std::size_t good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    WorldConfig wc;
    wc.seed = 1000 + trial / 10;
    static thread_local std::uint64_t cached_seed = ~0ull;
    static thread_local Dataset ds;
    if (cached_seed != wc.seed) {
      ds = generate_world(wc);
      cached_seed = wc.seed;
    }
    std::mt19937_64 rng(trial);
    const std::size_t n = 1 + rng() % 20;
    CollieModel m(ds.dim, ds.nouns);
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < n; ++i) {
      picks.push_back(rng() % ds.referents.size());
      m.add_example(pair_of(ds.referents[picks.back()]));
    }
    m.retrain();
    const CandidateSet cs(referent_candidates(ds));
    bool ok = true;
    for (std::size_t p : picks)
      ok &= rank_of(cs.cosines(m.transform_doubles(ds.referents[p].text)), p) <= 3;
    good += ok;
  }
  CHECK(good >= 95);
}

TEST_CASE("outputs stay finite and keep their dimension") {
  const auto& ds = world();
  CollieModel m(ds.dim, ds.nouns, with_scaling("svr-sigmoid"));
  for (std::size_t i = 0; i < 30; ++i) m.add_example(pair_of(ds.referents[i]));
  m.retrain();
  for (const auto& c : ds.categories) {
    const auto out = m.transform(c.text);
    CHECK(out.dim() == ds.dim);
    CHECK(std::abs(out.norm() - 1.0) < 1e-6);
  }
}

TEST_CASE("snapshot round trip") {
  const auto& ds = world();
  for (const char* k : {"svr-linear", "svr-rbf", "svr-sigmoid", "knn", "linear", "logistic", "none", "exact"}) {
    auto cfg = with_scaling(k);
    cfg.lambda = 0.01;
    CollieModel m(ds.dim, ds.nouns, cfg);
    for (std::size_t i = 0; i < 9; ++i) m.add_example(pair_of(ds.referents[i * 9]));
    m.retrain();
    std::stringstream buf;
    m.save(buf);
    const auto back = CollieModel::load(buf);
    CHECK(back.store().size() == m.store().size());
    CHECK(back.config().scaling.name() == k);
    CHECK(back.config().lambda == 0.01);
    for (const auto& r : ds.referents)
      CHECK(cosine_similarity(back.transform(r.text), m.transform(r.text)) >= 1.0 - 1e-6);
  }
  std::stringstream bad("{\"dim\": 3}");
  CHECK_THROWS(CollieModel::load(bad));
}
