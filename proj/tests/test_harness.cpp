#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "collie/harness.hpp"
#include "collie/world.hpp"
#include "oracles.hpp"

using namespace collie;

namespace {

const Dataset& world() {
  static const Dataset ds = [] {
    WorldConfig wc;
    wc.seed = 11;
    return generate_world(wc);
  }();
  return ds;
}

CollieConfig with_scaling(const std::string& name) {
  CollieConfig c;
  c.scaling = ScalingConfig::parse(name);
  return c;
}

std::string csv_of(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  write_report_csv(os, rows);
  return os.str();
}

// Per-iteration RR of one system at one round (exp2 has one query per round).
double rr_at(const ExperimentResult& res, std::size_t it, const std::string& system, std::size_t round) {
  for (const auto& rep : res.per_iteration[it])
    if (rep.system == system && rep.round_index == round) return rep.mrr;
  FAIL("missing report");
  return 0;
}

std::vector<std::size_t> distinct_picks(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = (i * 7 + 3) % 85;
  return p;
}

}  // namespace

TEST_CASE("system names") {
  CHECK(system_from_name("collie").kind == SystemKind::collie);
  CHECK(system_from_name("clip_baseline").kind == SystemKind::clip_baseline);
  CHECK(system_from_name("fewshot").kind == SystemKind::fewshot);
  CHECK(system_from_name("collie_no_scaling").collie.scaling.kind == ScalingKind::none);
  CHECK_THROWS_AS(system_from_name("gpt"), InvalidInput);
}

TEST_CASE("exp1: untrained words sit at chance and collie starts equal to clip") {
  const auto& ds = world();
  Exp1Config e;
  e.iterations = 8;
  e.rounds = 3;
  e.seed = 3;
  e.systems = {system_from_name("clip_baseline"), system_from_name("collie")};
  const auto res = run_experiment1(e, ds);

  // clip never learns, so every round is a chance-level guess over 200 photos
  for (std::size_t r = 0; r < e.rounds; ++r) {
    const double m = *find_mrr(res.rows, "clip_baseline", r, Condition::learning_new);
    CHECK(std::fabs(m - oracle::harmonic_over_n(200)) < 0.01);
  }
  for (Condition c : {Condition::learning_new, Condition::retention_trained, Condition::retention_other})
    CHECK(*find_mrr(res.rows, "collie", 0, c) == *find_mrr(res.rows, "clip_baseline", 0, c));
  CHECK(*find_mrr(res.rows, "collie", 2, Condition::learning_new) >
        *find_mrr(res.rows, "clip_baseline", 2, Condition::learning_new));
}

TEST_CASE("exp1: clip retention is flat when text matches images") {
  WorldConfig wc;
  wc.seed = 4;
  wc.text_image_alignment = 1.0;
  wc.noise_sigma = 0.0;
  const auto ds = generate_world(wc);
  Exp1Config e;
  e.iterations = 4;
  e.rounds = 3;
  e.systems = {system_from_name("clip_baseline")};
  const auto res = run_experiment1(e, ds);
  const double r0 = *find_mrr(res.rows, "clip_baseline", 0, Condition::retention_trained);
  for (std::size_t r = 1; r < e.rounds; ++r) {
    const auto& row = *std::find_if(res.rows.begin(), res.rows.end(), [&](const ReportRow& x) {
      return x.system == "clip_baseline" && x.round == r && x.condition == "retention_trained";
    });
    CHECK(row.ci_low - 1e-9 <= r0);
    CHECK(r0 <= row.ci_high + 1e-9);
  }
}

TEST_CASE("exp1: fewshot reports learning only") {
  Exp1Config e;
  e.iterations = 2;
  e.rounds = 2;
  e.n_train_categories = 10;
  e.systems = {system_from_name("fewshot")};
  const auto res = run_experiment1(e, world());
  for (const auto& row : res.rows) CHECK(row.condition == "learning_new");
  CHECK(res.rows.size() == 2);
}

TEST_CASE("exp1: configuration errors") {
  Exp1Config e;
  e.iterations = 1;
  e.systems = {system_from_name("collie")};
  e.rounds = 7;  // only 6 photos per category: a photo would be reused
  CHECK_THROWS_AS(run_experiment1(e, world()), InvalidInput);
  e.rounds = 2;
  e.n_categories_total = 201;
  CHECK_THROWS_AS(run_experiment1(e, world()), InvalidInput);
  e.n_categories_total = 200;
  e.systems = {system_from_name("collie"), system_from_name("collie")};
  CHECK_THROWS_AS(run_experiment1(e, world()), InvalidInput);
  e.systems.clear();
  CHECK_THROWS_AS(run_experiment1(e, world()), InvalidInput);
}

TEST_CASE("exp2: round 0 is identical for every system") {
  Exp2Config e;
  e.iterations = 20;
  e.rounds = 3;
  e.seed = 9;
  for (const auto* n : {"collie", "collie_no_scaling", "fewshot", "clip_baseline"})
    e.systems.push_back(system_from_name(n));
  const auto res = run_experiment2(e, world());
  const double clip0 = *find_mrr(res.rows, "clip_baseline", 0, Condition::learning_new);
  for (const auto* n : {"collie", "collie_no_scaling", "fewshot"})
    CHECK(*find_mrr(res.rows, n, 0, Condition::learning_new) == clip0);
}

TEST_CASE("exp2: fewshot on an unseen expression is the zero-shot ranking") {
  const auto& ds = world();
  Exp2Config e;
  e.iterations = 3;
  e.rounds = 30;
  e.forced_picks = distinct_picks(31);
  e.systems = {system_from_name("fewshot"), system_from_name("clip_baseline")};
  const auto res = run_experiment2(e, ds);
  for (std::size_t it = 0; it < e.iterations; ++it)
    for (std::size_t r = 0; r <= e.rounds; ++r) CHECK(rr_at(res, it, "fewshot", r) == rr_at(res, it, "clip_baseline", r));
}

TEST_CASE("exp2: each round is evaluated before it is taught") {
  // With the exact-match gate, an expression never taught before leaves the
  // query untouched. Had the round's own pair been taught first, the gate
  // would open on it.
  Exp2Config e;
  e.iterations = 2;
  e.rounds = 20;
  e.forced_picks = distinct_picks(21);
  e.systems = {{"sentinel", SystemKind::collie, with_scaling("exact")}, system_from_name("clip_baseline")};
  const auto res = run_experiment2(e, world());
  for (std::size_t r = 0; r <= e.rounds; ++r) CHECK(rr_at(res, 0, "sentinel", r) == rr_at(res, 0, "clip_baseline", r));

  // Repeating a pick does open the gate: the learned referent comes out on top.
  e.forced_picks.assign(21, 5);
  const auto rep = run_experiment2(e, world());
  CHECK(rr_at(rep, 0, "sentinel", 1) == 1.0);
}

TEST_CASE("exp2: forced pick validation") {
  Exp2Config e;
  e.iterations = 1;
  e.rounds = 2;
  e.systems = {system_from_name("collie")};
  e.forced_picks = {0, 1};
  CHECK_THROWS_AS(run_experiment2(e, world()), InvalidInput);
  e.forced_picks = {0, 1, 85};
  CHECK_THROWS_AS(run_experiment2(e, world()), InvalidInput);
}

TEST_CASE("runs are deterministic and independent of thread count") {
  Exp2Config e;
  e.iterations = 12;
  e.rounds = 5;
  e.seed = 77;
  e.systems = {system_from_name("collie"), system_from_name("fewshot")};
  const auto a = csv_of(run_experiment2(e, world()).rows);
  const auto b = csv_of(run_experiment2(e, world()).rows);
  CHECK(a == b);
#ifdef _OPENMP
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto serial = csv_of(run_experiment2(e, world()).rows);
  omp_set_num_threads(4);
  const auto four = csv_of(run_experiment2(e, world()).rows);
  omp_set_num_threads(before);
  CHECK(serial == a);
  CHECK(four == a);
#endif
  e.seed = 78;
  CHECK(csv_of(run_experiment2(e, world()).rows) != a);
}

TEST_CASE("compositional: perfect alignment saturates both systems") {
  WorldConfig wc;
  wc.seed = 2;
  wc.text_image_alignment = 1.0;
  wc.noise_sigma = 0.0;
  const auto ds = generate_world(wc);
  CompositionalConfig c;
  c.iterations = 3;
  c.train_color = 0;
  const auto res = run_compositional_test(c, ds);
  CHECK(*find_mrr(res.rows, "clip_baseline", 0, Condition::compositional) == doctest::Approx(1.0));
  CHECK(*find_mrr(res.rows, "clip_baseline", 0, Condition::original) == doctest::Approx(1.0));
  CHECK(*find_mrr(res.rows, "collie", 0, Condition::original) > 0.9);
}

TEST_CASE("compositional: degenerate color splits are rejected") {
  CompositionalConfig c;
  c.iterations = 1;
  c.train_color = 2;
  c.eval_colors = {1, 2};
  CHECK_THROWS_AS(run_compositional_test(c, world()), InvalidInput);
  c.eval_colors = {5};
  CHECK_THROWS_AS(run_compositional_test(c, world()), InvalidInput);
  WorldConfig wc;
  wc.n_colors = 1;
  CHECK_THROWS_AS(run_compositional_test({}, generate_world(wc)), InvalidInput);
}

TEST_CASE("synonyms: identical synonyms score like the originals") {
  WorldConfig wc;
  wc.seed = 6;
  wc.synonym_similarity_min = 1.0;
  wc.synonym_similarity_max = 1.0;
  const auto ds = generate_world(wc);
  SynonymConfig s;
  s.iterations = 4;
  s.rounds = 10;
  const auto res = run_synonym_test(s, ds);
  CHECK(res.per_shape.size() == ds.shape_names.size());
  for (const auto* sys : {"collie", "clip_baseline"})
    CHECK(*find_mrr(res.overall.rows, sys, 10, Condition::synonym) ==
          doctest::Approx(*find_mrr(res.overall.rows, sys, 10, Condition::original)).epsilon(1e-9));
  for (const auto& row : res.per_shape) {
    CHECK(row.collie_synonym == doctest::Approx(row.collie_original).epsilon(1e-9));
    CHECK(row.clip_synonym == doctest::Approx(row.clip_original).epsilon(1e-9));
  }
  std::ostringstream os;
  write_shape_csv(os, res.per_shape);
  const auto text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(ds.shape_names.size() + 1));
}

TEST_CASE("synonyms: a dataset without a synonym table is rejected") {
  Dataset ds = world();
  ds.synonym_names.clear();
  CHECK_THROWS_AS(run_synonym_test({}, ds), InvalidInput);
}
