#include "collie/harness.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "collie/baselines.hpp"

namespace collie {

namespace {

using Rng = std::mt19937_64;

// Mixing through seed_seq keeps nearby seeds from sharing streams, which a
// plain seed ^ iteration would do.
Rng iteration_rng(std::uint64_t seed, std::size_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(std::uint64_t{iteration} >> 32)};
  return Rng(seq);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// First k of a seeded permutation of [0, n).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  idx.resize(k);
  return idx;
}

// Runs body(iteration) for every iteration, possibly concurrently; results
// land at their iteration index so scheduling never changes the output.
template <typename Body>
std::vector<std::vector<RoundReport>> for_iterations(std::size_t n, Body body) {
  std::vector<std::vector<RoundReport>> out(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t it = 0; it < n; ++it) {
    try {
      out[it] = body(it);
    } catch (...) {
#pragma omp critical(collie_harness_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Mutable per-iteration state of one system.
class SystemState {
 public:
  SystemState(const SystemSpec& spec, const Dataset& data) : spec_(&spec) {
    if (spec.kind == SystemKind::collie) model_.emplace(data.dim, data.nouns, spec.collie);
  }

  const SystemSpec& spec() const { return *spec_; }

  void add(const std::string& expression, const Embedding& text, const std::string& image_id,
           const Embedding& image) {
    if (model_) model_->add_example({expression, text, image_id, image});
    if (spec_->kind == SystemKind::fewshot) examples_.push_back({expression, image});
  }

  void retrain() {
    if (model_) model_->retrain();
    if (spec_->kind == SystemKind::fewshot && !examples_.empty()) fewshot_ = fit_fewshot(examples_);
  }

  std::vector<double> scores(const std::string& expression, const Embedding& text,
                             const CandidateSet& candidates) const {
    if (model_) return candidates.cosines(model_->transform_doubles(text));
    if (fewshot_) {
      if (const auto cls = fewshot_->class_index(expression)) return fewshot_->class_probabilities(*cls, candidates);
    }
    return candidates.cosines(text.to_doubles());
  }

  double reciprocal_rank(const std::string& expression, const Embedding& text, const CandidateSet& candidates,
                         std::size_t correct) const {
    const auto s = scores(expression, text, candidates);
    return 1.0 / static_cast<double>(rank_of(s, correct));
  }

 private:
  const SystemSpec* spec_;
  std::optional<CollieModel> model_;
  std::vector<LabeledImage> examples_;
  std::optional<FewShotClassifier> fewshot_;
};

CandidateSet referent_candidates(const Dataset& data) {
  std::vector<Candidate> c;
  c.reserve(data.referents.size());
  for (const auto& r : data.referents) c.push_back({r.image_id, r.image});
  return CandidateSet(c);
}

void require_tangrams(const Dataset& data, const char* who) {
  if (!data.has_tangrams()) throw InvalidInput(std::string(who) + ": dataset has no shape x color referents");
}

void require_systems(const std::vector<SystemSpec>& systems) {
  if (systems.empty()) throw InvalidInput("at least one system is required");
  std::set<std::string> names;
  for (const auto& s : systems) {
    if (!names.insert(s.name).second) throw InvalidInput("duplicate system name '" + s.name + "'");
    if (s.kind == SystemKind::collie) s.collie.scaling.validate();
  }
}

RoundReport report(const std::string& system, std::size_t round, Condition c, std::span<const double> rr) {
  return {system, round, c, mean_reciprocal_rank(rr), rr.size(), {}};
}

}  // namespace

SystemSpec system_from_name(const std::string& name, const CollieConfig& base) {
  SystemSpec s{name, SystemKind::collie, base};
  if (name == "collie") return s;
  if (name == "collie_no_scaling") {
    s.collie.scaling = ScalingConfig{};
    s.collie.scaling.kind = ScalingKind::none;
    return s;
  }
  if (name == "collie_neg_adjust") {
    s.collie.target_mode = RegressionTargetMode::difference_with_zero_negatives;
    return s;
  }
  if (name == "clip_baseline") return {name, SystemKind::clip_baseline, base};
  if (name == "fewshot") return {name, SystemKind::fewshot, base};
  throw InvalidInput("unknown system '" + name +
                     "' (expected collie, collie_no_scaling, collie_neg_adjust, clip_baseline or fewshot)");
}

void Exp1Config::validate() const {
  if (n_train_categories == 0 || n_categories_total == 0) throw InvalidInput("exp1: category counts must be positive");
  if (n_train_categories > n_categories_total)
    throw InvalidInput("exp1: n_train_categories exceeds n_categories_total");
  if (rounds == 0 || iterations == 0) throw InvalidInput("exp1: rounds and iterations must be >= 1");
  require_systems(systems);
}

void Exp2Config::validate() const {
  if (rounds == 0 || iterations == 0) throw InvalidInput("exp2: rounds and iterations must be >= 1");
  if (!forced_picks.empty() && forced_picks.size() != rounds + 1)
    throw InvalidInput("exp2: forced_picks needs one referent per evaluated round");
  require_systems(systems);
}

void CompositionalConfig::validate(const Dataset& data) const {
  require_tangrams(data, "compositional test");
  const std::size_t nc = data.color_names.size();
  if (nc < 2) throw InvalidInput("compositional test needs at least two colors");
  if (iterations == 0) throw InvalidInput("compositional test: iterations must be >= 1");
  if (train_color && *train_color >= nc) throw InvalidInput("compositional test: training color out of range");
  for (std::size_t c : eval_colors) {
    if (c >= nc) throw InvalidInput("compositional test: evaluation color out of range");
    if (train_color && c == *train_color)
      throw InvalidInput("compositional test: evaluation color equals the training color");
  }
  collie.scaling.validate();
}

void SynonymConfig::validate() const {
  if (rounds == 0 || iterations == 0) throw InvalidInput("synonym test: rounds and iterations must be >= 1");
  collie.scaling.validate();
}

ExperimentResult run_experiment1(const Exp1Config& config, const Dataset& data) {
  config.validate();
  if (data.categories.size() < config.n_categories_total)
    throw InvalidInput("exp1: dataset has " + std::to_string(data.categories.size()) + " categories, need " +
                       std::to_string(config.n_categories_total));
  if (data.pseudowords.size() < config.n_train_categories)
    throw InvalidInput("exp1: not enough pseudo-words for " + std::to_string(config.n_train_categories) +
                       " training categories");
  for (const auto& c : data.categories)
    if (c.images.size() < config.rounds)
      throw InvalidInput("exp1: category '" + c.name + "' has " + std::to_string(c.images.size()) +
                         " images, fewer than the " + std::to_string(config.rounds) + " rounds");

  auto body = [&](std::size_t it) {
    Rng rng = iteration_rng(config.seed, it);
    const auto pool = sample_without_replacement(rng, data.categories.size(), config.n_categories_total);
    const std::size_t N = config.n_train_categories;
    // Positions into `pool`: the first N form the training set.
    std::vector<std::size_t> train(N), rest;
    std::iota(train.begin(), train.end(), 0);
    for (std::size_t k = N; k < pool.size(); ++k) rest.push_back(k);
    const auto words = sample_without_replacement(rng, data.pseudowords.size(), N);
    // Each category uses a different photo every round.
    std::vector<std::vector<std::size_t>> photo(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const std::size_t n_img = data.categories[pool[k]].images.size();
      photo[k] = sample_without_replacement(rng, n_img, config.rounds);
      if (std::set<std::size_t>(photo[k].begin(), photo[k].end()).size() != photo[k].size())
        throw std::logic_error("exp1: image reused across rounds");
    }

    std::vector<SystemState> systems;
    for (const auto& s : config.systems) systems.emplace_back(s, data);
    std::vector<RoundReport> out;
    for (std::size_t r = 0; r < config.rounds; ++r) {
      std::vector<Candidate> cands;
      for (std::size_t k = 0; k < pool.size(); ++k) {
        const auto& cat = data.categories[pool[k]];
        cands.push_back({cat.image_ids[photo[k][r]], cat.images[photo[k][r]]});
      }
      const CandidateSet cs(cands);
      const std::size_t n_other = std::min(config.n_other_categories, rest.size());
      const auto other_pick = sample_without_replacement(rng, rest.size(), n_other);

      for (const auto& sys : systems) {
        std::vector<double> rr;
        for (std::size_t i = 0; i < N; ++i) {
          const auto& pw = data.pseudowords[words[i]];
          rr.push_back(sys.reciprocal_rank(pw.word, pw.text, cs, train[i]));
        }
        out.push_back(report(sys.spec().name, r, Condition::learning_new, rr));
        if (sys.spec().kind == SystemKind::fewshot) continue;
        rr.clear();
        for (std::size_t i = 0; i < N; ++i) {
          const auto& cat = data.categories[pool[train[i]]];
          rr.push_back(sys.reciprocal_rank(cat.name, cat.text, cs, train[i]));
        }
        out.push_back(report(sys.spec().name, r, Condition::retention_trained, rr));
        if (n_other == 0) continue;
        rr.clear();
        for (std::size_t j : other_pick) {
          const std::size_t k = rest[j];
          const auto& cat = data.categories[pool[k]];
          rr.push_back(sys.reciprocal_rank(cat.name, cat.text, cs, k));
        }
        out.push_back(report(sys.spec().name, r, Condition::retention_other, rr));
      }
      if (r + 1 == config.rounds) break;
      for (auto& sys : systems) {
        for (std::size_t i = 0; i < N; ++i) {
          const auto& pw = data.pseudowords[words[i]];
          const auto& cat = data.categories[pool[train[i]]];
          sys.add(pw.word, pw.text, cat.image_ids[photo[i][r]], cat.images[photo[i][r]]);
        }
        sys.retrain();
      }
    }
    return out;
  };
  ExperimentResult res;
  res.per_iteration = for_iterations(config.iterations, body);
  res.rows = aggregate_reports("exp1", res.per_iteration);
  return res;
}

ExperimentResult run_experiment2(const Exp2Config& config, const Dataset& data) {
  config.validate();
  require_tangrams(data, "exp2");
  for (std::size_t p : config.forced_picks)
    if (p >= data.referents.size()) throw InvalidInput("exp2: forced pick out of range");
  const CandidateSet cs = referent_candidates(data);

  auto body = [&](std::size_t it) {
    Rng rng = iteration_rng(config.seed, it);
    std::vector<SystemState> systems;
    for (const auto& s : config.systems) systems.emplace_back(s, data);
    std::vector<RoundReport> out;
    for (std::size_t r = 0; r <= config.rounds; ++r) {
      const std::size_t q = config.forced_picks.empty() ? uniform_index(rng, data.referents.size())
                                                        : config.forced_picks[r];
      const auto& ref = data.referents[q];
      // Evaluate first, then teach the same referent.
      for (const auto& sys : systems) {
        const double rr = sys.reciprocal_rank(ref.expression, ref.text, cs, q);
        RoundReport rep{sys.spec().name, r, Condition::learning_new, rr, 1, {}};
        rep.per_label_mrr[data.shape_names[ref.shape]] = rr;
        out.push_back(std::move(rep));
      }
      if (r == config.rounds) break;
      for (auto& sys : systems) {
        sys.add(ref.expression, ref.text, ref.image_id, ref.image);
        sys.retrain();
      }
    }
    return out;
  };
  ExperimentResult res;
  res.per_iteration = for_iterations(config.iterations, body);
  res.rows = aggregate_reports("exp2", res.per_iteration);
  return res;
}

ExperimentResult run_compositional_test(const CompositionalConfig& config, const Dataset& data) {
  config.validate(data);
  const CandidateSet cs = referent_candidates(data);
  const std::size_t ns = data.shape_names.size();
  const std::size_t nc = data.color_names.size();
  const SystemSpec collie_spec{"collie", SystemKind::collie, config.collie};
  const SystemSpec clip_spec{"clip_baseline", SystemKind::clip_baseline, config.collie};

  auto body = [&](std::size_t it) {
    Rng rng = iteration_rng(config.seed, it);
    const std::size_t train_color = config.train_color ? *config.train_color : uniform_index(rng, nc);
    std::vector<std::size_t> eval = config.eval_colors;
    if (eval.empty())
      for (std::size_t c = 0; c < nc; ++c)
        if (c != train_color) eval.push_back(c);
    if (std::find(eval.begin(), eval.end(), train_color) != eval.end())
      throw InvalidInput("compositional test: evaluation color equals the training color");

    SystemState collie(collie_spec, data), clip(clip_spec, data);
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& r = data.referent(s, train_color);
      collie.add(r.expression, r.text, r.image_id, r.image);
    }
    collie.retrain();
    std::vector<RoundReport> out;
    for (const SystemState* sys : {&collie, &clip}) {
      std::vector<double> seen, unseen;
      for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t q = s * nc + train_color;
        seen.push_back(sys->reciprocal_rank(data.referents[q].expression, data.referents[q].text, cs, q));
        for (std::size_t c : eval) {
          const std::size_t k = s * nc + c;
          unseen.push_back(sys->reciprocal_rank(data.referents[k].expression, data.referents[k].text, cs, k));
        }
      }
      out.push_back(report(sys->spec().name, 0, Condition::compositional, unseen));
      out.push_back(report(sys->spec().name, 0, Condition::original, seen));
    }
    return out;
  };
  ExperimentResult res;
  res.per_iteration = for_iterations(config.iterations, body);
  res.rows = aggregate_reports("compositional", res.per_iteration);
  return res;
}

SynonymResult run_synonym_test(const SynonymConfig& config, const Dataset& data) {
  config.validate();
  require_tangrams(data, "synonym test");
  if (!data.has_synonyms()) throw InvalidInput("synonym test: dataset has no synonym table");
  const CandidateSet cs = referent_candidates(data);
  const SystemSpec collie_spec{"collie", SystemKind::collie, config.collie};
  const SystemSpec clip_spec{"clip_baseline", SystemKind::clip_baseline, config.collie};

  auto body = [&](std::size_t it) {
    Rng rng = iteration_rng(config.seed, it);
    SystemState collie(collie_spec, data), clip(clip_spec, data);
    for (std::size_t r = 0; r < config.rounds; ++r) {
      const auto& ref = data.referents[uniform_index(rng, data.referents.size())];
      collie.add(ref.expression, ref.text, ref.image_id, ref.image);
    }
    collie.retrain();
    std::vector<RoundReport> out;
    for (const SystemState* sys : {&collie, &clip}) {
      for (const Condition cond : {Condition::original, Condition::synonym}) {
        std::vector<double> rr;
        std::map<std::string, std::vector<double>> by_shape;
        for (std::size_t q = 0; q < data.referents.size(); ++q) {
          const auto& ref = data.referents[q];
          const bool syn = cond == Condition::synonym;
          const double v = sys->reciprocal_rank(syn ? ref.synonym_expression : ref.expression,
                                                syn ? *ref.synonym_text : ref.text, cs, q);
          rr.push_back(v);
          by_shape[data.shape_names[ref.shape]].push_back(v);
        }
        auto rep = report(sys->spec().name, config.rounds, cond, rr);
        for (const auto& [shape, v] : by_shape) rep.per_label_mrr[shape] = mean_reciprocal_rank(v);
        out.push_back(std::move(rep));
      }
    }
    return out;
  };
  SynonymResult res;
  res.overall.per_iteration = for_iterations(config.iterations, body);
  res.overall.rows = aggregate_reports("synonyms", res.overall.per_iteration);
  for (std::size_t s = 0; s < data.shape_names.size(); ++s) {
    ShapeRow row{data.shape_names[s], data.synonym_names[s], 0, 0, 0, 0};
    for (const auto& iteration : res.overall.per_iteration) {
      for (const auto& rep : iteration) {
        const double v = rep.per_label_mrr.at(row.shape);
        const bool collie = rep.system == "collie";
        double& slot = rep.condition == Condition::synonym ? (collie ? row.collie_synonym : row.clip_synonym)
                                                           : (collie ? row.collie_original : row.clip_original);
        slot += v;
      }
    }
    const double n = static_cast<double>(res.overall.per_iteration.size());
    row.clip_original /= n;
    row.clip_synonym /= n;
    row.collie_original /= n;
    row.collie_synonym /= n;
    res.per_shape.push_back(std::move(row));
  }
  return res;
}

void write_shape_csv(std::ostream& out, const std::vector<ShapeRow>& rows) {
  out << "shape,synonym,clip_original,clip_synonym,collie_original,collie_synonym\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f", r.clip_original, r.clip_synonym, r.collie_original,
                  r.collie_synonym);
    out << r.shape << ',' << r.synonym << buf << '\n';
  }
}

std::optional<double> find_mrr(const std::vector<ReportRow>& rows, const std::string& system, std::size_t round,
                               Condition condition) {
  const auto c = to_string(condition);
  for (const auto& r : rows)
    if (r.system == system && r.round == round && r.condition == c) return r.mrr;
  return std::nullopt;
}

}  // namespace collie
