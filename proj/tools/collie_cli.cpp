// collie: command-line harness for the continual grounding experiments.
//
//   collie gen-world --out DIR [world flags]
//   collie run-exp1 | run-exp2 | run-compositional | run-synonyms [data] [flags] [--csv FILE]
//   collie import --embeddings F --manifest F
//   collie export --out DIR [data]
//   collie resolve --expression "the red crab" [data] [--teach EXPR=IMAGE_ID ...]
//
// [data] is either --embeddings/--manifest or the synthetic world flags.
// Exit codes: 0 ok, 2 configuration error, 3 data error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "collie/baselines.hpp"
#include "collie/collie_model.hpp"
#include "collie/dataset_io.hpp"
#include "collie/eval.hpp"
#include "collie/harness.hpp"
#include "collie/world.hpp"

namespace fs = std::filesystem;
using namespace collie;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Thrown for problems with input files; everything else is configuration.
struct DataFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string embeddings;
  std::string manifest;
  WorldConfig world;
  std::optional<std::uint64_t> world_seed;
};

struct RunOptions {
  std::uint64_t seed = 0;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> rounds;
  std::string scaling = "svr-linear";
  double lambda = kDefaultRidgeLambda;
  std::size_t negatives = 0;
  std::vector<std::string> systems;
  bool full = false;
  std::string csv;
  std::size_t train_categories = 50;
  std::string per_shape_csv;
};

void add_data_flags(CLI::App* app, DataOptions& d) {
  app->add_option("--embeddings", d.embeddings, "embedding JSONL file")->check(CLI::ExistingFile);
  app->add_option("--manifest", d.manifest, "manifest JSON file")->check(CLI::ExistingFile);
  auto& w = d.world;
  app->add_option("--dim", w.dim, "synthetic embedding dimension")->capture_default_str();
  app->add_option("--shapes", w.n_shapes, "synthetic shapes")->capture_default_str();
  app->add_option("--colors", w.n_colors, "synthetic colors")->capture_default_str();
  app->add_option("--categories", w.n_categories, "synthetic object categories")->capture_default_str();
  app->add_option("--images-per-category", w.images_per_category)->capture_default_str();
  app->add_option("--alignment", w.text_image_alignment, "text/image alignment in [0,1]")->capture_default_str();
  app->add_option("--noise", w.noise_sigma, "per-dimension image noise")->capture_default_str();
  app->add_option("--synonym-min", w.synonym_similarity_min)->capture_default_str();
  app->add_option("--synonym-max", w.synonym_similarity_max)->capture_default_str();
  app->add_option("--world-seed", d.world_seed, "world seed (defaults to --seed)");
}

void add_run_flags(CLI::App* app, RunOptions& r) {
  app->add_option("--seed", r.seed)->capture_default_str();
  app->add_option("--iterations", r.iterations);
  app->add_option("--rounds", r.rounds);
  app->add_option("--scaling", r.scaling, "svr-linear|svr-rbf|svr-sigmoid|knn|linear|logistic|none|exact")
      ->capture_default_str();
  app->add_option("--lambda", r.lambda, "ridge strength")->capture_default_str();
  app->add_option("--negatives", r.negatives, "nouns used by the scaling fit (0: all)")->capture_default_str();
  app->add_option("--system", r.systems, "system to run (repeatable)");
  app->add_flag("--full", r.full, "long runs: 3000 iterations for exp2 and synonyms");
  app->add_option("--csv", r.csv, "report path (default: stdout)");
}

Dataset load_data(const DataOptions& d, std::uint64_t seed) {
  if (d.embeddings.empty() != d.manifest.empty())
    throw InvalidInput("--embeddings and --manifest must be given together");
  if (!d.embeddings.empty()) {
    try {
      return import_dataset(d.manifest, d.embeddings);
    } catch (const std::exception& e) {
      throw DataFailure(e.what());
    }
  }
  auto w = d.world;
  w.seed = d.world_seed.value_or(seed);
  w.validate();
  return generate_world(w);
}

CollieConfig base_config(const RunOptions& r) {
  CollieConfig c;
  c.lambda = r.lambda;
  c.scaling = ScalingConfig::parse(r.scaling);
  c.scaling.negatives_count = r.negatives;
  return c;
}

std::vector<SystemSpec> systems_for(const RunOptions& r, std::vector<std::string> defaults) {
  const auto base = base_config(r);
  std::vector<SystemSpec> out;
  for (const auto& n : r.systems.empty() ? defaults : r.systems) out.push_back(system_from_name(n, base));
  return out;
}

void emit(const RunOptions& r, const std::vector<ReportRow>& rows) {
  if (r.csv.empty()) {
    write_report_csv(std::cout, rows);
    return;
  }
  std::ofstream out(r.csv);
  if (!out) throw InvalidInput("cannot write " + r.csv);
  write_report_csv(out, rows);
}

fs::path ensure_dir(const std::string& dir) {
  if (dir.empty()) throw InvalidInput("--out is required");
  fs::create_directories(dir);
  return dir;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  const auto p = ensure_dir(dir);
  export_dataset(ds, (p / "embeddings.jsonl").string(), (p / "manifest.json").string());
  std::fprintf(stderr, "wrote %s and %s\n", (p / "embeddings.jsonl").c_str(), (p / "manifest.json").c_str());
}

void print_summary(const Dataset& ds) {
  std::printf("dim %zu\n", ds.dim);
  std::printf("referents %zu (%zu shapes x %zu colors)%s\n", ds.referents.size(), ds.shape_names.size(),
              ds.color_names.size(), ds.has_synonyms() ? ", with synonyms" : "");
  std::printf("categories %zu\n", ds.categories.size());
  std::printf("pseudowords %zu\n", ds.pseudowords.size());
  std::printf("nouns %zu\n", ds.nouns ? ds.nouns->size() : 0);
  if (ds.has_tangrams()) {
    std::vector<Candidate> c;
    for (const auto& r : ds.referents) c.push_back({r.image_id, r.image});
    const CandidateSet cs(c);
    double sum = 0.0;
    for (std::size_t q = 0; q < ds.referents.size(); ++q)
      sum += 1.0 / static_cast<double>(rank_of(cs.cosines(ds.referents[q].text.to_doubles()), q));
    std::printf("zero-shot referent MRR %.4f (random %.4f)\n", sum / static_cast<double>(ds.referents.size()),
                random_baseline_mrr(ds.referents.size()));
  }
}

// Every text embedding in the dataset, keyed by its lowercased label.
std::map<std::string, Embedding> text_index(const Dataset& ds) {
  std::map<std::string, Embedding> out;
  for (const auto& r : ds.referents) {
    out.emplace(normalize_expression(r.expression), r.text);
    if (r.synonym_text) out.emplace(normalize_expression(r.synonym_expression), *r.synonym_text);
  }
  for (const auto& c : ds.categories) out.emplace(normalize_expression(c.name), c.text);
  for (const auto& p : ds.pseudowords) out.emplace(normalize_expression(p.word), p.text);
  if (ds.nouns)
    for (std::size_t i = 0; i < ds.nouns->size(); ++i)
      out.emplace(normalize_expression(ds.nouns->texts()[i]), ds.nouns->embeddings()[i]);
  return out;
}

std::vector<Candidate> image_candidates(const Dataset& ds) {
  std::vector<Candidate> c;
  if (ds.has_tangrams()) {
    for (const auto& r : ds.referents) c.push_back({r.image_id, r.image});
  } else {
    for (const auto& k : ds.categories) c.push_back({k.image_ids.front(), k.images.front()});
  }
  return c;
}

int run_resolve(const Dataset& ds, const RunOptions& r, const std::string& expression,
                const std::vector<std::string>& teach, const std::string& load_model,
                const std::string& save_model, std::size_t top) {
  const auto texts = text_index(ds);
  auto lookup = [&](const std::string& e) -> const Embedding& {
    const auto it = texts.find(normalize_expression(e));
    if (it == texts.end()) throw InvalidInput("expression '" + e + "' has no embedding in the dataset");
    return it->second;
  };
  const auto candidates = image_candidates(ds);
  std::map<std::string, const Embedding*> images;
  for (const auto& r2 : ds.referents) images.emplace(r2.image_id, &r2.image);
  for (const auto& k : ds.categories)
    for (std::size_t j = 0; j < k.images.size(); ++j) images.emplace(k.image_ids[j], &k.images[j]);

  std::optional<CollieModel> model;
  if (!load_model.empty()) {
    std::ifstream in(load_model);
    if (!in) throw DataFailure("cannot open model snapshot " + load_model);
    try {
      model.emplace(CollieModel::load(in));
    } catch (const std::exception& e) {
      throw DataFailure(load_model + ": " + e.what());
    }
    require_same_dim(ds.dim, model->dim(), "model snapshot");
  } else {
    model.emplace(ds.dim, ds.nouns, base_config(r));
  }
  for (const auto& t : teach) {
    const auto eq = t.rfind('=');
    if (eq == std::string::npos) throw InvalidInput("--teach expects EXPRESSION=IMAGE_ID, got '" + t + "'");
    const auto img = images.find(t.substr(eq + 1));
    if (img == images.end()) throw InvalidInput("unknown image id '" + t.substr(eq + 1) + "'");
    const auto text = t.substr(0, eq);
    model->add_example({text, lookup(text), img->first, *img->second});
  }
  if (!model->trained()) model->retrain();

  const auto& t = lookup(expression);
  const auto ranked = zero_shot_rank(model->transform(t), candidates);
  std::printf("expression: %s\nscale: %.4f\n", expression.c_str(), model->scale(t));
  std::printf("rank,candidate,cosine,probability\n");
  for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i)
    std::printf("%zu,%s,%.6f,%.6f\n", i + 1, ranked[i].candidate_id.c_str(), ranked[i].score,
                ranked[i].softmax_prob);

  if (!save_model.empty()) {
    std::ofstream out(save_model);
    if (!out) throw InvalidInput("cannot write " + save_model);
    model->save(out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual language grounding harness"};
  app.require_subcommand(1);

  DataOptions data;
  RunOptions run;
  std::string out_dir;

  auto* gen = app.add_subcommand("gen-world", "generate a synthetic world and write it to --out");
  add_data_flags(gen, data);
  gen->add_option("--seed", run.seed)->capture_default_str();
  gen->add_option("--out", out_dir)->required();

  auto* exp1 = app.add_subcommand("run-exp1", "new words on known categories");
  add_data_flags(exp1, data);
  add_run_flags(exp1, run);
  exp1->add_option("--train-categories", run.train_categories, "categories taught new names")->capture_default_str();

  auto* exp2 = app.add_subcommand("run-exp2", "one referent per round on the shape x color grid");
  add_data_flags(exp2, data);
  add_run_flags(exp2, run);

  auto* comp = app.add_subcommand("run-compositional", "train one color, evaluate the others");
  add_data_flags(comp, data);
  add_run_flags(comp, run);

  auto* syn = app.add_subcommand("run-synonyms", "evaluate trained models on shape synonyms");
  add_data_flags(syn, data);
  add_run_flags(syn, run);
  syn->add_option("--per-shape", run.per_shape_csv, "per-shape CSV path");

  auto* imp = app.add_subcommand("import", "validate an embedding file and manifest, print a summary");
  imp->add_option("--embeddings", data.embeddings)->required()->check(CLI::ExistingFile);
  imp->add_option("--manifest", data.manifest)->required()->check(CLI::ExistingFile);

  auto* exp = app.add_subcommand("export", "write the dataset (imported or synthetic) to --out");
  add_data_flags(exp, data);
  exp->add_option("--seed", run.seed)->capture_default_str();
  exp->add_option("--out", out_dir)->required();

  std::string expression, load_model, save_model;
  std::vector<std::string> teach;
  std::size_t top = 10;
  auto* res = app.add_subcommand("resolve", "rank candidates for one expression");
  add_data_flags(res, data);
  res->add_option("--seed", run.seed)->capture_default_str();
  res->add_option("--scaling", run.scaling)->capture_default_str();
  res->add_option("--lambda", run.lambda)->capture_default_str();
  res->add_option("--negatives", run.negatives)->capture_default_str();
  res->add_option("--expression", expression)->required();
  res->add_option("--teach", teach, "EXPRESSION=IMAGE_ID pair to learn first (repeatable)");
  res->add_option("--load-model", load_model, "model snapshot to start from")->check(CLI::ExistingFile);
  res->add_option("--save-model", save_model, "write the model snapshot here");
  res->add_option("--top", top)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const Dataset ds = load_data(data, run.seed);

    if (*gen || *exp) {
      write_dataset(ds, out_dir);
    } else if (*imp) {
      print_summary(ds);
    } else if (*exp1) {
      Exp1Config c;
      c.n_train_categories = run.train_categories;
      c.n_categories_total = ds.categories.size();
      c.rounds = run.rounds.value_or(c.rounds);
      c.iterations = run.iterations.value_or(c.iterations);
      c.systems = systems_for(run, {"collie", "collie_no_scaling", "clip_baseline", "fewshot"});
      c.seed = run.seed;
      emit(run, run_experiment1(c, ds).rows);
    } else if (*exp2) {
      Exp2Config c;
      c.rounds = run.rounds.value_or(c.rounds);
      c.iterations = run.iterations.value_or(run.full ? 3000 : c.iterations);
      c.systems = systems_for(run, {"collie", "collie_no_scaling", "fewshot", "clip_baseline"});
      c.seed = run.seed;
      emit(run, run_experiment2(c, ds).rows);
    } else if (*comp) {
      CompositionalConfig c;
      c.iterations = run.iterations.value_or(c.iterations);
      c.collie = base_config(run);
      c.seed = run.seed;
      emit(run, run_compositional_test(c, ds).rows);
    } else if (*syn) {
      SynonymConfig c;
      c.rounds = run.rounds.value_or(c.rounds);
      c.iterations = run.iterations.value_or(run.full ? 3000 : c.iterations);
      c.collie = base_config(run);
      c.seed = run.seed;
      const auto r = run_synonym_test(c, ds);
      emit(run, r.overall.rows);
      if (!run.per_shape_csv.empty()) {
        std::ofstream out(run.per_shape_csv);
        if (!out) throw InvalidInput("cannot write " + run.per_shape_csv);
        write_shape_csv(out, r.per_shape);
      }
    } else if (*res) {
      return run_resolve(ds, run, expression, teach, load_model, save_model, top);
    }
  } catch (const DataFailure& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
