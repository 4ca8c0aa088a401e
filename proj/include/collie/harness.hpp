#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "collie/collie_model.hpp"
#include "collie/dataset.hpp"
#include "collie/eval.hpp"

namespace collie {

enum class SystemKind { collie, clip_baseline, fewshot };

/// A named system under test. Collie variants carry their model config.
struct SystemSpec {
  std::string name;
  SystemKind kind = SystemKind::collie;
  CollieConfig collie;
};

/// Built-in systems: collie, collie_no_scaling, collie_neg_adjust,
/// clip_baseline, fewshot. `base` supplies lambda and scaling for the
/// collie variants. Throws InvalidInput on an unknown name.
SystemSpec system_from_name(const std::string& name, const CollieConfig& base = {});

struct Exp1Config {
  std::size_t n_train_categories = 50;
  std::size_t n_categories_total = 200;
  std::size_t n_other_categories = 50;
  std::size_t rounds = 6;  // evaluation rounds; training follows every round but the last
  std::size_t iterations = 50;
  std::vector<SystemSpec> systems;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Exp2Config {
  std::size_t rounds = 30;  // trainings; evaluations happen at rounds 0..rounds
  std::size_t iterations = 300;
  std::vector<SystemSpec> systems;
  std::uint64_t seed = 0;
  // Referent picked in each round (indices into Dataset::referents). Empty
  // means random picks; used to pin a schedule in tests.
  std::vector<std::size_t> forced_picks;

  void validate() const;
};

struct CompositionalConfig {
  std::size_t iterations = 100;
  CollieConfig collie;
  std::uint64_t seed = 0;
  std::optional<std::size_t> train_color;  // random per iteration when unset
  std::vector<std::size_t> eval_colors;    // empty: every other color

  void validate(const Dataset& data) const;
};

struct SynonymConfig {
  std::size_t rounds = 30;
  std::size_t iterations = 300;
  CollieConfig collie;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ExperimentResult {
  std::vector<std::vector<RoundReport>> per_iteration;
  std::vector<ReportRow> rows;
};

/// Per-shape breakdown of the synonym test; one row per shape.
struct ShapeRow {
  std::string shape;
  std::string synonym;
  double clip_original = 0.0;
  double clip_synonym = 0.0;
  double collie_original = 0.0;
  double collie_synonym = 0.0;
};

struct SynonymResult {
  ExperimentResult overall;
  std::vector<ShapeRow> per_shape;
};

ExperimentResult run_experiment1(const Exp1Config& config, const Dataset& data);
ExperimentResult run_experiment2(const Exp2Config& config, const Dataset& data);
ExperimentResult run_compositional_test(const CompositionalConfig& config, const Dataset& data);
SynonymResult run_synonym_test(const SynonymConfig& config, const Dataset& data);

void write_shape_csv(std::ostream& out, const std::vector<ShapeRow>& rows);

/// Mean MRR of one (system, round, condition) cell, or nullopt.
std::optional<double> find_mrr(const std::vector<ReportRow>& rows, const std::string& system, std::size_t round,
                               Condition condition);

}  // namespace collie
