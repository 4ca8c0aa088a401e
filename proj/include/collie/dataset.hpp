#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "collie/embedding.hpp"
#include "collie/scaling.hpp"

namespace collie {

/// One tangram-style referent: a single image of a (shape, color)
/// combination together with its referring expression.
struct Referent {
  std::size_t shape = 0;
  std::size_t color = 0;
  std::string image_id;
  Embedding image;
  std::string text_id;
  std::string expression;
  Embedding text;
  // Same referent described with the shape's synonym; absent when the
  // dataset has no synonym table.
  std::string synonym_text_id;
  std::string synonym_expression;
  std::optional<Embedding> synonym_text;

  bool operator==(const Referent&) const = default;
};

/// An object category with its (known) name and several distinct photos.
struct Category {
  std::string name;
  std::string text_id;
  Embedding text;
  std::vector<std::string> image_ids;
  std::vector<Embedding> images;

  bool operator==(const Category&) const = default;
};

struct PseudoWord {
  std::string id;
  std::string word;
  Embedding text;

  bool operator==(const PseudoWord&) const = default;
};

/// Everything the experiments consume, whether generated or imported.
/// All embeddings are unit-norm and share `dim`.
struct Dataset {
  std::size_t dim = 0;
  std::vector<std::string> shape_names;
  std::vector<std::string> color_names;
  std::vector<std::string> synonym_names;  // parallel to shape_names; empty when absent
  std::vector<Referent> referents;         // shape-major: index = shape * n_colors + color
  std::vector<Category> categories;
  std::vector<PseudoWord> pseudowords;
  std::vector<std::string> noun_ids;
  std::shared_ptr<const NegativeCorpus> nouns;

  bool has_tangrams() const { return !referents.empty(); }
  bool has_categories() const { return !categories.empty(); }
  bool has_synonyms() const { return !synonym_names.empty(); }
  const Referent& referent(std::size_t shape, std::size_t color) const {
    return referents[shape * color_names.size() + color];
  }

  /// Checks the structural invariants; throws InvalidInput naming the
  /// offending record.
  void validate() const;
};

/// Deep equality, including every stored float.
bool same_dataset(const Dataset& a, const Dataset& b);

}  // namespace collie
