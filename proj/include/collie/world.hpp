#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "collie/dataset.hpp"

namespace collie {

/// Generator settings. The first block mirrors the user-facing knobs; the
/// geometry block fixes how strongly each subspace contributes and is
/// calibrated so the default world behaves like the real embeddings.
struct WorldConfig {
  std::size_t dim = 64;
  std::size_t n_shapes = 17;
  std::size_t n_colors = 5;
  std::size_t n_categories = 200;
  std::size_t images_per_category = 6;
  double text_image_alignment = 0.17;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  // Synonym shape blocks sit at a cosine drawn from this range to the
  // original shape-name block. 1.0 makes synonyms identical.
  double synonym_similarity_min = 0.80;
  double synonym_similarity_max = 0.95;

  // geometry
  double modality_weight = 0.6;     // shared text / image axis
  double shape_weight = 1.0;
  double color_weight = 1.2;
  double template_weight = 0.8;     // shared by every "the <color> <shape>" phrase
  double color_share = 0.3;         // color prototypes lean on a common direction
  double semantic_weight = 1.0;
  double supercategory_share = 0.5;  // category prototypes lean on 4 broad groups
  double photo_variation = 0.9;       // spread of photos around a category prototype
  double name_variation = 0.7;       // idiosyncrasy of a category's name
  double text_noise = 0.005;
  double novelty_weight = 0.6;       // shared direction of unseen words
  double form_weight_min = 0.2;      // surface-form magnitude of unseen words
  double form_weight_max = 0.5;
  // Unseen words vary over the shape and color blocks plus this many
  // semantic dimensions (sound-alike overlap with real words; capped at the
  // semantic block size) ...
  std::size_t form_semantic_dims = 19;
  // ... and carry only this much meaning along the remaining ones.
  double form_meaning_leak = 1e-4;

  std::size_t n_supercategories = 4;

  /// Throws InvalidInput on an unusable configuration.
  void validate() const;
};

/// Subspace layout of the generated embeddings.
struct WorldLayout {
  std::size_t text_axis = 0;
  std::size_t image_axis = 1;
  std::size_t novelty_axis = 2;
  std::size_t template_axis = 3;
  std::size_t shape_begin = 0, shape_size = 0;
  std::size_t color_begin = 0, color_size = 0;
  std::size_t semantic_begin = 0, semantic_size = 0;

  static WorldLayout for_config(const WorldConfig& config);
};

Dataset generate_world(const WorldConfig& config);

inline constexpr std::size_t kPseudowordCapacity = 10000;

/// Distinct pronounceable CVC(C)VC-style strings of length 4-7 that never
/// collide with the bundled noun list.
std::vector<std::string> generate_pseudowords(std::size_t n, std::uint64_t seed);

/// The bundled list of 1,000 common nouns, one per line, lowercase.
const std::vector<std::string>& bundled_nouns();

/// Reads a noun list file; requires exactly 1,000 distinct lowercase lines.
std::vector<std::string> load_noun_list(const std::string& path);

/// Default names used by the generator.
std::string shape_name(std::size_t shape);
std::string shape_synonym(std::size_t shape);
std::string color_name(std::size_t color);
std::string referring_expression(std::string_view color, std::string_view shape);

}  // namespace collie
