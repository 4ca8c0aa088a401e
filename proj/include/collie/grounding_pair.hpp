#pragma once

#include <string>

#include "collie/embedding.hpp"

namespace collie {

/// One taught example: a referring expression and the image it denotes.
struct GroundingPair {
  std::string text;
  Embedding text_embedding;
  std::string image_id;
  Embedding image_embedding;

  std::size_t dim() const { return text_embedding.dim(); }
};

}  // namespace collie
