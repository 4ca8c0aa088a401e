#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "collie/dataset.hpp"

namespace collie {

/// Malformed or inconsistent input files. The message names the file and
/// the line or record at fault.
class DataError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// One line of the embedding file.
struct EmbeddingRecord {
  std::string id;
  std::string kind;   // "text" or "image"
  std::string label;
  std::string meta;   // compact JSON object
  Embedding vector;   // normalized on load
};

/// Reads the header line {"dim","count","version"} and `count` records.
std::vector<EmbeddingRecord> read_embedding_file(std::istream& in, const std::string& name = "embeddings");
std::vector<EmbeddingRecord> read_embedding_file(const std::string& path);
void write_embedding_file(std::ostream& out, std::size_t dim, const std::vector<EmbeddingRecord>& records);

/// Writes every embedding of the dataset plus a manifest mapping the
/// experiment roles to record ids.
void export_dataset(const Dataset& ds, const std::string& embeddings_path, const std::string& manifest_path);
Dataset import_dataset(const std::string& manifest_path, const std::string& embeddings_path);

}  // namespace collie
