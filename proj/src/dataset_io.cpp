#include "collie/dataset_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace collie {

using nlohmann::json;

void Dataset::validate() const {
  if (dim == 0) throw InvalidInput("dataset: dim must be positive");
  std::set<std::string> ids;
  auto check = [&](const std::string& id, const Embedding& e) {
    require_same_dim(dim, e.dim(), "record '" + id + "'");
    if (std::abs(e.norm() - 1.0) > 1e-5) throw InvalidInput("record '" + id + "' is not unit-norm");
  };
  if (!referents.empty()) {
    if (referents.size() != shape_names.size() * color_names.size())
      throw InvalidInput("dataset: expected one referent per (shape, color) combination");
    if (!synonym_names.empty() && synonym_names.size() != shape_names.size())
      throw InvalidInput("dataset: synonym table must cover every shape");
    for (std::size_t i = 0; i < referents.size(); ++i) {
      const auto& r = referents[i];
      if (r.shape * color_names.size() + r.color != i)
        throw InvalidInput("dataset: referent '" + r.image_id + "' is out of shape-major order");
      check(r.image_id, r.image);
      check(r.text_id, r.text);
      if (has_synonyms() && !r.synonym_text) throw InvalidInput("referent '" + r.image_id + "' lacks a synonym text");
      if (r.synonym_text) check(r.synonym_text_id, *r.synonym_text);
    }
  }
  for (const auto& c : categories) {
    check(c.text_id, c.text);
    if (c.images.size() != c.image_ids.size() || c.images.empty())
      throw InvalidInput("category '" + c.name + "' has no images");
    for (std::size_t j = 0; j < c.images.size(); ++j) check(c.image_ids[j], c.images[j]);
  }
  for (const auto& p : pseudowords) check(p.id, p.text);
  if (nouns && nouns->size() > 0) require_same_dim(dim, nouns->dim(), "noun corpus");
  if (nouns && noun_ids.size() != nouns->size()) throw InvalidInput("dataset: noun ids do not match the corpus");
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.dim != b.dim || a.shape_names != b.shape_names || a.color_names != b.color_names ||
      a.synonym_names != b.synonym_names || a.referents != b.referents || a.categories != b.categories ||
      a.pseudowords != b.pseudowords || a.noun_ids != b.noun_ids)
    return false;
  const bool an = a.nouns && a.nouns->size() > 0;
  const bool bn = b.nouns && b.nouns->size() > 0;
  if (an != bn) return false;
  if (!an) return true;
  return a.nouns->texts() == b.nouns->texts() && a.nouns->embeddings() == b.nouns->embeddings();
}

namespace {

std::string at_line(const std::string& name, std::size_t line) {
  return name + " line " + std::to_string(line) + ": ";
}

}  // namespace

std::vector<EmbeddingRecord> read_embedding_file(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 1;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw DataError(at_line(name, 1) + "missing header");
  std::size_t dim = 0, count = 0;
  try {
    const auto h = json::parse(line);
    if (!h.is_object() || !h.contains("dim") || !h.contains("count"))
      throw DataError(at_line(name, 1) + "header must contain dim and count");
    if (h.value("version", 1) != 1) throw DataError(at_line(name, 1) + "unsupported version");
    dim = h.at("dim").get<std::size_t>();
    count = h.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(at_line(name, 1) + "bad header (byte " + std::to_string(offset) + "): " + e.what());
  }
  if (dim == 0) throw DataError(at_line(name, 1) + "dim must be positive");
  offset += line.size() + 1;

  std::vector<EmbeddingRecord> out;
  out.reserve(count);
  std::set<std::string> ids;
  while (out.size() < count) {
    ++line_no;
    if (!std::getline(in, line))
      throw DataError(at_line(name, line_no) + "unexpected end of file after " + std::to_string(out.size()) +
                      " of " + std::to_string(count) + " records (byte " + std::to_string(offset) + ")");
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      throw DataError(at_line(name, line_no) + "empty line where a record was expected");
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(at_line(name, line_no) + "malformed JSON at byte " + std::to_string(line_start + e.byte - 1) +
                      ": " + e.what());
    }
    EmbeddingRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.kind = j.at("kind").get<std::string>();
      r.label = j.value("label", std::string{});
      r.meta = j.contains("meta") ? j.at("meta").dump() : "{}";
      const auto vec = j.at("vector").get<std::vector<double>>();
      if (r.kind != "text" && r.kind != "image")
        throw DataError(at_line(name, line_no) + "record '" + r.id + "': kind must be text or image");
      if (vec.size() != dim)
        throw DimensionMismatch(dim, vec.size(), name + " line " + std::to_string(line_no) + ", record '" + r.id + "'");
      r.vector = normalize(Embedding::from_doubles(vec));
    } catch (const json::exception& e) {
      throw DataError(at_line(name, line_no) + "bad record: " + e.what());
    } catch (const DimensionMismatch&) {
      throw;
    } catch (const DataError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw DataError(at_line(name, line_no) + "record '" + r.id + "': " + e.what());
    }
    if (!ids.insert(r.id).second) throw DataError(at_line(name, line_no) + "duplicate id '" + r.id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EmbeddingRecord> read_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");
  return read_embedding_file(in, path);
}

void write_embedding_file(std::ostream& out, std::size_t dim, const std::vector<EmbeddingRecord>& records) {
  out << json{{"dim", dim}, {"count", records.size()}, {"version", 1}}.dump() << '\n';
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["kind"] = r.kind;
    j["label"] = r.label;
    j["meta"] = json::parse(r.meta);
    j["vector"] = r.vector.values();
    out << j.dump() << '\n';
  }
}

void export_dataset(const Dataset& ds, const std::string& embeddings_path, const std::string& manifest_path) {
  ds.validate();
  std::vector<EmbeddingRecord> recs;
  json manifest{{"version", 1}, {"dim", ds.dim}};
  manifest["shapes"] = ds.shape_names;
  manifest["colors"] = ds.color_names;
  json synonyms = json::object();
  for (std::size_t s = 0; s < ds.synonym_names.size(); ++s) synonyms[ds.shape_names[s]] = ds.synonym_names[s];
  manifest["synonyms"] = synonyms;

  json expressions = json::array();
  for (const auto& r : ds.referents) {
    const json meta{{"shape", ds.shape_names[r.shape]}, {"color", ds.color_names[r.color]}};
    recs.push_back({r.image_id, "image", ds.color_names[r.color] + " " + ds.shape_names[r.shape], meta.dump(), r.image});
    recs.push_back({r.text_id, "text", r.expression, meta.dump(), r.text});
    json e{{"shape", r.shape}, {"color", r.color}, {"image", r.image_id}, {"text", r.text_id}};
    if (r.synonym_text) {
      recs.push_back({r.synonym_text_id, "text", r.synonym_expression, meta.dump(), *r.synonym_text});
      e["synonym"] = r.synonym_text_id;
    }
    expressions.push_back(e);
  }
  manifest["expressions"] = expressions;

  std::set<std::string> written;
  json nouns = json::array();
  if (ds.nouns) {
    for (std::size_t i = 0; i < ds.nouns->size(); ++i) {
      recs.push_back({ds.noun_ids[i], "text", ds.nouns->texts()[i], "{}", ds.nouns->embeddings()[i]});
      written.insert(ds.noun_ids[i]);
      nouns.push_back(ds.noun_ids[i]);
    }
  }
  manifest["nouns"] = nouns;

  json categories = json::array();
  for (const auto& c : ds.categories) {
    if (!written.contains(c.text_id)) {
      recs.push_back({c.text_id, "text", c.name, "{}", c.text});
      written.insert(c.text_id);
    }
    for (std::size_t j = 0; j < c.images.size(); ++j)
      recs.push_back({c.image_ids[j], "image", c.name, json{{"category", c.name}}.dump(), c.images[j]});
    categories.push_back({{"name", c.name}, {"text", c.text_id}, {"images", c.image_ids}});
  }
  manifest["categories"] = categories;

  json pws = json::array();
  for (const auto& p : ds.pseudowords) {
    recs.push_back({p.id, "text", p.word, json{{"template", "bare"}}.dump(), p.text});
    pws.push_back(p.id);
  }
  manifest["pseudowords"] = pws;

  std::ofstream eo(embeddings_path);
  if (!eo) throw DataError("cannot write '" + embeddings_path + "'");
  write_embedding_file(eo, ds.dim, recs);
  std::ofstream mo(manifest_path);
  if (!mo) throw DataError("cannot write '" + manifest_path + "'");
  mo << manifest.dump(1) << '\n';
  if (!eo || !mo) throw DataError("write failure while exporting the dataset");
}

Dataset import_dataset(const std::string& manifest_path, const std::string& embeddings_path) {
  std::ifstream mi(manifest_path);
  if (!mi) throw DataError("cannot open manifest '" + manifest_path + "'");
  json m;
  try {
    m = json::parse(mi);
  } catch (const json::parse_error& e) {
    throw DataError(manifest_path + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  const auto records = read_embedding_file(embeddings_path);
  std::unordered_map<std::string, const EmbeddingRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  Dataset ds;
  ds.dim = records.empty() ? m.value("dim", std::size_t{0}) : records.front().vector.dim();

  auto need = [&](const std::string& id, const char* kind, const std::string& role) -> const EmbeddingRecord& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError(manifest_path + ": " + role + " refers to unknown record '" + id + "'");
    if (it->second->kind != kind)
      throw DataError(manifest_path + ": record '" + id + "' used as " + role + " must be of kind " + kind);
    return *it->second;
  };

  try {
    if (m.contains("dim") && m.at("dim").get<std::size_t>() != ds.dim)
      throw DimensionMismatch(m.at("dim").get<std::size_t>(), ds.dim, manifest_path);
    ds.shape_names = m.value("shapes", std::vector<std::string>{});
    ds.color_names = m.value("colors", std::vector<std::string>{});
    if (m.contains("synonyms") && !m.at("synonyms").empty()) {
      const auto& syn = m.at("synonyms");
      for (const auto& s : ds.shape_names) {
        if (!syn.contains(s)) throw DataError(manifest_path + ": synonym table lacks shape '" + s + "'");
        ds.synonym_names.push_back(syn.at(s).get<std::string>());
      }
    }
    if (m.contains("expressions")) {
      std::vector<std::optional<Referent>> slots(ds.shape_names.size() * ds.color_names.size());
      for (const auto& e : m.at("expressions")) {
        const auto s = e.at("shape").get<std::size_t>();
        const auto c = e.at("color").get<std::size_t>();
        if (s >= ds.shape_names.size() || c >= ds.color_names.size())
          throw DataError(manifest_path + ": expression for image '" + e.value("image", "") + "' has an out-of-range shape or color");
        const std::size_t idx = s * ds.color_names.size() + c;
        if (slots[idx]) throw DataError(manifest_path + ": duplicate (shape, color) for image '" + e.value("image", "") + "'");
        const auto& img = need(e.at("image").get<std::string>(), "image", "expression image");
        const auto& txt = need(e.at("text").get<std::string>(), "text", "expression text");
        Referent r{s, c, img.id, img.vector, txt.id, txt.label, txt.vector, {}, {}, std::nullopt};
        if (e.contains("synonym")) {
          const auto& syn = need(e.at("synonym").get<std::string>(), "text", "synonym text");
          r.synonym_text_id = syn.id;
          r.synonym_expression = syn.label;
          r.synonym_text = syn.vector;
        }
        slots[idx] = std::move(r);
      }
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i])
          throw DataError(manifest_path + ": missing expression for shape '" +
                          ds.shape_names[i / ds.color_names.size()] + "', color '" +
                          ds.color_names[i % ds.color_names.size()] + "'");
        ds.referents.push_back(std::move(*slots[i]));
      }
    }
    std::vector<std::string> noun_texts;
    std::vector<Embedding> noun_vecs;
    for (const auto& id : m.value("nouns", std::vector<std::string>{})) {
      const auto& r = need(id, "text", "noun");
      ds.noun_ids.push_back(id);
      noun_texts.push_back(r.label);
      noun_vecs.push_back(r.vector);
    }
    ds.nouns = std::make_shared<NegativeCorpus>(std::move(noun_texts), std::move(noun_vecs));
    for (const auto& c : m.value("categories", json::array())) {
      Category cat;
      cat.name = c.at("name").get<std::string>();
      const auto& t = need(c.at("text").get<std::string>(), "text", "category '" + cat.name + "' name");
      cat.text_id = t.id;
      cat.text = t.vector;
      for (const auto& id : c.at("images").get<std::vector<std::string>>()) {
        cat.image_ids.push_back(id);
        cat.images.push_back(need(id, "image", "category '" + cat.name + "' image").vector);
      }
      ds.categories.push_back(std::move(cat));
    }
    for (const auto& id : m.value("pseudowords", std::vector<std::string>{})) {
      const auto& r = need(id, "text", "pseudo-word");
      ds.pseudowords.push_back({id, r.label, r.vector});
    }
  } catch (const json::exception& e) {
    throw DataError(manifest_path + ": " + e.what());
  }
  try {
    ds.validate();
  } catch (const DimensionMismatch&) {
    throw;
  } catch (const InvalidInput& e) {
    throw DataError(std::string("imported dataset: ") + e.what());
  }
  return ds;
}

}  // namespace collie
