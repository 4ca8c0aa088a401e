#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "collie/dataset_io.hpp"
#include "collie/world.hpp"

using namespace collie;

namespace {

std::string vec_json(std::size_t d, double fill) {
  std::string s = "[";
  for (std::size_t i = 0; i < d; ++i) s += (i ? "," : "") + std::to_string(fill + static_cast<double>(i));
  return s + "]";
}

std::string record(const std::string& id, std::size_t d, const char* kind = "text") {
  return "{\"id\":\"" + id + "\",\"kind\":\"" + kind + "\",\"label\":\"" + id + "\",\"meta\":{},\"vector\":" +
         vec_json(d, 1.0) + "}\n";
}

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_embedding_file(in, "emb.jsonl");
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("records are read and normalized") {
  std::istringstream in("{\"dim\":2,\"count\":2,\"version\":1}\n"
                        "{\"id\":\"a\",\"kind\":\"image\",\"label\":\"A\",\"meta\":{\"k\":1},\"vector\":[3,4]}\n"
                        "{\"id\":\"b\",\"kind\":\"text\",\"label\":\"B\",\"meta\":{},\"vector\":[0,2]}\n");
  const auto r = read_embedding_file(in);
  REQUIRE(r.size() == 2);
  CHECK(r[0].id == "a");
  CHECK(r[0].kind == "image");
  CHECK(r[0].label == "A");
  CHECK(r[0].meta == "{\"k\":1}");
  CHECK(r[0].vector[0] == doctest::Approx(0.6));
  CHECK(r[0].vector[1] == doctest::Approx(0.8));
  CHECK(r[1].vector[1] == 1.0f);
}

TEST_CASE("write then read") {
  std::vector<EmbeddingRecord> recs{{"x", "text", "the x", "{\"template\":\"bare\"}", normalize(Embedding({1, 2, 2}))},
                                    {"y", "image", "", "{}", normalize(Embedding({0, 0, 5}))}};
  std::stringstream buf;
  write_embedding_file(buf, 3, recs);
  const auto back = read_embedding_file(buf);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].id == recs[i].id);
    CHECK(back[i].kind == recs[i].kind);
    CHECK(back[i].label == recs[i].label);
    CHECK(back[i].meta == recs[i].meta);
    CHECK(back[i].vector == recs[i].vector);
  }
}

TEST_CASE("malformed files name the place at fault") {
  const std::string header = "{\"dim\":4,\"count\":3,\"version\":1}\n";
  auto msg = error_of(header + record("a", 4) + record("b", 4));
  CHECK(contains(msg, "line 4"));
  CHECK(contains(msg, "after 2 of 3 records"));

  const std::string cut = record("c", 4).substr(0, 30);
  msg = error_of(header + record("a", 4) + record("b", 4) + cut);
  CHECK(contains(msg, "line 4"));
  CHECK(contains(msg, "malformed JSON at byte"));

  msg = error_of("{\"dim\":512,\"count\":1,\"version\":1}\n" + record("small", 64));
  CHECK(contains(msg, "record 'small'"));
  CHECK(contains(msg, "expected 512, got 64"));
  std::istringstream in("{\"dim\":512,\"count\":1,\"version\":1}\n" + record("small", 64));
  CHECK_THROWS_AS(read_embedding_file(in), DimensionMismatch);

  msg = error_of("{\"dim\":4,\"count\":2,\"version\":1}\n" + record("a", 4) + record("a", 4));
  CHECK(contains(msg, "duplicate id 'a'"));
  CHECK(contains(error_of("{\"dim\":4,\"count\":1,\"version\":1}\n" + record("k", 4, "audio")), "kind"));
  CHECK(contains(error_of("{\"dim\":4,\"count\":1,\"version\":2}\n" + record("a", 4)), "version"));
  CHECK(contains(error_of(""), "missing header"));
  CHECK(contains(error_of("{\"dim\":4,\"count\":1}\n{\"id\":\"z\",\"kind\":\"text\",\"vector\":[0,0,0,0]}\n"),
                 "record 'z'"));
  std::istringstream dup("{\"dim\":4,\"count\":2,\"version\":1}\n" + record("a", 4) + record("a", 4));
  CHECK_THROWS_AS(read_embedding_file(dup), DataError);
}

TEST_CASE("export then import gives the same dataset") {
  WorldConfig wc;
  wc.seed = 12;
  const auto ds = generate_world(wc);
  const auto dir = std::filesystem::temp_directory_path() / "collie_io_test";
  std::filesystem::create_directories(dir);
  const auto emb = (dir / "e.jsonl").string(), man = (dir / "m.json").string();
  export_dataset(ds, emb, man);
  const auto back = import_dataset(man, emb);
  CHECK(same_dataset(ds, back));

  // Pseudo-word records carry the bare template.
  const auto recs = read_embedding_file(emb);
  std::size_t bare = 0;
  for (const auto& r : recs) bare += r.meta == "{\"template\":\"bare\"}";
  CHECK(bare == ds.pseudowords.size());

  // A manifest that points at a missing record.
  {
    std::ifstream in(man);
    std::stringstream s;
    s << in.rdbuf();
    std::string text = s.str();
    const auto pos = text.find("img/red-giraffe");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 15, "img/not-a-thing");
    std::ofstream out(man);
    out << text;
  }
  try {
    import_dataset(man, emb);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(contains(e.what(), "img/not-a-thing"));
  }
  CHECK_THROWS_AS(import_dataset((dir / "absent.json").string(), emb), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset validation") {
  WorldConfig wc;
  wc.seed = 13;
  wc.n_categories = 20;
  auto ds = generate_world(wc);
  CHECK_NOTHROW(ds.validate());
  auto broken = ds;
  broken.referents.pop_back();
  CHECK_THROWS_AS(broken.validate(), InvalidInput);
  broken = ds;
  std::swap(broken.referents[0], broken.referents[1]);
  CHECK_THROWS_AS(broken.validate(), InvalidInput);
  broken = ds;
  broken.categories[0].images[0] = Embedding({1, 0});
  CHECK_THROWS_AS(broken.validate(), DimensionMismatch);
}
