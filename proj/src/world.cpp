#include "collie/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

namespace collie {

namespace detail {
extern const std::string_view kBundledNouns;
}

namespace {

struct NamePair {
  const char* name;
  const char* synonym;
};

constexpr NamePair kShapes[] = {
    {"giraffe", "camelopard"}, {"mountain", "peak"}, {"barn", "shed"},     {"chicken", "hen"},
    {"rock", "stone"},         {"arrow", "dart"},    {"crab", "crustacean"}, {"bird", "fowl"},
    {"boat", "vessel"},        {"house", "dwelling"}, {"rabbit", "bunny"}, {"cat", "kitty"},
    {"dog", "hound"},          {"swan", "cygnet"},   {"fox", "vixen"},     {"turtle", "tortoise"},
    {"person", "human"},       {"candle", "taper"},  {"bridge", "viaduct"}, {"fish", "trout"},
    {"kite", "glider"},        {"horse", "steed"},   {"heart", "ticker"},  {"tree", "sapling"},
};

constexpr const char* kColors[] = {"red",   "green", "blue",  "yellow", "purple", "orange",
                                   "pink",  "brown", "black", "white",  "gray",   "cyan"};

using Rng = std::mt19937_64;

std::vector<double> zeros(std::size_t d) { return std::vector<double>(d, 0.0); }

// Unit vector with support on [begin, begin + size).
std::vector<double> random_unit(Rng& rng, std::size_t dim, std::size_t begin, std::size_t size) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto v = zeros(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (std::size_t i = begin; i < begin + size; ++i) {
      v[i] = g(rng);
      n += v[i] * v[i];
    }
  }
  n = std::sqrt(n);
  for (std::size_t i = begin; i < begin + size; ++i) v[i] /= n;
  return v;
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

std::vector<double> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

std::vector<double> blend(double a, const std::vector<double>& x, double b, const std::vector<double>& y) {
  auto out = zeros(x.size());
  axpy(a, x, out);
  axpy(b, y, out);
  return out;
}

// Gaussian noise over all dims, then back onto the sphere.
std::vector<double> noisy(Rng& rng, std::vector<double> v, double sigma) {
  v = unit(std::move(v));
  if (sigma > 0.0) {
    std::normal_distribution<double> g(0.0, sigma);
    for (double& x : v) x += g(rng);
  }
  return unit(std::move(v));
}

// Float embedding that is a fixed point of normalize(Embedding), so
// re-normalizing on import never changes the stored values.
Embedding stable_embedding(const std::vector<double>& v) {
  Embedding e = Embedding::from_doubles(unit(v));
  for (int k = 0; k < 3; ++k) {
    Embedding next = normalize(e);
    if (next == e) break;
    e = std::move(next);
  }
  return e;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    pos = end + 1;
  }
  return out;
}

void check_noun_list(const std::vector<std::string>& nouns, const std::string& where) {
  if (nouns.size() != 1000)
    throw InvalidInput(where + ": expected exactly 1000 nouns, found " + std::to_string(nouns.size()));
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < nouns.size(); ++i) {
    const auto& w = nouns[i];
    const bool lower = !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) {
      return std::islower(c) != 0;
    });
    if (!lower) throw InvalidInput(where + " line " + std::to_string(i + 1) + ": '" + w + "' is not a lowercase word");
    if (!seen.insert(w).second)
      throw InvalidInput(where + " line " + std::to_string(i + 1) + ": duplicate noun '" + w + "'");
  }
}

}  // namespace

void WorldConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidInput("world config: " + m); };
  if (dim == 0 || n_shapes == 0 || n_colors == 0) fail("dim, n_shapes and n_colors must be positive");
  if (n_categories == 0 || images_per_category == 0) fail("category counts must be positive");
  if (n_categories > 1000) fail("n_categories cannot exceed the 1000-noun corpus");
  if (!(text_image_alignment >= 0.0 && text_image_alignment <= 1.0)) fail("text_image_alignment must be in [0, 1]");
  if (!(noise_sigma >= 0.0) || !(text_noise >= 0.0)) fail("noise levels must be nonnegative");
  if (!(synonym_similarity_min >= 0.8 && synonym_similarity_min <= synonym_similarity_max &&
        synonym_similarity_max <= 1.0))
    fail("synonym similarity range must satisfy 0.8 <= min <= max <= 1");
  if (!(form_weight_min > 0.0 && form_weight_min <= form_weight_max)) fail("bad form weight range");
  if (!(supercategory_share >= 0.0 && supercategory_share <= 1.0)) fail("supercategory_share must be in [0, 1]");
  if (!(color_share >= 0.0 && color_share < 1.0)) fail("color_share must be in [0, 1)");
  if (n_supercategories == 0) fail("n_supercategories must be positive");
  const auto lay = WorldLayout::for_config(*this);
  if (lay.semantic_size < 8)
    fail("dim " + std::to_string(dim) + " too small: attribute blocks need " +
         std::to_string(lay.shape_begin + lay.shape_size + lay.color_size + 8) + " dimensions");
}

WorldLayout WorldLayout::for_config(const WorldConfig& c) {
  WorldLayout l;
  l.shape_begin = 4;
  l.shape_size = c.n_shapes + 3;
  l.color_begin = l.shape_begin + l.shape_size;
  l.color_size = c.n_colors + 3;
  l.semantic_begin = l.color_begin + l.color_size;
  const std::size_t used = l.semantic_begin;
  l.semantic_size = c.dim > used ? c.dim - used : 0;
  return l;
}

std::string shape_name(std::size_t shape) {
  if (shape < std::size(kShapes)) return kShapes[shape].name;
  return "shape" + std::to_string(shape);
}

std::string shape_synonym(std::size_t shape) {
  if (shape < std::size(kShapes)) return kShapes[shape].synonym;
  return "figure" + std::to_string(shape);
}

std::string color_name(std::size_t color) {
  if (color < std::size(kColors)) return kColors[color];
  return "color" + std::to_string(color);
}

std::string referring_expression(std::string_view color, std::string_view shape) {
  return "the " + std::string(color) + " " + std::string(shape);
}

const std::vector<std::string>& bundled_nouns() {
  static const std::vector<std::string> nouns = [] {
    auto v = split_lines(detail::kBundledNouns);
    while (!v.empty() && v.back().empty()) v.pop_back();
    check_noun_list(v, "bundled noun list");
    return v;
  }();
  return nouns;
}

std::vector<std::string> load_noun_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open noun list '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  check_noun_list(out, path);
  return out;
}

std::vector<std::string> generate_pseudowords(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidInput("generate_pseudowords: n must be >= 1");
  if (n > kPseudowordCapacity)
    throw InvalidInput("generate_pseudowords: n = " + std::to_string(n) + " exceeds capacity " +
                       std::to_string(kPseudowordCapacity));
  static constexpr std::string_view onset = "bdfgklmnprstvz";
  static constexpr std::string_view coda = "bdgklmnprst";
  static constexpr std::string_view vowels = "aeiou";
  // CVC, optional extra coda consonant, optional VC tail: lengths 4..7.
  static constexpr const char* patterns[] = {"CVCC", "CVCVC", "CVCCVC", "CVCVCC", "CVCCVCC"};

  const auto& nouns = bundled_nouns();
  const std::unordered_set<std::string> taken(nouns.begin(), nouns.end());
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(n);
  Rng rng(seed ^ 0x70736575646fULL);
  auto pick = [&](std::string_view s) {
    return s[std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng)];
  };
  while (out.size() < n) {
    const std::string_view p = patterns[std::uniform_int_distribution<std::size_t>(0, std::size(patterns) - 1)(rng)];
    std::string w;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == 'V') w += pick(vowels);
      else w += pick(i == 0 || p[i - 1] == 'V' ? onset : coda);
    }
    if (taken.contains(w) || !seen.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

Dataset generate_world(const WorldConfig& config) {
  config.validate();
  const auto lay = WorldLayout::for_config(config);
  const std::size_t D = config.dim;
  Rng rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto axis = [&](std::size_t i) {
    auto v = zeros(D);
    v[i] = 1.0;
    return v;
  };
  const auto text_axis = axis(lay.text_axis);
  const auto image_axis = axis(lay.image_axis);
  const auto novelty_axis = axis(lay.novelty_axis);
  const auto template_axis = axis(lay.template_axis);
  const double g = config.modality_weight;

  Dataset ds;
  ds.dim = D;

  // Attribute prototypes. Text shape blocks mix the image prototype with an
  // unrelated direction; color blocks are shared verbatim.
  std::vector<std::vector<double>> shape_img, shape_txt, shape_syn, color_proto;
  for (std::size_t s = 0; s < config.n_shapes; ++s) {
    auto p = random_unit(rng, D, lay.shape_begin, lay.shape_size);
    auto q = random_unit(rng, D, lay.shape_begin, lay.shape_size);
    const double a = config.text_image_alignment;
    auto t = a == 1.0 ? p : unit(blend(a, p, 1.0 - a, q));
    // Synonym: rotate the text block away by a controlled angle.
    const double k = config.synonym_similarity_min +
                     (config.synonym_similarity_max - config.synonym_similarity_min) * unif(rng);
    auto o = random_unit(rng, D, lay.shape_begin, lay.shape_size);
    double proj = 0.0;
    for (std::size_t i = 0; i < D; ++i) proj += o[i] * t[i];
    axpy(-proj, t, o);
    o = unit(std::move(o));
    auto syn = k == 1.0 ? t : blend(k, t, std::sqrt(1.0 - k * k), o);
    shape_img.push_back(std::move(p));
    shape_txt.push_back(std::move(t));
    shape_syn.push_back(std::move(syn));
    ds.shape_names.push_back(shape_name(s));
    ds.synonym_names.push_back(shape_synonym(s));
  }
  const auto color_common = random_unit(rng, D, lay.color_begin, lay.color_size);
  const double kc = config.color_share;
  for (std::size_t c = 0; c < config.n_colors; ++c) {
    auto own = random_unit(rng, D, lay.color_begin, lay.color_size);
    color_proto.push_back(unit(blend(kc, color_common, std::sqrt(1.0 - kc * kc), own)));
    ds.color_names.push_back(color_name(c));
  }

  for (std::size_t s = 0; s < config.n_shapes; ++s) {
    for (std::size_t c = 0; c < config.n_colors; ++c) {
      Referent r;
      r.shape = s;
      r.color = c;
      const auto tag = ds.color_names[c] + "-" + ds.shape_names[s];
      auto img = blend(g, image_axis, config.shape_weight, shape_img[s]);
      axpy(config.color_weight, color_proto[c], img);
      r.image_id = "img/" + tag;
      r.image = stable_embedding(noisy(rng, img, config.noise_sigma));

      auto base = blend(g, text_axis, config.color_weight, color_proto[c]);
      axpy(config.template_weight, template_axis, base);
      auto txt = base;
      axpy(config.shape_weight, shape_txt[s], txt);
      auto syn = base;
      axpy(config.shape_weight, shape_syn[s], syn);
      // One noise draw per referent, shared by both phrasings.
      std::normal_distribution<double> tn(0.0, config.text_noise);
      auto noise = zeros(D);
      for (double& x : noise) x = config.text_noise > 0.0 ? tn(rng) : 0.0;
      txt = unit(txt);
      syn = unit(syn);
      axpy(1.0, noise, txt);
      axpy(1.0, noise, syn);
      r.text_id = "expr/" + tag;
      r.expression = referring_expression(ds.color_names[c], ds.shape_names[s]);
      r.text = stable_embedding(txt);
      r.synonym_text_id = "syn/" + tag;
      r.synonym_expression = referring_expression(ds.color_names[c], ds.synonym_names[s]);
      r.synonym_text = stable_embedding(syn);
      ds.referents.push_back(std::move(r));
    }
  }

  // Nouns: meanings cluster around a few broad groups.
  std::vector<std::vector<double>> groups;
  for (std::size_t k = 0; k < config.n_supercategories; ++k)
    groups.push_back(random_unit(rng, D, lay.semantic_begin, lay.semantic_size));
  const auto& words = bundled_nouns();
  const double rho = config.supercategory_share;
  std::vector<std::vector<double>> meaning(words.size());
  std::vector<std::string> noun_texts;
  std::vector<Embedding> noun_embeddings;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& grp = groups[std::uniform_int_distribution<std::size_t>(0, groups.size() - 1)(rng)];
    auto own = random_unit(rng, D, lay.semantic_begin, lay.semantic_size);
    meaning[i] = unit(blend(rho, grp, std::sqrt(1.0 - rho * rho), own));
    auto name = meaning[i];
    axpy(config.name_variation, random_unit(rng, D, lay.semantic_begin, lay.semantic_size), name);
    auto txt = blend(g, text_axis, config.semantic_weight, unit(name));
    noun_texts.push_back(words[i]);
    noun_embeddings.push_back(stable_embedding(noisy(rng, txt, config.text_noise)));
    ds.noun_ids.push_back("noun/" + words[i]);
  }

  // Categories are a seeded subset of the nouns; their name is the noun.
  std::vector<std::size_t> order(words.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < config.n_categories; ++k) {
    const std::size_t w = order[k];
    Category cat;
    cat.name = words[w];
    cat.text_id = ds.noun_ids[w];
    cat.text = noun_embeddings[w];
    for (std::size_t j = 0; j < config.images_per_category; ++j) {
      auto look = meaning[w];
      axpy(config.photo_variation, random_unit(rng, D, lay.semantic_begin, lay.semantic_size), look);
      auto img = blend(g, image_axis, config.semantic_weight, unit(look));
      cat.image_ids.push_back("cat/" + cat.name + "/" + std::to_string(j));
      cat.images.push_back(stable_embedding(noisy(rng, img, config.noise_sigma)));
    }
    ds.categories.push_back(std::move(cat));
  }
  std::sort(ds.categories.begin(), ds.categories.end(),
            [](const Category& a, const Category& b) { return a.name < b.name; });

  // Unseen words: a shared novelty direction, a surface-form component of
  // varying strength, and almost no meaning.
  const auto pw = generate_pseudowords(config.n_categories, config.seed);
  std::normal_distribution<double> leak(0.0, config.form_meaning_leak);
  // Small worlds have fewer semantic dimensions than the default overlap.
  const std::size_t overlap = std::min(config.form_semantic_dims, lay.semantic_size);
  for (const auto& w : pw) {
    const double m = config.form_weight_min + (config.form_weight_max - config.form_weight_min) * unif(rng);
    // The form block runs contiguously from the shape block into the first
    // form_semantic_dims semantic dimensions.
    auto form = random_unit(rng, D, lay.shape_begin, lay.shape_size + lay.color_size + overlap);
    auto txt = blend(g, text_axis, config.novelty_weight, novelty_axis);
    axpy(m, form, txt);
    for (std::size_t i = lay.semantic_begin + overlap; i < D; ++i)
      txt[i] += config.form_meaning_leak > 0.0 ? leak(rng) : 0.0;
    ds.pseudowords.push_back({"pw/" + w, w, stable_embedding(txt)});
  }

  ds.nouns = std::make_shared<NegativeCorpus>(std::move(noun_texts), std::move(noun_embeddings));
  return ds;
}

}  // namespace collie
