#include "collie/collie_model.hpp"

#include <istream>
#include <json.hpp>
#include <ostream>

namespace collie {

using nlohmann::json;

CollieModel::CollieModel(std::size_t dim, std::shared_ptr<const NegativeCorpus> negatives,
                         CollieConfig config)
    : dim_(dim), negatives_(std::move(negatives)), config_(std::move(config)) {
  if (dim_ == 0) throw InvalidInput("model dim must be >= 1");
  if (!negatives_) negatives_ = std::make_shared<const NegativeCorpus>();
  if (negatives_->size() > 0) require_same_dim(dim_, negatives_->dim(), "negative corpus");
  if (config_.lambda < 0.0) throw InvalidInput("lambda must be >= 0");
  config_.scaling.validate();
  adjustment_ = AdjustmentModel::zero(dim_, config_.lambda);
}

void CollieModel::add_example(GroundingPair pair) {
  require_same_dim(dim_, pair.text_embedding.dim(), "text embedding of '" + pair.text + "'");
  require_same_dim(dim_, pair.image_embedding.dim(), "image embedding of '" + pair.image_id + "'");
  pair.text_embedding = normalize(pair.text_embedding);
  pair.image_embedding = normalize(pair.image_embedding);
  store_.push_back(std::move(pair));
  trained_ = false;
}

void CollieModel::retrain() {
  std::span<const Embedding> adj_negatives;
  if (config_.target_mode == RegressionTargetMode::difference_with_zero_negatives) {
    const auto& all = negatives_->embeddings();
    const std::size_t n = config_.scaling.negatives_count == 0
                              ? all.size()
                              : std::min(config_.scaling.negatives_count, all.size());
    adj_negatives = std::span<const Embedding>(all).first(n);
  }
  adjustment_ = fit_adjustment(store_, dim_, config_.lambda, config_.target_mode, adj_negatives);

  if (store_.empty()) {
    scaling_.reset();
  } else {
    std::vector<Embedding> positives;
    positives.reserve(store_.size());
    for (const auto& p : store_) positives.push_back(p.text_embedding);
    scaling_ = fit_scaling(positives, *negatives_, config_.scaling);
  }
  trained_ = true;
}

void CollieModel::check_ready() const {
  if (!store_.empty() && !trained_) throw UntrainedModel();
}

double CollieModel::scale(const Embedding& t) const {
  require_same_dim(dim_, t.dim(), "scale");
  check_ready();
  if (!scaling_) return 0.0;
  return scaling_->predict(normalize(t));
}

std::vector<double> CollieModel::transform_doubles(const Embedding& t) const {
  require_same_dim(dim_, t.dim(), "transform");
  check_ready();
  const Embedding q = normalize(t);
  std::vector<double> out = q.to_doubles();
  // A closed gate is an exact no-op, not a renormalization.
  if (!trained_ || store_.empty()) return out;
  const double s = scaling_ ? scaling_->predict(out) : 0.0;
  if (s == 0.0) return out;
  const auto a = adjustment_.predict(out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[i] * s;
  return normalize(out);
}

Embedding CollieModel::transform(const Embedding& t) const {
  return Embedding::from_doubles(transform_doubles(t));
}

// ---- snapshots ----

namespace {

json config_to_json(const CollieConfig& c) {
  const auto& s = c.scaling;
  json j;
  j["lambda"] = c.lambda;
  j["target_mode"] = c.target_mode == RegressionTargetMode::difference_vector
                         ? "difference_vector"
                         : "difference_with_zero_negatives";
  j["scaling"] = {{"name", s.name()},
                  {"svr_C", s.svr_C},
                  {"svr_epsilon", s.svr_epsilon},
                  {"sigmoid_coef0", s.sigmoid_coef0},
                  {"knn_k", s.knn_k},
                  {"knn_weighting", s.knn_weighting == KnnWeighting::distance ? "distance" : "uniform"},
                  {"logistic_l2", s.logistic_l2},
                  {"negatives_count", s.negatives_count}};
  j["scaling"]["rbf_gamma"] = s.rbf_gamma ? json(*s.rbf_gamma) : json("scale");
  return j;
}

CollieConfig config_from_json(const json& j) {
  CollieConfig c;
  c.lambda = j.at("lambda").get<double>();
  const auto mode = j.at("target_mode").get<std::string>();
  if (mode == "difference_vector") c.target_mode = RegressionTargetMode::difference_vector;
  else if (mode == "difference_with_zero_negatives")
    c.target_mode = RegressionTargetMode::difference_with_zero_negatives;
  else throw InvalidInput("snapshot: unknown target mode '" + mode + "'");
  const json& s = j.at("scaling");
  c.scaling = ScalingConfig::parse(s.at("name").get<std::string>());
  c.scaling.svr_C = s.at("svr_C").get<double>();
  c.scaling.svr_epsilon = s.at("svr_epsilon").get<double>();
  c.scaling.sigmoid_coef0 = s.at("sigmoid_coef0").get<double>();
  c.scaling.knn_k = s.at("knn_k").get<std::size_t>();
  c.scaling.knn_weighting =
      s.at("knn_weighting").get<std::string>() == "uniform" ? KnnWeighting::uniform : KnnWeighting::distance;
  c.scaling.logistic_l2 = s.at("logistic_l2").get<double>();
  c.scaling.negatives_count = s.at("negatives_count").get<std::size_t>();
  if (s.at("rbf_gamma").is_number()) c.scaling.rbf_gamma = s.at("rbf_gamma").get<double>();
  return c;
}

json floats(const Embedding& e) { return json(std::vector<float>(e.values().begin(), e.values().end())); }

Embedding embedding_from(const json& j) { return Embedding(j.get<std::vector<float>>()); }

}  // namespace

void CollieModel::save(std::ostream& out) const {
  json j;
  j["format"] = "collie-model";
  j["version"] = 1;
  j["dim"] = dim_;
  j["config"] = config_to_json(config_);
  j["trained"] = trained_;

  json store = json::array();
  for (const auto& p : store_) {
    store.push_back({{"text", p.text},
                     {"image_id", p.image_id},
                     {"text_embedding", floats(p.text_embedding)},
                     {"image_embedding", floats(p.image_embedding)}});
  }
  j["store"] = std::move(store);

  json neg = json::array();
  for (std::size_t i = 0; i < negatives_->size(); ++i)
    neg.push_back({{"text", negatives_->texts()[i]}, {"vector", floats(negatives_->embeddings()[i])}});
  j["negatives"] = std::move(neg);

  const auto& b = adjustment_.beta();
  j["adjustment"] = {{"lambda", adjustment_.lambda()},
                     {"num_training_pairs", adjustment_.num_training_pairs()},
                     {"beta", std::vector<double>(b.data(), b.data() + b.size())},
                     {"intercept", std::vector<double>(adjustment_.intercept().data(),
                                                       adjustment_.intercept().data() +
                                                           adjustment_.intercept().size())}};
  if (scaling_) {
    const auto& p = scaling_->parameters();
    j["scaling"] = {{"positives_count", scaling_->positives_count()},
                    {"negatives_count", scaling_->negatives_count()},
                    {"points", p.points},
                    {"coef", p.coef},
                    {"weights", p.weights},
                    {"bias", p.bias},
                    {"gamma", p.gamma}};
  } else {
    j["scaling"] = nullptr;
  }
  out << j.dump() << '\n';
}

CollieModel CollieModel::load(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("snapshot: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "collie-model")
      throw InvalidInput("snapshot: not a collie-model file");
    if (j.at("version").get<int>() != 1) throw InvalidInput("snapshot: unsupported version");
    const auto dim = j.at("dim").get<std::size_t>();

    std::vector<std::string> texts;
    std::vector<Embedding> vecs;
    for (const auto& n : j.at("negatives")) {
      texts.push_back(n.at("text").get<std::string>());
      vecs.push_back(embedding_from(n.at("vector")));
    }
    auto corpus = std::make_shared<const NegativeCorpus>(std::move(texts), std::move(vecs));
    CollieModel model(dim, corpus, config_from_json(j.at("config")));

    for (const auto& p : j.at("store")) {
      model.store_.push_back({p.at("text").get<std::string>(), embedding_from(p.at("text_embedding")),
                              p.at("image_id").get<std::string>(),
                              embedding_from(p.at("image_embedding"))});
      require_same_dim(dim, model.store_.back().text_embedding.dim(), "snapshot store");
      require_same_dim(dim, model.store_.back().image_embedding.dim(), "snapshot store");
    }

    const json& a = j.at("adjustment");
    const auto beta = a.at("beta").get<std::vector<double>>();
    const auto icpt = a.at("intercept").get<std::vector<double>>();
    if (beta.size() != dim * dim || icpt.size() != dim)
      throw InvalidInput("snapshot: adjustment parameters have the wrong size");
    const auto d = static_cast<Eigen::Index>(dim);
    model.adjustment_ = AdjustmentModel::from_parameters(
        Eigen::Map<const RowMatrix>(beta.data(), d, d), Eigen::Map<const Eigen::VectorXd>(icpt.data(), d),
        a.at("lambda").get<double>(), a.at("num_training_pairs").get<std::size_t>());

    const json& s = j.at("scaling");
    if (!s.is_null()) {
      ScalingModel::Parameters p;
      p.points = s.at("points").get<std::vector<double>>();
      p.coef = s.at("coef").get<std::vector<double>>();
      p.weights = s.at("weights").get<std::vector<double>>();
      p.bias = s.at("bias").get<double>();
      p.gamma = s.at("gamma").get<double>();
      model.scaling_ = ScalingModel::from_parameters(model.config_.scaling, dim, std::move(p),
                                                     s.at("positives_count").get<std::size_t>(),
                                                     s.at("negatives_count").get<std::size_t>());
    }
    model.trained_ = j.at("trained").get<bool>();
    return model;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("snapshot: ") + e.what());
  }
}

}  // namespace collie
