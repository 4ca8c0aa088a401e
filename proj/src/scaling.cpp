#include "collie/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collie/adjustment.hpp"
#include "collie/logistic.hpp"

namespace collie {

namespace {

constexpr double kExactSqDistance = 1e-20;

void append_row(std::vector<double>& rows, const Embedding& e) {
  for (float v : e.values()) rows.push_back(v);
}

}  // namespace

void ScalingConfig::validate() const {
  if (knn_k < 1) throw InvalidInput("knn_k must be >= 1");
  if (!(svr_C > 0.0)) throw InvalidInput("svr_C must be > 0");
  if (svr_epsilon < 0.0) throw InvalidInput("svr_epsilon must be >= 0");
  if (rbf_gamma && !(*rbf_gamma > 0.0)) throw InvalidInput("rbf_gamma must be > 0");
  if (!(logistic_l2 > 0.0)) throw InvalidInput("logistic l2 strength must be > 0");
}

ScalingConfig ScalingConfig::parse(const std::string& name) {
  ScalingConfig c;
  if (name == "svr-linear" || name == "svr") {
    c.kind = ScalingKind::svr;
    c.svr_kernel = svr::Kernel::linear;
  } else if (name == "svr-rbf") {
    c.kind = ScalingKind::svr;
    c.svr_kernel = svr::Kernel::rbf;
  } else if (name == "svr-sigmoid") {
    c.kind = ScalingKind::svr;
    c.svr_kernel = svr::Kernel::sigmoid;
  } else if (name == "knn") {
    c.kind = ScalingKind::knn;
  } else if (name == "linear") {
    c.kind = ScalingKind::linear_regression;
  } else if (name == "logistic") {
    c.kind = ScalingKind::logistic_regression;
  } else if (name == "none") {
    c.kind = ScalingKind::none;
  } else if (name == "exact") {
    c.kind = ScalingKind::exact_match;
  } else {
    throw InvalidInput("unknown scaling kind '" + name + "'");
  }
  return c;
}

std::string ScalingConfig::name() const {
  switch (kind) {
    case ScalingKind::svr:
      switch (svr_kernel) {
        case svr::Kernel::linear: return "svr-linear";
        case svr::Kernel::rbf: return "svr-rbf";
        case svr::Kernel::sigmoid: return "svr-sigmoid";
      }
      break;
    case ScalingKind::knn: return "knn";
    case ScalingKind::linear_regression: return "linear";
    case ScalingKind::logistic_regression: return "logistic";
    case ScalingKind::none: return "none";
    case ScalingKind::exact_match: return "exact";
  }
  return "unknown";
}

NegativeCorpus::NegativeCorpus(std::vector<std::string> texts, std::vector<Embedding> embeddings)
    : texts_(std::move(texts)) {
  if (texts_.size() != embeddings.size())
    throw InvalidInput("negative corpus: texts and embeddings differ in length");
  embeddings_.reserve(embeddings.size());
  for (const auto& e : embeddings) {
    if (dim_ == 0) dim_ = e.dim();
    require_same_dim(dim_, e.dim(), "negative corpus");
    embeddings_.push_back(normalize(e));
    append_row(rows_, embeddings_.back());
  }
}

std::span<const double> NegativeCorpus::gram() const {
  std::call_once(gram_->once, [this] {
    gram_->values.resize(size() * size());
    kernels::gram({rows_, dim_}, gram_->values);
  });
  return gram_->values;
}

ScalingModel ScalingModel::from_parameters(ScalingConfig config, std::size_t dim, Parameters params,
                                           std::size_t positives_count,
                                           std::size_t negatives_count) {
  config.validate();
  ScalingModel m;
  m.config_ = config;
  m.dim_ = dim;
  m.params_ = std::move(params);
  m.positives_count_ = positives_count;
  m.negatives_count_ = negatives_count;
  return m;
}

double ScalingModel::knn_raw(std::span<const double> t) const {
  const std::size_t n = params_.coef.size();
  if (n == 0) return 0.0;
  std::vector<double> dist(n);
  kernels::sq_distances(t, {params_.points, dim_}, dist);

  // Exact matches take the mean target of all exact matches.
  double exact_sum = 0.0;
  std::size_t exact_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] <= kExactSqDistance) {
      exact_sum += params_.coef[i];
      ++exact_n;
    }
  }
  if (exact_n > 0 && config_.knn_weighting == KnnWeighting::distance)
    return exact_sum / static_cast<double>(exact_n);

  const std::size_t k = std::min(config_.knn_k, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = idx[r];
    const double w =
        config_.knn_weighting == KnnWeighting::distance ? 1.0 / std::sqrt(dist[i]) : 1.0;
    num += w * params_.coef[i];
    den += w;
  }
  return num / den;
}

double ScalingModel::raw(std::span<const double> t) const {
  require_same_dim(dim_, t.size(), "predict_scale");
  switch (config_.kind) {
    case ScalingKind::none:
      return 1.0;
    case ScalingKind::exact_match: {
      const std::size_t n = params_.points.size() / std::max<std::size_t>(dim_, 1);
      if (n == 0) return 0.0;
      const auto q = normalize(t);
      std::vector<double> dots(n);
      kernels::dots_with(q, {params_.points, dim_}, dots);
      const double best = *std::max_element(dots.begin(), dots.end());
      return 1.0 - best <= kExactMatchCosineDistance ? 1.0 : 0.0;
    }
    case ScalingKind::knn:
      return knn_raw(t);
    case ScalingKind::linear_regression:
    case ScalingKind::logistic_regression: {
      double z = params_.bias;
      for (std::size_t k = 0; k < dim_; ++k) z += params_.weights[k] * t[k];
      if (config_.kind == ScalingKind::linear_regression) return z;
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    case ScalingKind::svr: {
      const std::size_t n = params_.coef.size();
      std::vector<double> dots(n);
      kernels::dots_with(t, {params_.points, dim_}, dots);
      double tn = 0.0;
      for (double v : t) tn += v * v;
      const svr::KernelParams kp{config_.svr_kernel, params_.gamma, config_.sigmoid_coef0};
      double f = params_.bias;
      for (std::size_t i = 0; i < n; ++i) {
        const auto sv = std::span<const double>(params_.points).subspan(i * dim_, dim_);
        double sn = 0.0;
        for (double v : sv) sn += v * v;
        f += params_.coef[i] * svr::kernel_from_dot(kp, dots[i], sn, tn);
      }
      return f;
    }
  }
  return 0.0;
}

double ScalingModel::predict(std::span<const double> t) const {
  return std::clamp(raw(t), 0.0, 1.0);
}

double ScalingModel::predict(const Embedding& t) const { return predict(t.to_doubles()); }

ScalingModel fit_scaling(std::span<const Embedding> positives, const NegativeCorpus& negatives,
                         const ScalingConfig& config) {
  config.validate();
  std::size_t dim = negatives.dim();
  for (const auto& p : positives) {
    if (dim == 0) dim = p.dim();
    require_same_dim(dim, p.dim(), "scaling positive");
  }

  ScalingModel model;
  model.config_ = config;
  model.dim_ = dim;
  model.positives_count_ = positives.size();

  if (config.kind == ScalingKind::none) return model;
  if (config.kind == ScalingKind::exact_match) {
    for (const auto& p : positives) {
      const auto v = normalize(p.to_doubles());
      model.params_.points.insert(model.params_.points.end(), v.begin(), v.end());
    }
    return model;
  }
  if (positives.empty()) throw InvalidInput("fit_scaling: " + config.name() + " needs at least one positive");

  const std::size_t n_pos = positives.size();
  const std::size_t n_neg = config.negatives_count == 0
                                ? negatives.size()
                                : std::min(config.negatives_count, negatives.size());
  const std::size_t n = n_pos + n_neg;
  model.negatives_count_ = n_neg;

  std::vector<double> x;
  x.reserve(n * dim);
  // Positives are used as given; callers keep them unit-norm.
  for (const auto& p : positives) append_row(x, p);
  const auto neg_rows = negatives.rows().first(n_neg * dim);
  x.insert(x.end(), neg_rows.begin(), neg_rows.end());
  std::vector<double> y(n, 0.0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_pos), 1.0);

  switch (config.kind) {
    case ScalingKind::knn:
      model.params_.points = std::move(x);
      model.params_.coef = std::move(y);
      return model;

    case ScalingKind::linear_regression: {
      RowMatrix xm = Eigen::Map<const RowMatrix>(x.data(), static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(dim));
      RowMatrix ym = Eigen::Map<const RowMatrix>(y.data(), static_cast<Eigen::Index>(n), 1);
      const Eigen::RowVectorXd xmean = xm.colwise().mean();
      const double ymean = ym.mean();
      xm.rowwise() -= xmean;
      ym.array() -= ymean;
      const RowMatrix w = solve_ridge(xm, ym, 0.0);
      model.params_.weights.assign(w.data(), w.data() + w.size());
      model.params_.bias = ymean - (xmean * w)(0, 0);
      return model;
    }

    case ScalingKind::logistic_regression: {
      std::vector<int> labels(n, 0);
      std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
      const auto fit = logistic::fit_binary({x, dim}, labels, config.logistic_l2);
      model.params_.weights = fit.weights;
      model.params_.bias = fit.bias;
      return model;
    }

    case ScalingKind::svr: {
      double gamma = 0.0;
      if (config.svr_kernel != svr::Kernel::linear) {
        if (config.rbf_gamma) {
          gamma = *config.rbf_gamma;
        } else {
          const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
          double var = 0.0;
          for (double v : x) var += (v - mean) * (v - mean);
          var /= static_cast<double>(x.size());
          gamma = var > 0.0 ? 1.0 / (static_cast<double>(dim) * var) : 1.0;
        }
      }

      // Positive rows are dotted on the fly; negative-negative entries come
      // from the corpus' shared Gram matrix.
      const kernels::RowsView pos{std::span<const double>(x).first(n_pos * dim), dim};
      std::vector<double> pos_all(n_pos * n);
      kernels::cross_dots(pos, {x, dim}, pos_all);
      const auto neg_gram = negatives.gram();
      const std::size_t full = negatives.size();

      svr::GramSource source;
      source.size = n;
      source.row = [&](std::size_t r, std::span<double> out) {
        if (r < n_pos) {
          std::copy_n(pos_all.begin() + static_cast<std::ptrdiff_t>(r * n), n, out.begin());
          return;
        }
        const std::size_t q = r - n_pos;
        for (std::size_t i = 0; i < n_pos; ++i) out[i] = pos_all[i * n + r];
        std::copy_n(neg_gram.begin() + static_cast<std::ptrdiff_t>(q * full), n_neg,
                    out.begin() + static_cast<std::ptrdiff_t>(n_pos));
      };

      const svr::KernelParams kp{config.svr_kernel, gamma, config.sigmoid_coef0};
      svr::Options opts;
      opts.C = config.svr_C;
      opts.epsilon = config.svr_epsilon;
      const svr::Solution sol = svr::solve(source, y, kp, opts);

      model.params_.gamma = gamma;
      model.params_.bias = sol.bias;
      for (std::size_t i = 0; i < n; ++i) {
        if (sol.coef[i] == 0.0) continue;
        model.params_.coef.push_back(sol.coef[i]);
        model.params_.points.insert(model.params_.points.end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                    x.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      }
      return model;
    }

    default:
      break;
  }
  return model;
}

}  // namespace collie
