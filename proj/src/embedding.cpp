#include "collie/embedding.hpp"

#include <algorithm>
#include <cmath>

namespace collie {

namespace {

std::string mismatch_message(std::size_t expected, std::size_t actual,
                             const std::string& where) {
  std::string msg = "dimension mismatch: expected " + std::to_string(expected) +
                    ", got " + std::to_string(actual);
  if (!where.empty()) msg += " (" + where + ")";
  return msg;
}

}  // namespace

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t actual,
                                     const std::string& where)
    : std::invalid_argument(mismatch_message(expected, actual, where)) {}

void require_same_dim(std::size_t expected, std::size_t actual,
                      const std::string& where) {
  if (expected != actual) throw DimensionMismatch(expected, actual, where);
}

Embedding::Embedding(std::vector<float> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidInput("embedding must have dim >= 1");
  for (float v : values_) {
    if (!std::isfinite(v)) throw InvalidInput("embedding contains a non-finite value");
  }
}

Embedding Embedding::from_doubles(std::span<const double> values) {
  std::vector<float> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return Embedding(std::move(out));
}

double Embedding::norm() const {
  double s = 0.0;
  for (float v : values_) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

std::vector<double> Embedding::to_doubles() const {
  return {values_.begin(), values_.end()};
}

double dot(std::span<const float> a, std::span<const float> b) {
  require_same_dim(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double dot(std::span<const double> a, std::span<const float> b) {
  require_same_dim(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  require_same_dim(a.dim(), b.dim(), "cosine_similarity");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw InvalidInput("cosine_similarity of a zero-norm vector");
  return dot(a.values(), b.values()) / (na * nb);
}

double cosine_similarity(std::span<const double> a, const Embedding& b) {
  require_same_dim(a.size(), b.dim(), "cosine_similarity");
  double na = 0.0;
  for (double v : a) na += v * v;
  na = std::sqrt(na);
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw InvalidInput("cosine_similarity of a zero-norm vector");
  return dot(a, b.values()) / (na * nb);
}

std::vector<double> normalize(std::span<const double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("cannot normalize a zero-norm vector");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

Embedding normalize(const Embedding& v) {
  // Already unit within float resolution: keep the exact stored values so
  // repeated ingestion never perturbs an embedding.
  const double n = v.norm();
  if (std::abs(n - 1.0) <= 1e-7) return v;
  const auto d = v.to_doubles();
  return Embedding::from_doubles(normalize(d));
}

std::vector<double> softmax_scores(std::span<const double> scores,
                                   double temperature_inverse) {
  if (scores.empty()) throw InvalidInput("softmax_scores of an empty sequence");
  if (!(temperature_inverse > 0.0)) throw InvalidInput("temperature_inverse must be > 0");
  const double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(temperature_inverse * (scores[i] - mx));
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace collie
