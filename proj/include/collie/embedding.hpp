#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace collie {

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual,
                    const std::string& where = {});
};

// Raised for inputs that are structurally fine but numerically unusable
// (zero vectors, NaN/Inf, empty sets where data is required).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point in the joint text/image space. Values are kept in 32-bit
/// floats at rest; every computation on them widens to double.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<float> values);
  static Embedding from_doubles(std::span<const double> values);

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const float> values() const { return values_; }
  float operator[](std::size_t i) const { return values_[i]; }

  double norm() const;
  std::vector<double> to_doubles() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<float> values_;
};

struct ScoredCandidate {
  std::string candidate_id;
  double score = 0.0;
  double softmax_prob = 0.0;
};

inline constexpr double kDefaultTemperatureInverse = 100.0;

double dot(std::span<const float> a, std::span<const float> b);
double dot(std::span<const double> a, std::span<const float> b);

double cosine_similarity(const Embedding& a, const Embedding& b);
double cosine_similarity(std::span<const double> a, const Embedding& b);

Embedding normalize(const Embedding& v);
std::vector<double> normalize(std::span<const double> v);

/// Temperature-scaled softmax; the max is subtracted before exponentiating.
std::vector<double> softmax_scores(std::span<const double> scores,
                                   double temperature_inverse = kDefaultTemperatureInverse);

void require_same_dim(std::size_t expected, std::size_t actual,
                      const std::string& where = {});

}  // namespace collie
