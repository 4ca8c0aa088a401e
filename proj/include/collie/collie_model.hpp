#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "collie/adjustment.hpp"
#include "collie/embedding.hpp"
#include "collie/grounding_pair.hpp"
#include "collie/scaling.hpp"

namespace collie {

struct CollieConfig {
  double lambda = kDefaultRidgeLambda;
  ScalingConfig scaling;
  RegressionTargetMode target_mode = RegressionTargetMode::difference_vector;
};

class UntrainedModel : public std::logic_error {
 public:
  UntrainedModel() : std::logic_error("transform called on a model with untrained examples") {}
};

/// The continual learner. Accumulates taught pairs and, on retrain(),
/// refits the adjustment a(T) and the gate s(T); transform() applies
/// T' = normalize(T + a(T) * s(T)).
///
/// Single writer: add_example/retrain need exclusive access, transform on
/// a trained model is read-only.
class CollieModel {
 public:
  CollieModel(std::size_t dim, std::shared_ptr<const NegativeCorpus> negatives,
              CollieConfig config = {});

  std::size_t dim() const { return dim_; }
  const CollieConfig& config() const { return config_; }
  const std::vector<GroundingPair>& store() const { return store_; }
  bool trained() const { return trained_; }
  const AdjustmentModel& adjustment() const { return adjustment_; }
  const std::optional<ScalingModel>& scaling() const { return scaling_; }
  const NegativeCorpus& negatives() const { return *negatives_; }

  /// Stores the pair with both embeddings unit-normalized. Clears trained().
  void add_example(GroundingPair pair);
  void retrain();

  double scale(const Embedding& t) const;
  std::vector<double> transform_doubles(const Embedding& t) const;
  Embedding transform(const Embedding& t) const;

  /// Self-describing JSON snapshot: dim, config, store, negatives and the
  /// learned parameters.
  void save(std::ostream& out) const;
  static CollieModel load(std::istream& in);

 private:
  void check_ready() const;

  std::size_t dim_;
  std::shared_ptr<const NegativeCorpus> negatives_;
  CollieConfig config_;
  std::vector<GroundingPair> store_;
  AdjustmentModel adjustment_;
  std::optional<ScalingModel> scaling_;
  bool trained_ = false;
};

}  // namespace collie
