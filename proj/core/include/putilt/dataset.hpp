#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace putilt::gaet {

/// Per-feature (min, max) of the raw data, used to map onto [0,1].
struct FeatureScale {
  double min = 0.0;
  double max = 1.0;
};

/// Two-sample PU data: n0 labeled-positive rows and n1 unlabeled rows, all
/// features rescaled to [0,1]. Optional true labels for the unlabeled rows are
/// carried for evaluation only. Immutable after construction.
class PuDataset {
 public:
  PuDataset(Eigen::MatrixXd labeled, Eigen::MatrixXd unlabeled,
            std::vector<FeatureScale> scaling = {},
            std::optional<std::vector<int>> true_labels = std::nullopt);

  /// Builds a dataset from raw features: per-feature min-max rescaling over
  /// the union of both samples; throws ValidationError on constant features.
  static PuDataset from_raw(const Eigen::MatrixXd& labeled_raw,
                            const Eigen::MatrixXd& unlabeled_raw,
                            std::optional<std::vector<int>> true_labels = std::nullopt);

  Eigen::Index n0() const { return labeled_.rows(); }
  Eigen::Index n1() const { return unlabeled_.rows(); }
  Eigen::Index n() const { return n0() + n1(); }
  Eigen::Index p() const { return labeled_.cols(); }

  const Eigen::MatrixXd& labeled() const { return labeled_; }
  const Eigen::MatrixXd& unlabeled() const { return unlabeled_; }
  const std::vector<FeatureScale>& scaling() const { return scaling_; }
  const std::optional<std::vector<int>>& true_labels() const { return true_labels_; }

  /// Maps a raw value of feature j onto [0,1], clamping outside the
  /// training range.
  double rescale(Eigen::Index j, double raw) const;
  /// Inverse map from [0,1] back to raw units of feature j.
  double to_raw(Eigen::Index j, double scaled) const;

  /// Labeled rows stacked over unlabeled rows (n x p).
  Eigen::MatrixXd stacked() const;

 private:
  Eigen::MatrixXd labeled_;
  Eigen::MatrixXd unlabeled_;
  std::vector<FeatureScale> scaling_;
  std::optional<std::vector<int>> true_labels_;
};

}  // namespace putilt::gaet
