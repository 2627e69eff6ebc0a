#include "putilt/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "putilt/errors.hpp"

namespace putilt::gaet {

PuDataset::PuDataset(Eigen::MatrixXd labeled, Eigen::MatrixXd unlabeled,
                     std::vector<FeatureScale> scaling,
                     std::optional<std::vector<int>> true_labels)
    : labeled_(std::move(labeled)),
      unlabeled_(std::move(unlabeled)),
      scaling_(std::move(scaling)),
      true_labels_(std::move(true_labels)) {
  if (labeled_.rows() < 1 || unlabeled_.rows() < 1) {
    throw ValidationError("PuDataset: need at least one labeled and one unlabeled row");
  }
  if (labeled_.cols() != unlabeled_.cols() || labeled_.cols() < 1) {
    throw ValidationError("PuDataset: feature dimension mismatch");
  }
  const auto in_unit = [](const Eigen::MatrixXd& m) {
    return (m.array() >= 0.0).all() && (m.array() <= 1.0).all() && m.allFinite();
  };
  if (!in_unit(labeled_) || !in_unit(unlabeled_)) {
    throw ValidationError("PuDataset: all entries must lie in [0,1]");
  }
  if (scaling_.empty()) {
    scaling_.assign(static_cast<std::size_t>(labeled_.cols()), FeatureScale{});
  }
  if (scaling_.size() != static_cast<std::size_t>(labeled_.cols())) {
    throw ValidationError("PuDataset: scaling size must match feature count");
  }
  if (true_labels_) {
    if (true_labels_->size() != static_cast<std::size_t>(unlabeled_.rows())) {
      throw ValidationError("PuDataset: true_labels length must equal n1");
    }
    for (int v : *true_labels_) {
      if (v != 0 && v != 1) throw ValidationError("PuDataset: true_labels must be 0/1");
    }
  }
}

PuDataset PuDataset::from_raw(const Eigen::MatrixXd& labeled_raw,
                              const Eigen::MatrixXd& unlabeled_raw,
                              std::optional<std::vector<int>> true_labels) {
  if (labeled_raw.cols() != unlabeled_raw.cols()) {
    throw ValidationError("from_raw: feature dimension mismatch");
  }
  const Eigen::Index p = labeled_raw.cols();
  std::vector<FeatureScale> scaling(static_cast<std::size_t>(p));
  Eigen::MatrixXd lab = labeled_raw, unl = unlabeled_raw;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double lo = std::min(labeled_raw.col(j).minCoeff(), unlabeled_raw.col(j).minCoeff());
    const double hi = std::max(labeled_raw.col(j).maxCoeff(), unlabeled_raw.col(j).maxCoeff());
    if (!(hi > lo)) {
      throw ValidationError("from_raw: feature " + std::to_string(j) + " is constant");
    }
    scaling[static_cast<std::size_t>(j)] = FeatureScale{lo, hi};
    lab.col(j) = (labeled_raw.col(j).array() - lo) / (hi - lo);
    unl.col(j) = (unlabeled_raw.col(j).array() - lo) / (hi - lo);
  }
  // Guard the exact upper boundary against rounding.
  lab = lab.cwiseMax(0.0).cwiseMin(1.0);
  unl = unl.cwiseMax(0.0).cwiseMin(1.0);
  return PuDataset(std::move(lab), std::move(unl), std::move(scaling), std::move(true_labels));
}

double PuDataset::rescale(Eigen::Index j, double raw) const {
  const FeatureScale& s = scaling_[static_cast<std::size_t>(j)];
  const double denom = s.max - s.min;
  const double v = denom > 0 ? (raw - s.min) / denom : 0.0;
  return std::clamp(v, 0.0, 1.0);
}

double PuDataset::to_raw(Eigen::Index j, double scaled) const {
  const FeatureScale& s = scaling_[static_cast<std::size_t>(j)];
  return s.min + scaled * (s.max - s.min);
}

Eigen::MatrixXd PuDataset::stacked() const {
  Eigen::MatrixXd all(n(), p());
  all.topRows(n0()) = labeled_;
  all.bottomRows(n1()) = unlabeled_;
  return all;
}

}  // namespace putilt::gaet
