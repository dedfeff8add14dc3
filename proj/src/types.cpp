#include "krri/types.hpp"

#include <cmath>

#include "krri/errors.hpp"

namespace krri {

std::vector<int> LabeledSample::responder_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i) {
    if (delta[i] == 1) idx.push_back(i);
  }
  return idx;
}

std::vector<int> LabeledSample::nonresponder_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i) {
    if (delta[i] == 0) idx.push_back(i);
  }
  return idx;
}

Eigen::MatrixXd LabeledSample::rows(const std::vector<int>& idx) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
  return out;
}

LabeledSample LabeledSample::subset(const std::vector<int>& idx) const {
  LabeledSample s;
  s.X = rows(idx);
  s.y.resize(static_cast<Eigen::Index>(idx.size()));
  s.delta.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    s.y[static_cast<Eigen::Index>(k)] = y[idx[k]];
    s.delta[static_cast<Eigen::Index>(k)] = delta[idx[k]];
  }
  return s;
}

void LabeledSample::validate() const {
  if (n() < 2) throw InvalidArgument("LabeledSample: need n >= 2");
  if (dim() < 1) throw InvalidArgument("LabeledSample: need d >= 1");
  if (y.size() != n() || delta.size() != n()) {
    throw InvalidArgument("LabeledSample: size mismatch between X, y, delta");
  }
  int responders = 0;
  for (int i = 0; i < n(); ++i) {
    if (delta[i] != 0 && delta[i] != 1) {
      throw InvalidArgument("LabeledSample: delta entries must be 0 or 1");
    }
    if (delta[i] == 1) {
      ++responders;
      if (!std::isfinite(y[i])) throw InvalidArgument("LabeledSample: observed y must be finite");
    }
  }
  if (responders == 0) throw NoResponders("LabeledSample: no responders");
  if (!X.allFinite()) throw InvalidArgument("LabeledSample: covariates must be finite");
}

}  // namespace krri
