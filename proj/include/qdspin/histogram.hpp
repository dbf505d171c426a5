#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace qdspin {

/// Time-binned fluorescence. Bins are uniform and increasing; `counts` holds
/// the per-bin value (photon rate or photon counts) including `background`.
struct Histogram {
  Eigen::VectorXd bin_centers;
  Eigen::VectorXd counts;
  double background = 0.0;

  Eigen::Index size() const { return bin_centers.size(); }
  double bin_width() const {
    return size() > 1 ? bin_centers[1] - bin_centers[0] : 0.0;
  }
  void validate() const {
    if (bin_centers.size() != counts.size())
      throw std::invalid_argument("histogram: centers and counts differ in length");
    for (Eigen::Index i = 1; i < size(); ++i)
      if (!(bin_centers[i] > bin_centers[i - 1]))
        throw std::invalid_argument("histogram: bins must be increasing");
  }
};

}  // namespace qdspin
