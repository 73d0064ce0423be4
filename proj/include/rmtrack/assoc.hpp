#pragma once

#include <vector>

#include "rmtrack/detection.hpp"

namespace rmtrack {

/// Rider-by-motorcycle grid of association scores for one frame.
struct AssociationMatrix {
  int n_riders = 0;
  int n_motos = 0;
  std::vector<double> scores;  // row-major, n_riders * n_motos

  double at(int k, int l) const {
    return scores[static_cast<std::size_t>(k) * n_motos + l];
  }
};

/// Cross-association score between a rider and a motorcycle detection:
/// the mean of (a) IoU of the rider's cross mask with the motorcycle's own
/// mask and (b) IoU of the rider's own mask with the motorcycle's cross
/// mask clipped to the rider's box. 1 is a perfect association, 0 none.
/// Throws std::invalid_argument on wrong classes or mismatched grids.
double association_score(const SacDetection& r, const SacDetection& m);

/// Same score on raw mask evidence, for callers holding buffered masks
/// rather than whole detections.
double cross_mask_score(const BinaryMask& rider_seg, const BinaryMask& rider_cross,
                        const BBox& rider_box, const BinaryMask& moto_seg,
                        const BinaryMask& moto_cross);

/// All pairwise scores for one frame. build_matrix fans the rows out across
/// OpenMP threads; build_matrix_serial is the plain-loop reference. Both
/// produce identical matrices.
AssociationMatrix build_matrix(const std::vector<SacDetection>& riders,
                               const std::vector<SacDetection>& motos);
AssociationMatrix build_matrix_serial(const std::vector<SacDetection>& riders,
                                      const std::vector<SacDetection>& motos);

/// Frame partition: motorcycles with their assigned riders, plus leftovers.
struct InstancePartition {
  std::vector<RMInstance> instances;       // ordered by motorcycle index
  std::vector<int> unassigned_riders;      // ascending
  std::vector<int> unassigned_motos;       // ascending
};

/// Assign each rider to the motorcycle maximizing its score row when that
/// maximum reaches tau (ties: smaller motorcycle index). A motorcycle keeps
/// at most rider_cap riders; overflow riders in index order stay
/// unassigned. Every motorcycle with at least one rider forms an instance.
InstancePartition form_instances(const std::vector<SacDetection>& riders,
                                 const std::vector<SacDetection>& motos,
                                 double tau, int rider_cap = 4);

}  // namespace rmtrack
