#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "rmtrack/detection.hpp"
#include "rmtrack/io.hpp"
#include "rmtrack/motion.hpp"

namespace rmtrack {

struct TrackerConfig {
  double lambda1 = 1.0;  // rider hypothesis weight
  double lambda2 = 1.0;  // motorcycle hypothesis weight
  // Association weight; 0 disables cross-class coupling. The raw association
  // score can reach k_buffer + 1 - theta, several times a hypothesis score's
  // ceiling of w_iou + w_app, so a weight well below 1 keeps cross evidence
  // from overriding box evidence when detections degrade.
  double lambda3 = 0.25;
  double theta = 0.5;    // offset subtracted from the buffered association sum
  int k_buffer = 3;      // past frames in the buffer (score sums k+1 terms)
  double w_iou = 1.0;
  double w_app = 0.5;
  double gate_iou = 0.1;  // pairs below this predicted-box IoU never pair
  int max_age = 30;       // misses tolerated before a track dies
  int min_hits = 3;       // hits needed before a track is reported
  int solver_cap = 64;    // per-class hypothesis cap handed to the solver
  double emb_alpha = 0.9;  // appearance EMA: old weight
  KalmanConfig kf;
};

/// One time step of an object's mask evidence.
struct MaskSnapshot {
  BinaryMask seg;
  BinaryMask cross;
  BBox bbox;
};

/// Buffered cross-association affinity: the per-step association score
/// summed over aligned history (oldest first, current frame last), minus
/// theta. Steps where either side is absent contribute 0.
double buffered_assoc_score(const std::vector<std::optional<MaskSnapshot>>& rider,
                            const std::vector<std::optional<MaskSnapshot>>& moto,
                            double theta);

/// Motion+appearance affinity of one track/detection pair; the appearance
/// term is 0 unless both sides carry an embedding.
double hypothesis_score(double iou, const std::optional<std::vector<double>>& track_emb,
                        const std::optional<std::vector<double>>& det_emb,
                        const TrackerConfig& cfg);

/// Online joint rider/motorcycle tracker. Feed frames strictly in order;
/// each step runs predict, joint assignment, update, lifecycle, and
/// association-identity bookkeeping, and returns rows for confirmed tracks
/// matched in that frame.
class Tracker {
public:
  explicit Tracker(const TrackerConfig& cfg);

  /// frame must be exactly one past the previous call (any start value for
  /// the first). Detections must carry that frame index and share one mask
  /// grid. Throws FrameMismatchError / SchemaError / CapExceededError.
  std::vector<TrackRow> step(int frame, const std::vector<SacDetection>& dets);

  std::uint64_t frames_processed() const { return frames_; }

private:
  struct BufferEntry {
    bool present = false;
    MaskSnapshot snap;
  };
  struct Track {
    int track_id = 0;
    ObjClass cls = ObjClass::rider;
    KalmanState kf;
    std::deque<BufferEntry> buffer;  // oldest first, <= k_buffer entries
    std::optional<std::vector<double>> emb;
    int assoc_id = -1;
    int hits = 0;
    int misses = 0;
    bool confirmed = false;
  };

  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  int next_track_id_ = 1;
  int next_assoc_id_ = 1;
  int last_frame_ = 0;
  bool started_ = false;
  std::uint64_t frames_ = 0;
};

/// Run the joint tracker over a frame-sorted detection stream, stepping
/// through every frame in [first, last] including empty ones. Applies one
/// offline smoothing pass: a track's association id is immutable once
/// minted, so rows the track emitted before the link formed receive the id
/// it ends with.
std::vector<TrackRow> run_tracker(const std::vector<SacDetection>& stream,
                                  const TrackerConfig& cfg);

/// Ablation: same pipeline with lambda3 = 0 (per-class assignment only).
/// Association identities are reconstructed afterwards: per frame the
/// matched detections run through instance formation, and each rider track
/// adopts the motorcycle track it grouped with in the most frames
/// (ties: smaller motorcycle track id).
std::vector<TrackRow> run_independent_baseline(const std::vector<SacDetection>& stream,
                                               const TrackerConfig& cfg,
                                               double tau_assoc, int rider_cap = 4);

}  // namespace rmtrack
