#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rmtrack/io.hpp"
#include "rmtrack/simulate.hpp"
#include "rmtrack/violate.hpp"

namespace rmtrack {

/// Precision / recall / F1 in percent. Zero denominators yield 0, so a run
/// with no positives anywhere scores 0/0/0 rather than dividing by zero.
struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const Prf&) const = default;
};

Prf prf_from_counts(long long tp, long long fp, long long fn);

/// One frame's ground-truth / prediction pairing. Indices address the flat
/// row vectors handed to match_frames.
struct FrameCorrespondence {
  int frame = 0;
  std::vector<std::pair<int, int>> matches;  // (gt row, pred row)
  std::vector<int> unmatched_gt;             // ascending
  std::vector<int> unmatched_pred;           // ascending

  bool operator==(const FrameCorrespondence&) const = default;
};

/// Per-frame maximum-total-IoU one-to-one matching between rows of the same
/// class whose IoU reaches iou_thresh. Emits one entry per frame appearing
/// in either stream, frame-ascending. match_frames fans frames out across
/// OpenMP threads; match_frames_serial is the plain-loop reference; both
/// produce identical output. Throws SchemaError when a stream repeats a
/// track id within one frame.
std::vector<FrameCorrespondence> match_frames(const std::vector<TrackRow>& gt,
                                              const std::vector<TrackRow>& pred,
                                              double iou_thresh = 0.5);
std::vector<FrameCorrespondence> match_frames_serial(const std::vector<TrackRow>& gt,
                                                     const std::vector<TrackRow>& pred,
                                                     double iou_thresh = 0.5);

/// Detection-level tallies at one IoU threshold, with identity switches
/// counted whenever a ground-truth track's matched prediction id differs
/// from its previously matched id (gaps do not reset the memory).
struct ClearCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long idsw = 0;
  long long gt = 0;  // total ground-truth rows

  bool operator==(const ClearCounts&) const = default;
};

/// Throws FrameMismatchError when predictions cover frames outside the
/// ground-truth frame range (both streams nonempty).
ClearCounts clear_counts(const std::vector<TrackRow>& gt,
                         const std::vector<TrackRow>& pred,
                         double iou_thresh = 0.5);

/// 1 - (FN + FP + IDSW) / GT; the divisor is clamped to 1 so an empty
/// ground truth stays finite. At most 1, unbounded below.
double mota(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
            double iou_thresh = 0.5);

/// Identity F1: the per-pair overlap (frames where both tracks appear with
/// IoU >= iou_thresh) is maximized over a global one-to-one pairing of
/// ground-truth and predicted track ids; idf1 = 2*IDTP / (gt + pred) rows.
/// Two empty streams score 1.
double idf1(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
            double iou_thresh = 0.5);

struct HotaResult {
  double hota = 0.0;
  double det_a = 0.0;
  double ass_a = 0.0;
};

/// The canonical 19-point localization sweep 0.05, 0.10, ..., 0.95.
std::vector<double> hota_alphas();

/// Higher-order tracking accuracy. For each alpha, frames are matched
/// one-to-one preferring pairs that align globally (per-pair Jaccard of
/// co-occurrence weighted by IoU), a match counting only when its IoU
/// reaches alpha; det_a = TP/(TP+FN+FP) and ass_a averages the per-pair
/// association Jaccard over matches. Each reported value is the mean over
/// the sweep of its per-alpha value, and hota averages sqrt(det*ass).
/// hota() sweeps alphas across OpenMP threads; hota_serial is the
/// plain-loop reference; both produce identical values. Two empty streams
/// score 1 across the board.
HotaResult hota(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                const std::vector<double>& alphas = hota_alphas());
HotaResult hota_serial(const std::vector<TrackRow>& gt,
                       const std::vector<TrackRow>& pred,
                       const std::vector<double>& alphas = hota_alphas());

/// Boxes of one compound rider-motorcycle instance in one frame.
struct InstanceBoxes {
  BBox moto;
  std::vector<BBox> riders;  // at least one
};

struct FrameInstances {
  int frame = 0;
  std::vector<InstanceBoxes> instances;
};

/// Ground-truth instances per frame: objects grouped by their association
/// id; a group appears in a frame only when its motorcycle and at least one
/// rider do. Throws SchemaError if a group holds two motorcycles at once.
std::vector<FrameInstances> instances_from_gt(const GroundTruthLog& gt);

/// Predicted instances per frame over [first_frame, last_frame]: rows
/// grouped by association id (-1 rows ignored), same completeness rule.
/// Throws FrameMismatchError on rows outside the range.
std::vector<FrameInstances> instances_from_rows(const std::vector<TrackRow>& rows,
                                                int first_frame, int last_frame);

/// Percentage of ground-truth instances reproduced exactly: a predicted
/// instance is correct when its motorcycle box overlaps a ground-truth
/// motorcycle at IoU >= iou_thresh (best such instance, not yet claimed)
/// and the rider sets admit a perfect one-to-one pairing with every pair
/// at IoU >= iou_thresh. Each ground-truth instance is credited once.
/// 100 when the ground truth has no instances. Throws FrameMismatchError
/// when the two frame lists disagree.
double rm_association_metric(const std::vector<FrameInstances>& gt,
                             const std::vector<FrameInstances>& pred,
                             double iou_thresh = 0.5);

/// Predicted track id -> ground-truth track id, by plurality vote over the
/// per-frame matches (ties toward the smaller ground-truth id). Tracks
/// never matched are absent.
std::map<int, int> track_correspondence(const std::vector<TrackRow>& gt,
                                        const std::vector<TrackRow>& pred,
                                        double iou_thresh = 0.5);

/// Track-level flag precision/recall/F1. A flagged predicted track whose
/// corresponding ground-truth track is truly positive scores that positive
/// (each at most once); every other flagged track is a false positive;
/// unclaimed true positives are misses. Order-free, so the result is
/// invariant under track relabeling.
Prf violation_prf(const std::vector<int>& gt_positive,
                  const std::vector<int>& pred_positive,
                  const std::map<int, int>& pred_to_gt);

enum class StageOutcome { tp, fp, fn };
enum class LpDetOutcome { tp, fp, fn, absent };
enum class LpRecOutcome { correct, incorrect, absent };

/// Per-stage outcome of one ticket's pipeline: was a real violation
/// flagged, was a plate found for it, and did the read match the ground
/// truth exactly. 'absent' marks stages that never ran.
struct StageLabel {
  StageOutcome violation = StageOutcome::fn;
  LpDetOutcome lp_detection = LpDetOutcome::absent;
  LpRecOutcome lp_recognition = LpRecOutcome::absent;
};

enum class TicketLabel { tp, fp, fn };

/// Ticket-level verdict from the stage outcomes: TP only when every stage
/// succeeds; FN when the violation was missed outright or a true violation
/// lost its plate; FP otherwise. Only the eight tabulated stage
/// combinations plus the degenerate flagged-but-plateless false alarm are
/// valid; anything else throws std::invalid_argument rather than being
/// silently mapped.
TicketLabel eticket_label(const StageLabel& s);

/// Ticket precision/recall/F1 in percent. human_in_loop models an officer
/// reviewing every ticket before issue: false positives are discarded, so
/// precision is 100 whenever any true positive survives. No tickets at all
/// scores 0/0/0.
Prf eticket_prf(const std::vector<TicketLabel>& labels, bool human_in_loop);

/// Unit-cost edit distance (insertions, deletions, substitutions).
int levenshtein(const std::string& a, const std::string& b);

/// Character error rate: levenshtein(gt, pred) / |gt|. Throws
/// std::invalid_argument when gt is empty.
double cer(const std::string& gt, const std::string& pred);

struct PlatePair {
  std::string gt;
  std::string pred;
};

/// 100 * exact matches / total; 0 when pairs is empty.
double plate_accuracy(const std::vector<PlatePair>& pairs);

/// Everything one sequence evaluation produces. Scalar conventions match
/// the operations above; cer and plate_accuracy cover plate reads attached
/// to correctly issued tickets.
struct EvalReport {
  double hota = 0.0;
  double det_a = 0.0;
  double ass_a = 0.0;
  double mota = 0.0;
  double idf1 = 0.0;
  double assoc_score_pct = 0.0;
  Prf no_helmet;
  Prf triple;
  Prf eticket;
  Prf eticket_hil;
  double cer = 0.0;
  double plate_accuracy = 0.0;
  ClearCounts counts;

  bool operator==(const EvalReport&) const = default;
};

struct EvalConfig {
  double iou_thresh = 0.5;                       // frame matching + instance rule
  std::vector<double> alphas = hota_alphas();    // localization sweep
  int triple_min_count = 1;                      // ticket consolidation
};

/// Full scoring of one tracker run against its ground truth. Rows and
/// detections must reference the same stream (rows echo detection boxes,
/// which is how attribute evidence is joined back); frames outside the
/// ground-truth range throw FrameMismatchError.
EvalReport evaluate_sequence(const GroundTruthLog& gt,
                             const std::vector<TrackRow>& pred,
                             const std::vector<SacDetection>& dets,
                             const EvalConfig& cfg = {});

struct EvalInput {
  std::string name;
  GroundTruthLog gt;
  std::vector<TrackRow> pred;
  std::vector<SacDetection> dets;
};

/// evaluate_sequence over many sequences, fanned across OpenMP threads;
/// results land in input order, so the output is deterministic.
std::vector<EvalReport> evaluate_many(const std::vector<EvalInput>& inputs,
                                      const EvalConfig& cfg = {});

/// Field-wise mean of every rate plus summed counts; the suite aggregate.
/// Throws std::invalid_argument on an empty list.
EvalReport aggregate_reports(const std::vector<EvalReport>& reports);

/// Report JSON in fixed key order; the reader rejects unknown keys.
nlohmann::ordered_json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

/// {"scenarios": {name: report, ...}, "aggregate": report} in given order.
nlohmann::ordered_json suite_report_to_json(
    const std::vector<std::pair<std::string, EvalReport>>& scenarios);

}  // namespace rmtrack
