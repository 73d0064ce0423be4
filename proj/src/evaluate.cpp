#include "rmtrack/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "rmtrack/errors.hpp"
#include "rmtrack/lap.hpp"

namespace rmtrack {

namespace {

constexpr double kForbidden = -std::numeric_limits<double>::infinity();

struct FrameGroup {
  int frame = 0;
  std::vector<int> gt;    // flat indices into the gt row vector
  std::vector<int> pred;  // flat indices into the pred row vector
};

void check_unique_ids(const std::vector<TrackRow>& rows, const std::vector<int>& idx,
                      const char* stream, int frame) {
  std::vector<int> ids;
  ids.reserve(idx.size());
  for (int i : idx) ids.push_back(rows[static_cast<std::size_t>(i)].track_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw SchemaError(std::string(stream) + " stream repeats a track id in frame " +
                      std::to_string(frame));
  }
}

std::vector<FrameGroup> group_frames(const std::vector<TrackRow>& gt,
                                     const std::vector<TrackRow>& pred) {
  std::map<int, FrameGroup> by;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    auto& g = by[gt[i].frame];
    g.frame = gt[i].frame;
    g.gt.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto& g = by[pred[i].frame];
    g.frame = pred[i].frame;
    g.pred.push_back(static_cast<int>(i));
  }
  std::vector<FrameGroup> out;
  out.reserve(by.size());
  for (auto& [f, g] : by) {
    check_unique_ids(gt, g.gt, "ground-truth", f);
    check_unique_ids(pred, g.pred, "prediction", f);
    out.push_back(std::move(g));
  }
  return out;
}

/// Predictions straying outside the ground-truth frame range mean the two
/// files do not describe the same sequence.
void check_frame_span(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred) {
  if (gt.empty() || pred.empty()) return;
  int lo = gt.front().frame, hi = lo;
  for (const TrackRow& r : gt) {
    lo = std::min(lo, r.frame);
    hi = std::max(hi, r.frame);
  }
  for (const TrackRow& r : pred) {
    if (r.frame < lo || r.frame > hi) {
      throw FrameMismatchError("prediction frame " + std::to_string(r.frame) +
                               " outside ground-truth range [" + std::to_string(lo) +
                               ", " + std::to_string(hi) + "]");
    }
  }
}

std::vector<FrameCorrespondence> match_frames_impl(const std::vector<TrackRow>& gt,
                                                   const std::vector<TrackRow>& pred,
                                                   double iou_thresh, bool parallel) {
  const std::vector<FrameGroup> groups = group_frames(gt, pred);
  std::vector<FrameCorrespondence> out(groups.size());
  const int n = static_cast<int>(groups.size());
  // Frames are independent and each writes only its own slot, so the
  // parallel and serial paths produce identical output.
#pragma omp parallel for schedule(static) if (parallel)
  for (int fi = 0; fi < n; ++fi) {
    const FrameGroup& g = groups[static_cast<std::size_t>(fi)];
    const int ng = static_cast<int>(g.gt.size());
    const int np = static_cast<int>(g.pred.size());
    std::vector<double> w(static_cast<std::size_t>(ng) * np, kForbidden);
    for (int i = 0; i < ng; ++i) {
      const TrackRow& a = gt[static_cast<std::size_t>(g.gt[i])];
      for (int j = 0; j < np; ++j) {
        const TrackRow& b = pred[static_cast<std::size_t>(g.pred[j])];
        if (a.cls != b.cls) continue;
        const double iou = iou_box(a.bbox(), b.bbox());
        if (iou >= iou_thresh && iou > 0.0) w[static_cast<std::size_t>(i) * np + j] = iou;
      }
    }
    const Matching m = max_weight_matching(ng, np, w);
    FrameCorrespondence& fc = out[static_cast<std::size_t>(fi)];
    fc.frame = g.frame;
    std::vector<char> pred_used(static_cast<std::size_t>(np), 0);
    for (int i = 0; i < ng; ++i) {
      const int j = m.row_to_col[static_cast<std::size_t>(i)];
      if (j >= 0) {
        fc.matches.emplace_back(g.gt[i], g.pred[j]);
        pred_used[static_cast<std::size_t>(j)] = 1;
      } else {
        fc.unmatched_gt.push_back(g.gt[i]);
      }
    }
    for (int j = 0; j < np; ++j) {
      if (!pred_used[static_cast<std::size_t>(j)]) fc.unmatched_pred.push_back(g.pred[j]);
    }
  }
  return out;
}

/// Dense index per track id, assigned in first-appearance order over the
/// row vector so downstream summation order is invariant under relabeling.
struct DenseIds {
  std::map<int, int> index;
  std::vector<long long> row_count;  // rows per dense id

  int of(int id) {
    auto [it, inserted] = index.try_emplace(id, static_cast<int>(index.size()));
    if (inserted) row_count.push_back(0);
    return it->second;
  }
};

struct HotaCache {
  // Per frame: dense ids on each side plus the row-major IoU matrix.
  struct Frame {
    std::vector<int> g;
    std::vector<int> p;
    std::vector<double> sim;
  };
  std::vector<Frame> frames;
  std::vector<long long> gt_count;    // appearances per dense gt id
  std::vector<long long> pred_count;  // appearances per dense pred id
  std::vector<double> align;          // global alignment score, G x P
  int G = 0, P = 0;
};

HotaCache build_hota_cache(const std::vector<TrackRow>& gt,
                           const std::vector<TrackRow>& pred) {
  const std::vector<FrameGroup> groups = group_frames(gt, pred);
  DenseIds gid, pid;
  for (const TrackRow& r : gt) ++gid.row_count[static_cast<std::size_t>(gid.of(r.track_id))];
  for (const TrackRow& r : pred) ++pid.row_count[static_cast<std::size_t>(pid.of(r.track_id))];

  HotaCache c;
  c.G = static_cast<int>(gid.index.size());
  c.P = static_cast<int>(pid.index.size());
  c.gt_count = gid.row_count;
  c.pred_count = pid.row_count;
  std::vector<double> potential(static_cast<std::size_t>(c.G) * c.P, 0.0);

  c.frames.reserve(groups.size());
  for (const FrameGroup& g : groups) {
    HotaCache::Frame f;
    for (int i : g.gt) f.g.push_back(gid.of(gt[static_cast<std::size_t>(i)].track_id));
    for (int j : g.pred) f.p.push_back(pid.of(pred[static_cast<std::size_t>(j)].track_id));
    const int ng = static_cast<int>(f.g.size());
    const int np = static_cast<int>(f.p.size());
    f.sim.assign(static_cast<std::size_t>(ng) * np, 0.0);
    for (int i = 0; i < ng; ++i) {
      const TrackRow& a = gt[static_cast<std::size_t>(g.gt[i])];
      for (int j = 0; j < np; ++j) {
        const TrackRow& b = pred[static_cast<std::size_t>(g.pred[j])];
        if (a.cls != b.cls) continue;
        f.sim[static_cast<std::size_t>(i) * np + j] = iou_box(a.bbox(), b.bbox());
      }
    }
    // Soft co-occurrence: each pair banks its IoU share of the frame, the
    // global alignment prior used to keep per-frame matching consistent.
    std::vector<double> rs(static_cast<std::size_t>(ng), 0.0);
    std::vector<double> cs(static_cast<std::size_t>(np), 0.0);
    for (int i = 0; i < ng; ++i) {
      for (int j = 0; j < np; ++j) {
        const double s = f.sim[static_cast<std::size_t>(i) * np + j];
        rs[static_cast<std::size_t>(i)] += s;
        cs[static_cast<std::size_t>(j)] += s;
      }
    }
    for (int i = 0; i < ng; ++i) {
      for (int j = 0; j < np; ++j) {
        const double s = f.sim[static_cast<std::size_t>(i) * np + j];
        if (s <= 0.0) continue;
        const double denom = rs[static_cast<std::size_t>(i)] + cs[static_cast<std::size_t>(j)] - s;
        if (denom > 0.0) {
          potential[static_cast<std::size_t>(f.g[i]) * c.P + f.p[j]] += s / denom;
        }
      }
    }
    c.frames.push_back(std::move(f));
  }

  c.align.assign(static_cast<std::size_t>(c.G) * c.P, 0.0);
  for (int g = 0; g < c.G; ++g) {
    for (int p = 0; p < c.P; ++p) {
      const double pot = potential[static_cast<std::size_t>(g) * c.P + p];
      if (pot <= 0.0) continue;
      const double denom = static_cast<double>(c.gt_count[static_cast<std::size_t>(g)]) +
                           static_cast<double>(c.pred_count[static_cast<std::size_t>(p)]) - pot;
      c.align[static_cast<std::size_t>(g) * c.P + p] = pot / denom;
    }
  }
  return c;
}

HotaResult hota_impl(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                     const std::vector<double>& alphas, bool parallel) {
  if (alphas.empty()) throw std::invalid_argument("hota: empty alpha sweep");
  for (double a : alphas) {
    if (!(a > 0.0) || !(a <= 1.0)) {
      throw std::invalid_argument("hota: alpha outside (0, 1]");
    }
  }
  check_frame_span(gt, pred);
  if (gt.empty() && pred.empty()) return HotaResult{1.0, 1.0, 1.0};

  const HotaCache c = build_hota_cache(gt, pred);
  const double gt_total = static_cast<double>(gt.size());
  const double pred_total = static_cast<double>(pred.size());
  const int n_alpha = static_cast<int>(alphas.size());
  std::vector<double> det(static_cast<std::size_t>(n_alpha), 0.0);
  std::vector<double> ass(static_cast<std::size_t>(n_alpha), 0.0);
  std::vector<double> hot(static_cast<std::size_t>(n_alpha), 0.0);
  // Alphas are independent; each fills only its own slot and the final
  // means run in index order, so parallel and serial results are identical.
#pragma omp parallel for schedule(static) if (parallel)
  for (int ai = 0; ai < n_alpha; ++ai) {
    const double alpha = alphas[static_cast<std::size_t>(ai)];
    std::vector<long long> matched(static_cast<std::size_t>(c.G) * c.P, 0);
    long long tp = 0;
    std::vector<double> w;
    for (const HotaCache::Frame& f : c.frames) {
      const int ng = static_cast<int>(f.g.size());
      const int np = static_cast<int>(f.p.size());
      if (ng == 0 || np == 0) continue;
      w.assign(static_cast<std::size_t>(ng) * np, 0.0);
      for (int i = 0; i < ng; ++i) {
        for (int j = 0; j < np; ++j) {
          const double s = f.sim[static_cast<std::size_t>(i) * np + j];
          if (s > 0.0) {
            w[static_cast<std::size_t>(i) * np + j] =
                c.align[static_cast<std::size_t>(f.g[i]) * c.P + f.p[j]] * s;
          }
        }
      }
      const Matching m = max_weight_matching(ng, np, w);
      for (int i = 0; i < ng; ++i) {
        const int j = m.row_to_col[static_cast<std::size_t>(i)];
        if (j < 0) continue;
        if (f.sim[static_cast<std::size_t>(i) * np + j] >= alpha) {
          ++tp;
          ++matched[static_cast<std::size_t>(f.g[i]) * c.P + f.p[j]];
        }
      }
    }
    det[static_cast<std::size_t>(ai)] =
        static_cast<double>(tp) / (gt_total + pred_total - static_cast<double>(tp));
    if (tp > 0) {
      double sum = 0.0;
      for (int g = 0; g < c.G; ++g) {
        for (int p = 0; p < c.P; ++p) {
          const long long m = matched[static_cast<std::size_t>(g) * c.P + p];
          if (m == 0) continue;
          const double denom = static_cast<double>(c.gt_count[static_cast<std::size_t>(g)]) +
                               static_cast<double>(c.pred_count[static_cast<std::size_t>(p)]) -
                               static_cast<double>(m);
          sum += static_cast<double>(m) * (static_cast<double>(m) / denom);
        }
      }
      ass[static_cast<std::size_t>(ai)] = sum / static_cast<double>(tp);
    }
    hot[static_cast<std::size_t>(ai)] =
        std::sqrt(det[static_cast<std::size_t>(ai)] * ass[static_cast<std::size_t>(ai)]);
  }
  HotaResult r;
  for (int ai = 0; ai < n_alpha; ++ai) {
    r.hota += hot[static_cast<std::size_t>(ai)];
    r.det_a += det[static_cast<std::size_t>(ai)];
    r.ass_a += ass[static_cast<std::size_t>(ai)];
  }
  r.hota /= n_alpha;
  r.det_a /= n_alpha;
  r.ass_a /= n_alpha;
  return r;
}

/// True when the rider sets pair off one-to-one with every pair reaching
/// the threshold.
bool riders_bijective(const std::vector<BBox>& gt, const std::vector<BBox>& pred,
                      double iou_thresh) {
  if (gt.size() != pred.size()) return false;
  const int n = static_cast<int>(gt.size());
  std::vector<double> w(static_cast<std::size_t>(n) * n, kForbidden);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double iou = iou_box(pred[static_cast<std::size_t>(i)], gt[static_cast<std::size_t>(j)]);
      if (iou >= iou_thresh && iou > 0.0) w[static_cast<std::size_t>(i) * n + j] = 1.0;
    }
  }
  const Matching m = max_weight_matching(n, n, w);
  return m.total == static_cast<double>(n);
}

nlohmann::ordered_json prf_to_json(const Prf& p) {
  nlohmann::ordered_json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  return j;
}

Prf prf_from_json(const nlohmann::json& j, const char* what) {
  require_keys(j, {"precision", "recall", "f1"}, {}, what);
  Prf p;
  p.precision = number_field(j, "precision", what);
  p.recall = number_field(j, "recall", what);
  p.f1 = number_field(j, "f1", what);
  return p;
}

}  // namespace

Prf prf_from_counts(long long tp, long long fp, long long fn) {
  Prf r;
  if (tp + fp > 0) r.precision = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

std::vector<FrameCorrespondence> match_frames(const std::vector<TrackRow>& gt,
                                              const std::vector<TrackRow>& pred,
                                              double iou_thresh) {
  return match_frames_impl(gt, pred, iou_thresh, true);
}

std::vector<FrameCorrespondence> match_frames_serial(const std::vector<TrackRow>& gt,
                                                     const std::vector<TrackRow>& pred,
                                                     double iou_thresh) {
  return match_frames_impl(gt, pred, iou_thresh, false);
}

ClearCounts clear_counts(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                         double iou_thresh) {
  check_frame_span(gt, pred);
  ClearCounts c;
  c.gt = static_cast<long long>(gt.size());
  std::map<int, int> last;  // gt track id -> most recent matched pred id
  for (const FrameCorrespondence& fc : match_frames(gt, pred, iou_thresh)) {
    for (const auto& [gi, pj] : fc.matches) {
      ++c.tp;
      const int gid = gt[static_cast<std::size_t>(gi)].track_id;
      const int pid = pred[static_cast<std::size_t>(pj)].track_id;
      auto it = last.find(gid);
      if (it != last.end() && it->second != pid) ++c.idsw;
      last[gid] = pid;
    }
  }
  c.fn = c.gt - c.tp;
  c.fp = static_cast<long long>(pred.size()) - c.tp;
  return c;
}

double mota(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
            double iou_thresh) {
  const ClearCounts c = clear_counts(gt, pred, iou_thresh);
  const double denom = static_cast<double>(std::max<long long>(c.gt, 1));
  return 1.0 - static_cast<double>(c.fn + c.fp + c.idsw) / denom;
}

double idf1(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
            double iou_thresh) {
  check_frame_span(gt, pred);
  if (gt.empty() && pred.empty()) return 1.0;
  const std::vector<FrameGroup> groups = group_frames(gt, pred);
  DenseIds gid, pid;
  for (const TrackRow& r : gt) gid.of(r.track_id);
  for (const TrackRow& r : pred) pid.of(r.track_id);
  const int G = static_cast<int>(gid.index.size());
  const int P = static_cast<int>(pid.index.size());
  std::vector<double> overlap(static_cast<std::size_t>(G) * P, 0.0);
  for (const FrameGroup& g : groups) {
    for (int i : g.gt) {
      const TrackRow& a = gt[static_cast<std::size_t>(i)];
      for (int j : g.pred) {
        const TrackRow& b = pred[static_cast<std::size_t>(j)];
        if (a.cls != b.cls) continue;
        if (iou_box(a.bbox(), b.bbox()) >= iou_thresh) {
          overlap[static_cast<std::size_t>(gid.of(a.track_id)) * P + pid.of(b.track_id)] += 1.0;
        }
      }
    }
  }
  const double idtp = max_weight_matching(G, P, overlap).total;
  return 2.0 * idtp / static_cast<double>(gt.size() + pred.size());
}

std::vector<double> hota_alphas() {
  std::vector<double> a;
  a.reserve(19);
  for (int i = 1; i <= 19; ++i) a.push_back(0.05 * i);
  return a;
}

HotaResult hota(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                const std::vector<double>& alphas) {
  return hota_impl(gt, pred, alphas, true);
}

HotaResult hota_serial(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                       const std::vector<double>& alphas) {
  return hota_impl(gt, pred, alphas, false);
}

std::vector<FrameInstances> instances_from_gt(const GroundTruthLog& gt) {
  std::vector<FrameInstances> out;
  out.reserve(gt.frames.size());
  for (const GtFrame& f : gt.frames) {
    FrameInstances fi;
    fi.frame = f.frame;
    struct Build {
      std::optional<BBox> moto;
      std::vector<BBox> riders;
    };
    std::map<int, Build> groups;
    for (const GtObject& o : f.objects) {
      Build& b = groups[o.assoc_gt_id];
      if (o.cls == ObjClass::motorcycle) {
        if (b.moto) {
          throw SchemaError("ground-truth group " + std::to_string(o.assoc_gt_id) +
                            " holds two motorcycles in frame " + std::to_string(f.frame));
        }
        b.moto = o.bbox;
      } else {
        b.riders.push_back(o.bbox);
      }
    }
    for (const auto& kv : groups) {
      const Build& b = kv.second;
      if (b.moto && !b.riders.empty()) {
        fi.instances.push_back(InstanceBoxes{*b.moto, b.riders});
      }
    }
    out.push_back(std::move(fi));
  }
  return out;
}

std::vector<FrameInstances> instances_from_rows(const std::vector<TrackRow>& rows,
                                                int first_frame, int last_frame) {
  if (last_frame < first_frame) {
    throw std::invalid_argument("instances_from_rows: empty frame range");
  }
  struct Build {
    std::optional<BBox> moto;
    std::vector<BBox> riders;
  };
  std::vector<std::map<int, Build>> per_frame(static_cast<std::size_t>(last_frame - first_frame + 1));
  for (const TrackRow& r : rows) {
    if (r.frame < first_frame || r.frame > last_frame) {
      throw FrameMismatchError("track row frame " + std::to_string(r.frame) +
                               " outside range [" + std::to_string(first_frame) + ", " +
                               std::to_string(last_frame) + "]");
    }
    if (r.assoc_id == -1) continue;
    Build& b = per_frame[static_cast<std::size_t>(r.frame - first_frame)][r.assoc_id];
    if (r.cls == ObjClass::motorcycle) {
      if (b.moto) {
        throw SchemaError("association group " + std::to_string(r.assoc_id) +
                          " holds two motorcycles in frame " + std::to_string(r.frame));
      }
      b.moto = r.bbox();
    } else {
      b.riders.push_back(r.bbox());
    }
  }
  std::vector<FrameInstances> out(per_frame.size());
  for (std::size_t k = 0; k < per_frame.size(); ++k) {
    out[k].frame = first_frame + static_cast<int>(k);
    for (const auto& kv : per_frame[k]) {
      const Build& b = kv.second;
      if (b.moto && !b.riders.empty()) {
        out[k].instances.push_back(InstanceBoxes{*b.moto, b.riders});
      }
    }
  }
  return out;
}

double rm_association_metric(const std::vector<FrameInstances>& gt,
                             const std::vector<FrameInstances>& pred,
                             double iou_thresh) {
  if (gt.size() != pred.size()) {
    throw FrameMismatchError("instance streams cover different frame counts");
  }
  long long total_gt = 0;
  long long correct = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (gt[k].frame != pred[k].frame) {
      throw FrameMismatchError("instance streams disagree at frame index " + std::to_string(k));
    }
    const auto& gi = gt[k].instances;
    const auto& pi = pred[k].instances;
    total_gt += static_cast<long long>(gi.size());
    std::vector<char> claimed(gi.size(), 0);
    for (const InstanceBoxes& p : pi) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t t = 0; t < gi.size(); ++t) {
        const double iou = iou_box(p.moto, gi[t].moto);
        if (iou >= iou_thresh && iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(t);
        }
      }
      if (best < 0 || claimed[static_cast<std::size_t>(best)]) continue;
      if (riders_bijective(gi[static_cast<std::size_t>(best)].riders, p.riders, iou_thresh)) {
        claimed[static_cast<std::size_t>(best)] = 1;
        ++correct;
      }
    }
  }
  if (total_gt == 0) return 100.0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total_gt);
}

std::map<int, int> track_correspondence(const std::vector<TrackRow>& gt,
                                        const std::vector<TrackRow>& pred,
                                        double iou_thresh) {
  std::map<int, std::map<int, int>> votes;  // pred id -> gt id -> matched frames
  for (const FrameCorrespondence& fc : match_frames(gt, pred, iou_thresh)) {
    for (const auto& [gi, pj] : fc.matches) {
      ++votes[pred[static_cast<std::size_t>(pj)].track_id]
             [gt[static_cast<std::size_t>(gi)].track_id];
    }
  }
  std::map<int, int> out;
  for (const auto& [pid, tally] : votes) {
    int best_gt = -1;
    int best_n = 0;
    for (const auto& [gid, n] : tally) {
      if (n > best_n) {  // ties keep the smaller gt id seen first
        best_n = n;
        best_gt = gid;
      }
    }
    out[pid] = best_gt;
  }
  return out;
}

Prf violation_prf(const std::vector<int>& gt_positive, const std::vector<int>& pred_positive,
                  const std::map<int, int>& pred_to_gt) {
  const std::set<int> gt_pos(gt_positive.begin(), gt_positive.end());
  const std::set<int> pred_pos(pred_positive.begin(), pred_positive.end());
  std::set<int> claimed;
  for (int p : pred_pos) {
    auto it = pred_to_gt.find(p);
    if (it != pred_to_gt.end() && gt_pos.count(it->second)) claimed.insert(it->second);
  }
  const long long tp = static_cast<long long>(claimed.size());
  const long long fp = static_cast<long long>(pred_pos.size()) - tp;
  const long long fn = static_cast<long long>(gt_pos.size()) - tp;
  return prf_from_counts(tp, fp, fn);
}

TicketLabel eticket_label(const StageLabel& s) {
  const auto invalid = [&]() -> std::invalid_argument {
    return std::invalid_argument("eticket_label: stage combination outside the table");
  };
  if (s.violation == StageOutcome::fn) {
    if (s.lp_detection == LpDetOutcome::absent && s.lp_recognition == LpRecOutcome::absent) {
      return TicketLabel::fn;  // missed violation: nothing downstream ran
    }
    throw invalid();
  }
  switch (s.lp_detection) {
    case LpDetOutcome::tp:
      if (s.lp_recognition == LpRecOutcome::correct) {
        return s.violation == StageOutcome::tp ? TicketLabel::tp : TicketLabel::fp;
      }
      if (s.lp_recognition == LpRecOutcome::incorrect) return TicketLabel::fp;
      throw invalid();
    case LpDetOutcome::fp:
      // A plate found where none belongs can never read correctly.
      if (s.lp_recognition == LpRecOutcome::incorrect) return TicketLabel::fp;
      throw invalid();
    case LpDetOutcome::fn:
      if (s.lp_recognition != LpRecOutcome::absent) throw invalid();
      // A true violation that lost its plate is an unissuable ticket; a
      // false alarm without a plate stays a false alarm.
      return s.violation == StageOutcome::tp ? TicketLabel::fn : TicketLabel::fp;
    case LpDetOutcome::absent:
      throw invalid();  // the plate stage always runs once a ticket exists
  }
  throw invalid();
}

Prf eticket_prf(const std::vector<TicketLabel>& labels, bool human_in_loop) {
  long long tp = 0, fp = 0, fn = 0;
  for (TicketLabel l : labels) {
    switch (l) {
      case TicketLabel::tp: ++tp; break;
      case TicketLabel::fp: ++fp; break;
      case TicketLabel::fn: ++fn; break;
    }
  }
  if (human_in_loop) fp = 0;  // reviewed tickets never go out wrong
  return prf_from_counts(tp, fp, fn);
}

int levenshtein(const std::string& a, const std::string& b) {
  const std::size_t n = b.size();
  std::vector<int> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 0; i < a.size(); ++i) {
    cur[0] = static_cast<int>(i) + 1;
    for (std::size_t j = 0; j < n; ++j) {
      const int sub = prev[j] + (a[i] == b[j] ? 0 : 1);
      cur[j + 1] = std::min({prev[j + 1] + 1, cur[j] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

double cer(const std::string& gt, const std::string& pred) {
  if (gt.empty()) throw std::invalid_argument("cer: empty ground-truth string");
  return static_cast<double>(levenshtein(gt, pred)) / static_cast<double>(gt.size());
}

double plate_accuracy(const std::vector<PlatePair>& pairs) {
  if (pairs.empty()) return 0.0;
  long long exact = 0;
  for (const PlatePair& p : pairs) {
    if (p.gt == p.pred) ++exact;
  }
  return 100.0 * static_cast<double>(exact) / static_cast<double>(pairs.size());
}

EvalReport evaluate_sequence(const GroundTruthLog& gt, const std::vector<TrackRow>& pred,
                             const std::vector<SacDetection>& dets, const EvalConfig& cfg) {
  if (gt.frames.empty()) throw SchemaError("ground truth holds no frames");
  const int first = gt.frames.front().frame;
  const int last = gt.frames.back().frame;
  for (std::size_t i = 1; i < gt.frames.size(); ++i) {
    if (gt.frames[i].frame != gt.frames[i - 1].frame + 1) {
      throw FrameMismatchError("ground-truth frames are not contiguous");
    }
  }
  for (const SacDetection& d : dets) {
    if (d.frame < first || d.frame > last) {
      throw FrameMismatchError("detection frame " + std::to_string(d.frame) +
                               " outside ground-truth range [" + std::to_string(first) +
                               ", " + std::to_string(last) + "]");
    }
  }
  const std::vector<TrackRow> gt_rows = gt_track_rows(gt);

  EvalReport r;
  r.counts = clear_counts(gt_rows, pred, cfg.iou_thresh);
  r.mota = 1.0 - static_cast<double>(r.counts.fn + r.counts.fp + r.counts.idsw) /
                     static_cast<double>(std::max<long long>(r.counts.gt, 1));
  r.idf1 = idf1(gt_rows, pred, cfg.iou_thresh);
  const HotaResult h = hota(gt_rows, pred, cfg.alphas);
  r.hota = h.hota;
  r.det_a = h.det_a;
  r.ass_a = h.ass_a;
  r.assoc_score_pct = rm_association_metric(instances_from_gt(gt),
                                            instances_from_rows(pred, first, last),
                                            cfg.iou_thresh);

  const std::map<int, int> corr = track_correspondence(gt_rows, pred, cfg.iou_thresh);

  // Helmet task: consolidate each predicted rider track's helmet evidence;
  // rows are joined back to detections by frame, class, and exact box.
  std::map<int, std::vector<int>> det_ix;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    det_ix[dets[i].frame].push_back(static_cast<int>(i));
  }
  const auto find_det = [&](const TrackRow& row) -> const SacDetection& {
    auto it = det_ix.find(row.frame);
    if (it != det_ix.end()) {
      for (int i : it->second) {
        const SacDetection& d = dets[static_cast<std::size_t>(i)];
        if (d.cls == row.cls && d.bbox.x == row.x && d.bbox.y == row.y &&
            d.bbox.w == row.w && d.bbox.h == row.h) {
          return d;
        }
      }
    }
    throw SchemaError("track row (frame " + std::to_string(row.frame) + ", track " +
                      std::to_string(row.track_id) + ") references no detection");
  };
  std::map<int, std::vector<HelmetLabel>> helmet_obs;
  for (const TrackRow& row : pred) {
    if (row.cls != ObjClass::rider) continue;
    const SacDetection& d = find_det(row);
    auto& obs = helmet_obs[row.track_id];
    if (d.attrs.helmet) obs.push_back(*d.attrs.helmet);
  }
  std::vector<int> gt_helmet_pos, pred_helmet_pos;
  for (const GtTrack& t : gt.tracks) {
    if (t.cls == ObjClass::rider && t.helmet == HelmetLabel::no_helmet) {
      gt_helmet_pos.push_back(t.gt_id);
    }
  }
  for (const auto& [tid, obs] : helmet_obs) {
    if (consolidate_helmet(obs) == HelmetLabel::no_helmet) pred_helmet_pos.push_back(tid);
  }
  r.no_helmet = violation_prf(gt_helmet_pos, pred_helmet_pos, corr);

  // Ticket assembly feeds both the triple task and the ticket truth table.
  const std::vector<ETicket> tickets = assemble_etickets(pred, dets, cfg.triple_min_count);
  // A group may legitimately span two motorcycle tracks over time (the id is
  // re-established on a new track after the original dies), so the group is
  // represented by the motorcycle track holding most of its rows; ties go to
  // the smaller track id.
  std::map<int, std::map<int, int>> group_moto_rows;  // assoc id -> track -> rows
  for (const TrackRow& row : pred) {
    if (row.cls != ObjClass::motorcycle || row.assoc_id == -1) continue;
    ++group_moto_rows[row.assoc_id][row.track_id];
  }
  std::map<int, int> group_moto;  // pred assoc id -> pred motorcycle track id
  for (const auto& [aid, counts] : group_moto_rows) {
    int best_tid = -1, best_n = 0;
    for (const auto& [tid, n] : counts) {
      if (n > best_n) {
        best_tid = tid;
        best_n = n;
      }
    }
    group_moto.emplace(aid, best_tid);
  }

  std::vector<int> gt_triple_pos, pred_triple_pos;
  for (const GtTrack& t : gt.tracks) {
    if (t.cls == ObjClass::motorcycle && t.triple) gt_triple_pos.push_back(t.gt_id);
  }
  for (const ETicket& tk : tickets) {
    const bool triple = std::find(tk.violations.begin(), tk.violations.end(),
                                  "triple_riding") != tk.violations.end();
    if (!triple) continue;
    auto it = group_moto.find(tk.assoc_id);
    if (it != group_moto.end()) pred_triple_pos.push_back(it->second);
  }
  r.triple = violation_prf(gt_triple_pos, pred_triple_pos, corr);

  // Ticket truth table: each ticket is labeled by how its pipeline stages
  // compare to the ground-truth instance its motorcycle track follows.
  struct GtInstance {
    bool violating = false;
    std::string plate;
  };
  std::map<int, GtInstance> inst;          // gt assoc id -> instance facts
  std::map<int, int> moto_gt_to_assoc;     // gt motorcycle id -> gt assoc id
  for (const GtTrack& t : gt.tracks) {
    GtInstance& gi = inst[t.assoc_gt_id];
    if (t.cls == ObjClass::rider) {
      if (t.helmet == HelmetLabel::no_helmet) gi.violating = true;
    } else {
      gi.plate = t.plate;
      if (t.triple) gi.violating = true;
      moto_gt_to_assoc[t.gt_id] = t.assoc_gt_id;
    }
  }
  std::vector<TicketLabel> labels;
  std::vector<PlatePair> plate_pairs;
  std::set<int> claimed;
  for (const ETicket& tk : tickets) {
    const GtInstance* gi = nullptr;
    int gt_assoc = -1;
    auto mit = group_moto.find(tk.assoc_id);
    if (mit != group_moto.end()) {
      auto cit = corr.find(mit->second);
      if (cit != corr.end()) {
        auto ait = moto_gt_to_assoc.find(cit->second);
        if (ait != moto_gt_to_assoc.end()) {
          gt_assoc = ait->second;
          gi = &inst.at(gt_assoc);
        }
      }
    }
    StageLabel s;
    const bool viol_tp = gi && gi->violating && !claimed.count(gt_assoc);
    s.violation = viol_tp ? StageOutcome::tp : StageOutcome::fp;
    if (viol_tp) claimed.insert(gt_assoc);
    if (!tk.plate) {
      s.lp_detection = LpDetOutcome::fn;
      s.lp_recognition = LpRecOutcome::absent;
    } else if (gi && !gi->plate.empty()) {
      s.lp_detection = LpDetOutcome::tp;
      s.lp_recognition =
          (*tk.plate == gi->plate) ? LpRecOutcome::correct : LpRecOutcome::incorrect;
    } else {
      s.lp_detection = LpDetOutcome::fp;  // a read with no vehicle to credit
      s.lp_recognition = LpRecOutcome::incorrect;
    }
    labels.push_back(eticket_label(s));
    if (viol_tp && tk.plate && !gi->plate.empty()) {
      plate_pairs.push_back(PlatePair{gi->plate, *tk.plate});
    }
  }
  for (const auto& [aid, gi] : inst) {
    if (gi.violating && !claimed.count(aid)) {
      labels.push_back(eticket_label(
          StageLabel{StageOutcome::fn, LpDetOutcome::absent, LpRecOutcome::absent}));
    }
  }
  r.eticket = eticket_prf(labels, false);
  r.eticket_hil = eticket_prf(labels, true);

  if (!plate_pairs.empty()) {
    double sum = 0.0;
    for (const PlatePair& p : plate_pairs) sum += cer(p.gt, p.pred);
    r.cer = sum / static_cast<double>(plate_pairs.size());
    r.plate_accuracy = plate_accuracy(plate_pairs);
  }
  return r;
}

std::vector<EvalReport> evaluate_many(const std::vector<EvalInput>& inputs,
                                      const EvalConfig& cfg) {
  std::vector<EvalReport> out(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
  const int n = static_cast<int>(inputs.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          evaluate_sequence(inputs[static_cast<std::size_t>(i)].gt,
                            inputs[static_cast<std::size_t>(i)].pred,
                            inputs[static_cast<std::size_t>(i)].dets, cfg);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

EvalReport aggregate_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate_reports: no reports");
  EvalReport a;
  const auto add_prf = [](Prf& acc, const Prf& p) {
    acc.precision += p.precision;
    acc.recall += p.recall;
    acc.f1 += p.f1;
  };
  for (const EvalReport& r : reports) {
    a.hota += r.hota;
    a.det_a += r.det_a;
    a.ass_a += r.ass_a;
    a.mota += r.mota;
    a.idf1 += r.idf1;
    a.assoc_score_pct += r.assoc_score_pct;
    add_prf(a.no_helmet, r.no_helmet);
    add_prf(a.triple, r.triple);
    add_prf(a.eticket, r.eticket);
    add_prf(a.eticket_hil, r.eticket_hil);
    a.cer += r.cer;
    a.plate_accuracy += r.plate_accuracy;
    a.counts.tp += r.counts.tp;
    a.counts.fp += r.counts.fp;
    a.counts.fn += r.counts.fn;
    a.counts.idsw += r.counts.idsw;
    a.counts.gt += r.counts.gt;
  }
  const double n = static_cast<double>(reports.size());
  const auto mean_prf = [n](Prf& p) {
    p.precision /= n;
    p.recall /= n;
    p.f1 /= n;
  };
  a.hota /= n;
  a.det_a /= n;
  a.ass_a /= n;
  a.mota /= n;
  a.idf1 /= n;
  a.assoc_score_pct /= n;
  mean_prf(a.no_helmet);
  mean_prf(a.triple);
  mean_prf(a.eticket);
  mean_prf(a.eticket_hil);
  a.cer /= n;
  a.plate_accuracy /= n;
  return a;
}

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["hota"] = r.hota;
  j["det_a"] = r.det_a;
  j["ass_a"] = r.ass_a;
  j["mota"] = r.mota;
  j["idf1"] = r.idf1;
  j["assoc_score_pct"] = r.assoc_score_pct;
  j["no_helmet"] = prf_to_json(r.no_helmet);
  j["triple"] = prf_to_json(r.triple);
  j["eticket"] = prf_to_json(r.eticket);
  j["eticket_hil"] = prf_to_json(r.eticket_hil);
  j["cer"] = r.cer;
  j["plate_accuracy"] = r.plate_accuracy;
  nlohmann::ordered_json c;
  c["tp"] = r.counts.tp;
  c["fp"] = r.counts.fp;
  c["fn"] = r.counts.fn;
  c["idsw"] = r.counts.idsw;
  c["gt"] = r.counts.gt;
  j["counts"] = std::move(c);
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  const char* what = "report";
  require_keys(j,
               {"hota", "det_a", "ass_a", "mota", "idf1", "assoc_score_pct", "no_helmet",
                "triple", "eticket", "eticket_hil", "cer", "plate_accuracy", "counts"},
               {}, what);
  EvalReport r;
  r.hota = number_field(j, "hota", what);
  r.det_a = number_field(j, "det_a", what);
  r.ass_a = number_field(j, "ass_a", what);
  r.mota = number_field(j, "mota", what);
  r.idf1 = number_field(j, "idf1", what);
  r.assoc_score_pct = number_field(j, "assoc_score_pct", what);
  r.no_helmet = prf_from_json(j.at("no_helmet"), "report.no_helmet");
  r.triple = prf_from_json(j.at("triple"), "report.triple");
  r.eticket = prf_from_json(j.at("eticket"), "report.eticket");
  r.eticket_hil = prf_from_json(j.at("eticket_hil"), "report.eticket_hil");
  r.cer = number_field(j, "cer", what);
  r.plate_accuracy = number_field(j, "plate_accuracy", what);
  const nlohmann::json& c = j.at("counts");
  require_keys(c, {"tp", "fp", "fn", "idsw", "gt"}, {}, "report.counts");
  r.counts.tp = int_field(c, "tp", "report.counts");
  r.counts.fp = int_field(c, "fp", "report.counts");
  r.counts.fn = int_field(c, "fn", "report.counts");
  r.counts.idsw = int_field(c, "idsw", "report.counts");
  r.counts.gt = int_field(c, "gt", "report.counts");
  return r;
}

nlohmann::ordered_json suite_report_to_json(
    const std::vector<std::pair<std::string, EvalReport>>& scenarios) {
  if (scenarios.empty()) throw std::invalid_argument("suite_report_to_json: no scenarios");
  nlohmann::ordered_json j;
  nlohmann::ordered_json sect;
  std::vector<EvalReport> all;
  for (const auto& [name, rep] : scenarios) {
    sect[name] = report_to_json(rep);
    all.push_back(rep);
  }
  j["scenarios"] = std::move(sect);
  j["aggregate"] = report_to_json(aggregate_reports(all));
  return j;
}

}  // namespace rmtrack
