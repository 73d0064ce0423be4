#include "rmtrack/tracker.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include "rmtrack/assoc.hpp"
#include "rmtrack/errors.hpp"
#include "rmtrack/joint_solver.hpp"

namespace rmtrack {

namespace {

double vec_norm(const std::vector<double>& v) {
  double n2 = 0.0;
  for (const double x : v) n2 += x * x;
  return std::sqrt(n2);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: embedding dimensions differ");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double na = vec_norm(a);
  const double nb = vec_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

std::vector<double> normalized(std::vector<double> v) {
  const double n = vec_norm(v);
  if (n > 0.0)
    for (double& x : v) x /= n;
  return v;
}

}  // namespace

double buffered_assoc_score(const std::vector<std::optional<MaskSnapshot>>& rider,
                            const std::vector<std::optional<MaskSnapshot>>& moto,
                            double theta) {
  if (rider.size() != moto.size())
    throw std::invalid_argument("buffered_assoc_score: history lengths differ");
  double sum = 0.0;
  for (std::size_t t = 0; t < rider.size(); ++t) {
    if (!rider[t] || !moto[t]) continue;
    sum += cross_mask_score(rider[t]->seg, rider[t]->cross, rider[t]->bbox,
                            moto[t]->seg, moto[t]->cross);
  }
  return sum - theta;
}

double hypothesis_score(double iou, const std::optional<std::vector<double>>& track_emb,
                        const std::optional<std::vector<double>>& det_emb,
                        const TrackerConfig& cfg) {
  double app = 0.0;
  if (track_emb && det_emb) app = cosine(*track_emb, *det_emb);
  return cfg.w_iou * iou + cfg.w_app * app;
}

Tracker::Tracker(const TrackerConfig& cfg) : cfg_(cfg) {
  if (cfg_.k_buffer < 0 || cfg_.max_age < 0 || cfg_.min_hits < 1 || cfg_.solver_cap < 1)
    throw std::invalid_argument("Tracker: invalid configuration");
}

std::vector<TrackRow> Tracker::step(int frame, const std::vector<SacDetection>& dets) {
  if (started_ && frame != last_frame_ + 1)
    throw FrameMismatchError("tracker: expected frame " + std::to_string(last_frame_ + 1) +
                             ", got " + std::to_string(frame));
  started_ = true;
  last_frame_ = frame;
  ++frames_;

  GridSpec grid;
  for (const SacDetection& d : dets) {
    if (d.frame != frame)
      throw FrameMismatchError("tracker: detection carries frame " +
                               std::to_string(d.frame) + " in step for frame " +
                               std::to_string(frame));
    if (!grid.valid())
      grid = d.seg_mask.grid();
    else if (!(d.seg_mask.grid() == grid))
      throw SchemaError("tracker: detections mix mask grids within a frame");
  }

  for (Track& t : tracks_) t.kf = kf_predict(t.kf, cfg_.kf);

  // Per-class track and detection index lists, in stable storage order.
  std::vector<int> trk_of_cls[2];
  std::vector<int> det_of_cls[2];
  for (int ti = 0; ti < static_cast<int>(tracks_.size()); ++ti)
    trk_of_cls[tracks_[ti].cls == ObjClass::motorcycle].push_back(ti);
  for (int di = 0; di < static_cast<int>(dets.size()); ++di)
    det_of_cls[dets[di].cls == ObjClass::motorcycle].push_back(di);

  // Gated hypotheses. hyp.track / hyp.det are the global track index and the
  // global detection index, which is exactly what the solver's exclusivity
  // constraints need.
  JointProblem problem;
  problem.lambda1 = cfg_.lambda1;
  problem.lambda2 = cfg_.lambda2;
  problem.lambda3 = cfg_.lambda3;
  for (int c = 0; c < 2; ++c) {
    std::vector<Hypothesis>& out = c == 0 ? problem.riders : problem.motos;
    for (const int ti : trk_of_cls[c]) {
      const BBox pred = predicted_box(tracks_[ti].kf);
      for (const int di : det_of_cls[c]) {
        const double iou = iou_box(pred, dets[di].bbox);
        if (iou < cfg_.gate_iou) continue;
        out.push_back(Hypothesis{
            ti, di, hypothesis_score(iou, tracks_[ti].emb, dets[di].embedding, cfg_)});
      }
    }
  }

  // Association scores between hypothesis pairs. The buffered part depends
  // only on the two tracks and the current-frame part only on the two
  // detections, so each is computed once per pair and reused.
  const int n_r = static_cast<int>(problem.riders.size());
  const int n_m = static_cast<int>(problem.motos.size());
  problem.assoc.assign(static_cast<std::size_t>(n_r) * n_m, 0.0);
  problem.feasible.assign(static_cast<std::size_t>(n_r) * n_m, 1);

  // An association identity names one motorcycle instance, so at any moment
  // at most one live motorcycle track may hold it. Linking a rider to a
  // fresh motorcycle is only allowed once no live motorcycle carries the
  // rider's id; until then such edges are infeasible.
  std::set<int> live_moto_ids;
  for (const Track& t : tracks_)
    if (t.cls == ObjClass::motorcycle && t.assoc_id != -1)
      live_moto_ids.insert(t.assoc_id);

  std::map<std::pair<int, int>, double> past_memo;  // (rider track, moto track)
  std::map<std::pair<int, int>, double> cur_memo;   // (rider det, moto det)
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_m; ++j) {
      const Track& rt = tracks_[problem.riders[i].track];
      const Track& mt = tracks_[problem.motos[j].track];
      const std::size_t idx = static_cast<std::size_t>(i) * n_m + j;
      if (rt.assoc_id != -1 && mt.assoc_id != -1 && rt.assoc_id != mt.assoc_id) {
        problem.feasible[idx] = 0;
        continue;
      }
      if (rt.assoc_id != -1 && mt.assoc_id == -1 &&
          live_moto_ids.count(rt.assoc_id)) {
        problem.feasible[idx] = 0;
        continue;
      }
      if (cfg_.lambda3 == 0.0) continue;  // scores never read

      double past = 0.0;
      const auto pk = std::make_pair(problem.riders[i].track, problem.motos[j].track);
      if (const auto it = past_memo.find(pk); it != past_memo.end()) {
        past = it->second;
      } else {
        // Buffers are appended once per step for every live track, so
        // aligning from the most recent entry aligns frames.
        for (int o = 1; o <= cfg_.k_buffer; ++o) {
          if (o > static_cast<int>(rt.buffer.size()) ||
              o > static_cast<int>(mt.buffer.size()))
            break;
          const BufferEntry& re = rt.buffer[rt.buffer.size() - o];
          const BufferEntry& me = mt.buffer[mt.buffer.size() - o];
          if (!re.present || !me.present) continue;
          past += cross_mask_score(re.snap.seg, re.snap.cross, re.snap.bbox,
                                   me.snap.seg, me.snap.cross);
        }
        past_memo.emplace(pk, past);
      }

      double cur = 0.0;
      const auto ck = std::make_pair(problem.riders[i].det, problem.motos[j].det);
      if (const auto it = cur_memo.find(ck); it != cur_memo.end()) {
        cur = it->second;
      } else {
        const SacDetection& rd = dets[problem.riders[i].det];
        const SacDetection& md = dets[problem.motos[j].det];
        cur = cross_mask_score(rd.seg_mask, rd.cross_mask, rd.bbox, md.seg_mask,
                               md.cross_mask);
        cur_memo.emplace(ck, cur);
      }
      problem.assoc[idx] = past + cur - cfg_.theta;
    }
  }

  const JointSolution sol = solve_joint(problem, cfg_.solver_cap);

  // Matched pairs: update motion, appearance, and lifecycle counters.
  std::vector<int> match_of_track(tracks_.size(), -1);
  std::vector<char> det_taken(dets.size(), 0);
  for (int c = 0; c < 2; ++c) {
    const std::vector<Hypothesis>& hyps = c == 0 ? problem.riders : problem.motos;
    const std::vector<char>& take = c == 0 ? sol.t_r : sol.t_m;
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      if (!take[h]) continue;
      Track& t = tracks_[hyps[h].track];
      const SacDetection& d = dets[hyps[h].det];
      match_of_track[hyps[h].track] = hyps[h].det;
      det_taken[hyps[h].det] = 1;
      t.kf = kf_update(t.kf, d.bbox, cfg_.kf);
      ++t.hits;
      t.misses = 0;
      if (t.hits >= cfg_.min_hits) t.confirmed = true;
      if (d.embedding) {
        if (t.emb) {
          std::vector<double> mixed = *t.emb;
          const std::vector<double> fresh = normalized(*d.embedding);
          for (std::size_t x = 0; x < mixed.size() && x < fresh.size(); ++x)
            mixed[x] = cfg_.emb_alpha * mixed[x] + (1.0 - cfg_.emb_alpha) * fresh[x];
          t.emb = normalized(std::move(mixed));
        } else {
          t.emb = normalized(*d.embedding);
        }
      }
    }
  }

  // Association identities propagate along selected cross edges. Both sides
  // already sharing an id is a no-op; conflicting ids cannot be selected
  // because such pairs are marked infeasible above. The live-holder set is
  // kept current so two edges selected in the same step cannot hand one id
  // to two motorcycles.
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_m; ++j) {
      if (!sol.e[static_cast<std::size_t>(i) * n_m + j]) continue;
      Track& rt = tracks_[problem.riders[i].track];
      Track& mt = tracks_[problem.motos[j].track];
      if (rt.assoc_id == -1 && mt.assoc_id == -1) {
        rt.assoc_id = mt.assoc_id = next_assoc_id_++;
        live_moto_ids.insert(mt.assoc_id);
      } else if (rt.assoc_id == -1) {
        rt.assoc_id = mt.assoc_id;
      } else if (mt.assoc_id == -1) {
        if (live_moto_ids.insert(rt.assoc_id).second) mt.assoc_id = rt.assoc_id;
      }
    }
  }

  for (std::size_t ti = 0; ti < tracks_.size(); ++ti)
    if (match_of_track[ti] < 0) ++tracks_[ti].misses;

  // Unmatched detections seed new tracks, in stream order.
  for (int di = 0; di < static_cast<int>(dets.size()); ++di) {
    if (det_taken[di]) continue;
    Track t;
    t.track_id = next_track_id_++;
    t.cls = dets[di].cls;
    t.kf = kf_init(dets[di].bbox, cfg_.kf);
    if (dets[di].embedding) t.emb = normalized(*dets[di].embedding);
    t.hits = 1;
    t.confirmed = t.hits >= cfg_.min_hits;
    tracks_.push_back(std::move(t));
    match_of_track.push_back(di);
  }

  // Every live track gains one buffer slot per step; only matched tracks
  // contribute evidence to it.
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    Track& t = tracks_[ti];
    BufferEntry e;
    if (match_of_track[ti] >= 0) {
      const SacDetection& d = dets[match_of_track[ti]];
      e.present = true;
      e.snap = MaskSnapshot{d.seg_mask, d.cross_mask, d.bbox};
    }
    t.buffer.push_back(std::move(e));
    while (static_cast<int>(t.buffer.size()) > cfg_.k_buffer) t.buffer.pop_front();
  }

  std::vector<TrackRow> rows;
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    const Track& t = tracks_[ti];
    if (!t.confirmed || match_of_track[ti] < 0) continue;
    const SacDetection& d = dets[match_of_track[ti]];
    rows.push_back(TrackRow{frame, t.track_id, t.cls, t.assoc_id, d.bbox.x, d.bbox.y,
                            d.bbox.w, d.bbox.h, d.confidence});
  }

  std::erase_if(tracks_, [this](const Track& t) { return t.misses > cfg_.max_age; });
  return rows;
}

namespace {

// Groups a frame-sorted stream; throws on regressions in frame order.
std::map<int, std::vector<SacDetection>> group_by_frame(
    const std::vector<SacDetection>& stream) {
  std::map<int, std::vector<SacDetection>> frames;
  int prev = 0;
  bool any = false;
  for (const SacDetection& d : stream) {
    if (any && d.frame < prev)
      throw FrameMismatchError("detection stream not sorted by frame: " +
                               std::to_string(d.frame) + " after " +
                               std::to_string(prev));
    prev = d.frame;
    any = true;
    frames[d.frame].push_back(d);
  }
  return frames;
}

}  // namespace

std::vector<TrackRow> run_tracker(const std::vector<SacDetection>& stream,
                                  const TrackerConfig& cfg) {
  const auto frames = group_by_frame(stream);
  std::vector<TrackRow> rows;
  if (frames.empty()) return rows;
  Tracker tracker(cfg);
  const int first = frames.begin()->first;
  const int last = frames.rbegin()->first;
  static const std::vector<SacDetection> kNone;
  for (int f = first; f <= last; ++f) {
    const auto it = frames.find(f);
    const std::vector<TrackRow> step_rows =
        tracker.step(f, it == frames.end() ? kNone : it->second);
    rows.insert(rows.end(), step_rows.begin(), step_rows.end());
  }
  // Association ids are immutable once minted, so the id a track carries in
  // its last associated row is the one id it ever held; apply it to the rows
  // emitted before the link formed. A motorcycle row is only filled in where
  // the id is not already held by another motorcycle in that frame — an id
  // that moved to a new track after its first holder died must not cover two
  // motorcycles at once.
  std::map<int, int> minted;
  std::set<std::pair<int, int>> moto_taken;  // (frame, assoc id)
  for (const TrackRow& r : rows) {
    if (r.assoc_id == -1) continue;
    minted[r.track_id] = r.assoc_id;
    if (r.cls == ObjClass::motorcycle) moto_taken.emplace(r.frame, r.assoc_id);
  }
  for (TrackRow& r : rows) {
    if (r.assoc_id != -1) continue;
    const auto it = minted.find(r.track_id);
    if (it == minted.end()) continue;
    if (r.cls == ObjClass::motorcycle &&
        !moto_taken.emplace(r.frame, it->second).second)
      continue;
    r.assoc_id = it->second;
  }
  return rows;
}

std::vector<TrackRow> run_independent_baseline(const std::vector<SacDetection>& stream,
                                               const TrackerConfig& cfg,
                                               double tau_assoc, int rider_cap) {
  TrackerConfig indep = cfg;
  indep.lambda3 = 0.0;
  const auto frames = group_by_frame(stream);
  std::vector<TrackRow> rows;
  if (frames.empty()) return rows;

  Tracker tracker(indep);
  const int first = frames.begin()->first;
  const int last = frames.rbegin()->first;
  static const std::vector<SacDetection> kNone;
  // Pair co-occurrence counts between rider and motorcycle track ids, built
  // by running instance formation on each frame's reported boxes.
  std::map<std::pair<int, int>, int> pair_frames;
  for (int f = first; f <= last; ++f) {
    const auto it = frames.find(f);
    const std::vector<SacDetection>& dets = it == frames.end() ? kNone : it->second;
    const std::vector<TrackRow> step_rows = tracker.step(f, dets);
    rows.insert(rows.end(), step_rows.begin(), step_rows.end());

    // Recover each reported row's detection by bbox identity; the tracker
    // emits matched detection boxes verbatim.
    std::vector<SacDetection> r_dets;
    std::vector<int> r_ids;
    std::vector<SacDetection> m_dets;
    std::vector<int> m_ids;
    for (const TrackRow& row : step_rows) {
      for (const SacDetection& d : dets) {
        if (d.cls != row.cls || d.bbox.x != row.x || d.bbox.y != row.y ||
            d.bbox.w != row.w || d.bbox.h != row.h)
          continue;
        if (row.cls == ObjClass::rider) {
          r_dets.push_back(d);
          r_ids.push_back(row.track_id);
        } else {
          m_dets.push_back(d);
          m_ids.push_back(row.track_id);
        }
        break;
      }
    }
    const InstancePartition part = form_instances(r_dets, m_dets, tau_assoc, rider_cap);
    for (const RMInstance& inst : part.instances)
      for (const int rk : inst.riders)
        ++pair_frames[{r_ids[rk], m_ids[inst.motorcycle]}];
  }

  // Majority vote: each rider track adopts its most frequent motorcycle
  // partner (ties: smaller motorcycle track id, via map iteration order).
  std::map<int, std::pair<int, int>> best_of_rider;  // rider -> (count, moto)
  for (const auto& [pair, count] : pair_frames) {
    auto& best = best_of_rider[pair.first];
    if (count > best.first) best = {count, pair.second};
  }
  std::map<int, int> assoc_of_track;
  int next_assoc = 1;
  for (const auto& [rider, best] : best_of_rider) {
    if (!assoc_of_track.count(best.second)) assoc_of_track[best.second] = next_assoc++;
    assoc_of_track[rider] = assoc_of_track[best.second];
  }
  for (TrackRow& row : rows) {
    const auto it = assoc_of_track.find(row.track_id);
    row.assoc_id = it == assoc_of_track.end() ? -1 : it->second;
  }
  return rows;
}

}  // namespace rmtrack
