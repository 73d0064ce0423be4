#include "rmtrack/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "rmtrack/errors.hpp"
#include "rmtrack/rng.hpp"

namespace rmtrack {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Stream purpose tags for the counter RNG.
constexpr std::uint64_t kSpawn = 1;
constexpr std::uint64_t kEntity = 2;
constexpr std::uint64_t kOccluder = 3;
constexpr std::uint64_t kNoise = 4;
constexpr std::uint64_t kFp = 5;

// Plate legibility model: per-character corruption scales with the
// reference height over the observed box height; below the minimum height
// or nearly full occlusion the plate reads as the invisible marker "#".
constexpr double kPlateRefHeight = 40.0;
constexpr double kPlateMinHeight = 8.0;
constexpr double kPlateOccludedCut = 0.9;

constexpr double kTau = 6.283185307179586476925286766559;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_prob(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw SchemaError(std::string("scenario: ") + name + " outside [0,1]");
}

void check_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw SchemaError(std::string("scenario: ") + name + " negative or non-finite");
}

struct Instance {
  int idx = 0;  // assoc_gt_id
  int spawn_frame = 0;
  int n_riders = 1;
  int moto_gt_id = 0;
  std::vector<int> rider_gt_ids;
  std::vector<HelmetLabel> rider_helmets;
  std::string plate;
  double x0 = 0.0, y0 = 0.0;
  double speed = 1.0;
  int dir = 1;  // +1 moves down the image, -1 up
  double w = 16.0, h = 30.0;
  double phase = 0.0;
  bool alive = true;
};

struct Occluder {
  double x0 = 0.0, y = 0.0, speed = 1.0;
};

BBox instance_box(const Instance& e, const MotionSpec& mo, int frame) {
  const double t = frame - e.spawn_frame;
  const double x = e.x0 + mo.ego_drift * t + mo.curvature * std::sin(kTau * t / 40.0 + e.phase);
  const double y = e.y0 + e.dir * e.speed * t;
  return BBox{x, y, e.w, e.h};
}

BBox moto_band(const BBox& inst) {
  return BBox{inst.x, inst.y + 0.45 * inst.h, inst.w, 0.55 * inst.h};
}

BBox rider_band(const BBox& inst, int i, int n) {
  const double slice = inst.w / n;
  return BBox{inst.x + i * slice, inst.y, slice, 0.45 * inst.h};
}

double overlap_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return iw > 0.0 && ih > 0.0 ? iw * ih : 0.0;
}

CountLabel count_of(int riders) {
  switch (riders) {
    case 0: return CountLabel::none;
    case 1: return CountLabel::single;
    case 2: return CountLabel::double_;
    default: return CountLabel::triple;
  }
}

std::string expand_template(const std::string& tpl, const CounterRng& rng,
                            std::uint64_t stream, std::uint64_t counter0) {
  std::string out = tpl;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == 'D')
      out[i] = static_cast<char>('0' + rng.pick(stream, counter0 + i, 10));
    else if (out[i] == 'L')
      out[i] = static_cast<char>('A' + rng.pick(stream, counter0 + i, 26));
  }
  return out;
}

HelmetLabel flip_helmet(HelmetLabel cur, std::uint64_t choice) {
  const HelmetLabel all[3] = {HelmetLabel::helmet, HelmetLabel::no_helmet,
                              HelmetLabel::unknown};
  std::vector<HelmetLabel> others;
  for (const HelmetLabel h : all)
    if (h != cur) others.push_back(h);
  return others[choice % others.size()];
}

CountLabel flip_count(CountLabel cur, std::uint64_t choice) {
  const CountLabel all[4] = {CountLabel::none, CountLabel::single,
                             CountLabel::double_, CountLabel::triple};
  std::vector<CountLabel> others;
  for (const CountLabel c : all)
    if (c != cur) others.push_back(c);
  return others[choice % others.size()];
}

BinaryMask corrupt_mask(const BinaryMask& m, const NoiseSpec& noise,
                        const CounterRng& rng, std::uint64_t stream,
                        std::uint64_t c_dilate, std::uint64_t c_erode) {
  BinaryMask out = m;
  const int d = noise.mask_dilate > 0
                    ? static_cast<int>(rng.pick(stream, c_dilate, noise.mask_dilate + 1))
                    : 0;
  const int e = noise.mask_erode > 0
                    ? static_cast<int>(rng.pick(stream, c_erode, noise.mask_erode + 1))
                    : 0;
  if (d > 0) out = mask_dilate(out, d);
  if (e > 0) out = mask_erode(out, e);
  return out;
}

}  // namespace

void validate_scenario(const Scenario& sc) {
  if (sc.name.empty()) throw SchemaError("scenario: empty name");
  if (sc.n_frames < 1) throw SchemaError("scenario: n_frames < 1");
  if (!(sc.image_w > 0.0) || !(sc.image_h > 0.0))
    throw SchemaError("scenario: non-positive image dimensions");
  if (!sc.grid.valid()) throw SchemaError("scenario: invalid grid");
  check_prob(sc.spawn.rate, "spawn.rate");
  if (sc.spawn.initial < 0) throw SchemaError("scenario: spawn.initial negative");
  if (sc.spawn.max_active < 1) throw SchemaError("scenario: spawn.max_active < 1");
  double sum = 0.0;
  for (const double p : sc.spawn.rider_count_probs) {
    check_prob(p, "spawn.rider_count_probs entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw SchemaError("scenario: rider_count_probs do not sum to 1");
  check_prob(sc.spawn.helmet_prob, "spawn.helmet_prob");
  if (sc.spawn.plate_templates.empty())
    throw SchemaError("scenario: empty plate_templates");
  for (const std::string& t : sc.spawn.plate_templates)
    if (t.empty()) throw SchemaError("scenario: empty plate template");
  check_nonneg(sc.motion.speed_min, "motion.speed_min");
  if (!(sc.motion.speed_max >= sc.motion.speed_min))
    throw SchemaError("scenario: motion.speed_max < speed_min");
  check_nonneg(sc.motion.curvature, "motion.curvature");
  if (!std::isfinite(sc.motion.ego_drift))
    throw SchemaError("scenario: motion.ego_drift non-finite");
  check_prob(sc.motion.opposite_prob, "motion.opposite_prob");
  if (sc.occluders.count < 0) throw SchemaError("scenario: occluders.count negative");
  if (sc.occluders.count > 0 && (!(sc.occluders.w > 0.0) || !(sc.occluders.h > 0.0)))
    throw SchemaError("scenario: non-positive occluder size");
  if (!std::isfinite(sc.occluders.speed))
    throw SchemaError("scenario: occluders.speed non-finite");
  check_prob(sc.noise.miss_prob, "noise.miss_prob");
  check_nonneg(sc.noise.occ_miss_multiplier, "noise.occ_miss_multiplier");
  check_nonneg(sc.noise.box_jitter_sigma, "noise.box_jitter_sigma");
  check_nonneg(sc.noise.fp_rate, "noise.fp_rate");
  if (sc.noise.mask_erode < 0 || sc.noise.mask_dilate < 0)
    throw SchemaError("scenario: negative mask corruption rounds");
  check_prob(sc.noise.label_flip_prob, "noise.label_flip_prob");
  check_prob(sc.noise.plate_char_corrupt, "noise.plate_char_corrupt");
}

SimOutput generate(const Scenario& sc) {
  validate_scenario(sc);
  const CounterRng rng(sc.seed);
  SimOutput out;

  std::vector<Occluder> occluders;
  for (int k = 0; k < sc.occluders.count; ++k) {
    const std::uint64_t s = CounterRng::stream_of(kOccluder, k);
    Occluder o;
    o.x0 = rng.uniform(s, 0) * (sc.image_w + sc.occluders.w);
    o.y = rng.uniform(s, 1) * (sc.image_h - sc.occluders.h);
    o.speed = sc.occluders.speed * (rng.pick(s, 2, 2) == 0 ? 1.0 : -1.0);
    occluders.push_back(o);
  }

  std::vector<Instance> instances;
  int next_gt_id = 1;
  int next_inst = 1;
  std::map<int, GtTrack> tracks;

  const auto spawn_instance = [&](int frame, bool inside) {
    const std::uint64_t s = CounterRng::stream_of(kEntity, next_inst);
    Instance e;
    e.idx = next_inst++;
    e.spawn_frame = frame;
    const double cu = rng.uniform(s, 0);
    e.n_riders = cu < sc.spawn.rider_count_probs[0]                               ? 1
                 : cu < sc.spawn.rider_count_probs[0] + sc.spawn.rider_count_probs[1] ? 2
                                                                                      : 3;
    e.w = 14.0 + rng.uniform(s, 1) * 6.0 + 3.0 * (e.n_riders - 1);
    e.h = 26.0 + rng.uniform(s, 2) * 8.0;
    e.speed = sc.motion.speed_min +
              rng.uniform(s, 3) * (sc.motion.speed_max - sc.motion.speed_min);
    e.dir = rng.uniform(s, 4) < sc.motion.opposite_prob ? -1 : 1;
    e.x0 = rng.uniform(s, 5) * std::max(1.0, sc.image_w - e.w);
    if (inside)
      e.y0 = rng.uniform(s, 6) * std::max(1.0, sc.image_h - e.h);
    else
      e.y0 = e.dir > 0 ? -e.h - rng.uniform(s, 6) * 8.0
                       : sc.image_h + rng.uniform(s, 6) * 8.0;
    e.phase = rng.uniform(s, 7) * kTau;
    const std::size_t tpl =
        rng.pick(s, 8, sc.spawn.plate_templates.size());
    e.plate = expand_template(sc.spawn.plate_templates[tpl], rng, s, 40);
    for (int r = 0; r < e.n_riders; ++r) {
      e.rider_helmets.push_back(rng.uniform(s, 9 + r) < sc.spawn.helmet_prob
                                    ? HelmetLabel::helmet
                                    : HelmetLabel::no_helmet);
      e.rider_gt_ids.push_back(next_gt_id++);
    }
    e.moto_gt_id = next_gt_id++;
    instances.push_back(std::move(e));
  };

  int next_det_id = 0;
  for (int frame = 0; frame < sc.n_frames; ++frame) {
    // Spawning: a fixed number inside the image at frame 0, then a
    // per-frame Bernoulli entry from the edges while below capacity.
    if (frame == 0)
      for (int k = 0; k < std::min(sc.spawn.initial, sc.spawn.max_active); ++k)
        spawn_instance(0, true);
    int active = 0;
    for (const Instance& e : instances) active += e.alive ? 1 : 0;
    if (active < sc.spawn.max_active &&
        rng.uniform(CounterRng::stream_of(kSpawn, frame), 0) < sc.spawn.rate)
      spawn_instance(frame, false);

    GtFrame gtf;
    gtf.frame = frame;
    std::vector<SacDetection> frame_dets;

    for (Instance& e : instances) {
      if (!e.alive) continue;
      const BBox inst = instance_box(e, sc.motion, frame);
      const bool gone_y = e.dir > 0 ? inst.y > sc.image_h + e.h : inst.y + inst.h < -e.h;
      const bool gone_x = inst.x > sc.image_w + e.w || inst.x + inst.w < -e.w;
      if (gone_y || gone_x) {
        e.alive = false;
        continue;
      }

      const BBox mb = moto_band(inst);
      const BinaryMask moto_seg = rasterize_box(mb, sc.grid);
      std::vector<BBox> rider_boxes;
      std::vector<BinaryMask> rider_segs;
      BinaryMask rider_union(sc.grid);
      bool clipped = moto_seg.empty();
      for (int r = 0; r < e.n_riders; ++r) {
        rider_boxes.push_back(rider_band(inst, r, e.n_riders));
        rider_segs.push_back(rasterize_box(rider_boxes.back(), sc.grid));
        clipped = clipped || rider_segs.back().empty();
        rider_union = mask_union(rider_union, rider_segs.back());
      }
      // An instance only counts while every member rasterizes to a
      // nonempty mask; partially entered or leaving instances are skipped
      // so that GT mask pairs always score a perfect association.
      if (clipped) continue;

      const auto occ_of = [&](const BBox& b) {
        if (b.area() <= 0.0) return 0.0;
        double covered = 0.0;
        for (const Occluder& o : occluders) {
          const double period = sc.image_w + sc.occluders.w;
          double x = std::fmod(o.x0 + o.speed * frame, period);
          if (x < 0.0) x += period;
          x -= sc.occluders.w;
          covered += overlap_area(b, BBox{x, o.y, sc.occluders.w, sc.occluders.h});
        }
        return clamp01(covered / b.area());
      };

      // Ground truth rows: riders in slice order, then the motorcycle.
      std::vector<GtObject> members;
      for (int r = 0; r < e.n_riders; ++r) {
        GtObject g;
        g.gt_id = e.rider_gt_ids[r];
        g.cls = ObjClass::rider;
        g.bbox = rider_boxes[r];
        g.assoc_gt_id = e.idx;
        g.helmet = e.rider_helmets[r];
        g.occluded_fraction = occ_of(rider_boxes[r]);
        members.push_back(std::move(g));
      }
      {
        GtObject g;
        g.gt_id = e.moto_gt_id;
        g.cls = ObjClass::motorcycle;
        g.bbox = mb;
        g.assoc_gt_id = e.idx;
        g.count = count_of(e.n_riders);
        g.plate = e.plate;
        g.occluded_fraction = occ_of(mb);
        members.push_back(std::move(g));
      }

      for (std::size_t mi = 0; mi < members.size(); ++mi) {
        GtObject& g = members[mi];
        // Track summary bookkeeping.
        auto [it, fresh] = tracks.try_emplace(g.gt_id);
        GtTrack& tk = it->second;
        if (fresh) {
          tk.gt_id = g.gt_id;
          tk.cls = g.cls;
          tk.assoc_gt_id = g.assoc_gt_id;
          tk.first_frame = frame;
          tk.helmet = g.helmet;
          tk.triple = e.n_riders >= 3;
          tk.plate = g.plate;
        }
        tk.last_frame = frame;

        gtf.objects.push_back(g);

        // Detection: drop, then corrupt survivors.
        const std::uint64_t ns = CounterRng::stream_of(kNoise, frame, g.gt_id);
        const double p_miss = clamp01(sc.noise.miss_prob +
                                      sc.noise.occ_miss_multiplier * g.occluded_fraction);
        if (rng.uniform(ns, 0) < p_miss) continue;

        SacDetection d;
        d.frame = frame;
        d.cls = g.cls;
        d.bbox = g.bbox;
        if (sc.noise.box_jitter_sigma > 0.0) {
          const double s = sc.noise.box_jitter_sigma;
          d.bbox.x += s * rng.normal(ns, 10);
          d.bbox.y += s * rng.normal(ns, 11);
          d.bbox.w = std::max(0.5, d.bbox.w + s * rng.normal(ns, 12));
          d.bbox.h = std::max(0.5, d.bbox.h + s * rng.normal(ns, 13));
        }
        const bool is_moto = g.cls == ObjClass::motorcycle;
        const BinaryMask& seg_gt = is_moto ? moto_seg : rider_segs[mi];
        const BinaryMask& cross_gt = is_moto ? rider_union : moto_seg;
        d.seg_mask = corrupt_mask(seg_gt, sc.noise, rng, ns, 3, 4);
        d.cross_mask = corrupt_mask(cross_gt, sc.noise, rng, ns, 5, 6);
        d.confidence = std::clamp(1.0 - 0.3 * g.occluded_fraction, 0.05, 1.0);

        const bool flip = sc.noise.label_flip_prob > 0.0 &&
                          rng.uniform(ns, 1) < sc.noise.label_flip_prob;
        if (is_moto) {
          CountLabel label = count_of(e.n_riders);
          if (flip) label = flip_count(label, rng.pick(ns, 2, 3));
          d.attrs.count = label;
          // Plate read with height- and occlusion-driven degradation.
          PlateRead read;
          const double p_char = clamp01(sc.noise.plate_char_corrupt * kPlateRefHeight /
                                        std::max(d.bbox.h, 1.0));
          if (d.bbox.h < kPlateMinHeight || g.occluded_fraction >= kPlateOccludedCut) {
            read.text = "#";
            read.confidence = 0.05;
          } else {
            read.text = e.plate;
            for (std::size_t ci = 0; ci < read.text.size(); ++ci)
              if (p_char > 0.0 && rng.uniform(ns, 40 + ci) < p_char) read.text[ci] = '.';
            read.confidence = std::clamp(1.0 - p_char, 0.05, 1.0);
          }
          d.attrs.plate = read;
        } else {
          HelmetLabel label = e.rider_helmets[mi];
          if (flip) label = flip_helmet(label, rng.pick(ns, 2, 2));
          d.attrs.helmet = label;
        }
        frame_dets.push_back(std::move(d));
      }
    }

    // False positives: expected count = fp_rate, emitted after true ones.
    const std::uint64_t fs = CounterRng::stream_of(kFp, frame);
    int n_fp = static_cast<int>(sc.noise.fp_rate);
    if (rng.uniform(fs, 0) < sc.noise.fp_rate - n_fp) ++n_fp;
    for (int k = 0; k < n_fp; ++k) {
      const std::uint64_t s = CounterRng::stream_of(kFp, frame, k + 1);
      SacDetection d;
      d.frame = frame;
      d.cls = rng.pick(s, 0, 2) == 0 ? ObjClass::rider : ObjClass::motorcycle;
      const double w = 8.0 + rng.uniform(s, 1) * 16.0;
      const double h = 8.0 + rng.uniform(s, 2) * 16.0;
      d.bbox = BBox{rng.uniform(s, 3) * (sc.image_w - w),
                    rng.uniform(s, 4) * (sc.image_h - h), w, h};
      d.seg_mask = rasterize_box(d.bbox, sc.grid);
      const double ox = (rng.uniform(s, 5) - 0.5) * 24.0;
      const double oy = (rng.uniform(s, 6) - 0.5) * 24.0;
      d.cross_mask =
          rasterize_box(BBox{d.bbox.x + ox, d.bbox.y + oy, w, h}, sc.grid);
      d.confidence = 0.3 + 0.4 * rng.uniform(s, 7);
      if (d.cls == ObjClass::rider)
        d.attrs.helmet = static_cast<HelmetLabel>(rng.pick(s, 8, 3));
      else
        d.attrs.count = static_cast<CountLabel>(rng.pick(s, 8, 4));
      frame_dets.push_back(std::move(d));
    }

    for (SacDetection& d : frame_dets) {
      d.det_id = next_det_id++;
      out.detections.push_back(std::move(d));
    }
    out.gt.frames.push_back(std::move(gtf));
  }

  for (auto& [id, tk] : tracks) out.gt.tracks.push_back(tk);
  return out;
}

std::vector<Scenario> preset_suite() {
  std::vector<Scenario> suite;

  {
    Scenario sc;
    sc.name = "noiseless";
    sc.seed = 11;
    sc.n_frames = 60;
    sc.spawn.rate = 0.10;
    sc.spawn.initial = 3;
    sc.spawn.rider_count_probs = {0.4, 0.3, 0.3};
    sc.spawn.helmet_prob = 0.6;
    sc.motion.curvature = 1.5;
    suite.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "dense_traffic";
    sc.seed = 22;
    sc.n_frames = 80;
    sc.spawn.rate = 0.35;
    sc.spawn.initial = 5;
    sc.spawn.max_active = 16;
    sc.motion.curvature = 2.0;
    sc.noise.miss_prob = 0.05;
    sc.noise.box_jitter_sigma = 0.3;
    sc.noise.fp_rate = 0.1;
    sc.noise.label_flip_prob = 0.02;
    sc.noise.plate_char_corrupt = 0.05;
    suite.push_back(sc);
  }
  for (int k = 0; k < 5; ++k) {
    Scenario sc;
    sc.name = "occlusion_heavy_" + std::to_string(k + 1);
    sc.seed = 101 + k;
    sc.n_frames = 70;
    sc.spawn.rate = 0.2;
    sc.spawn.initial = 4;
    sc.spawn.rider_count_probs = {0.5, 0.3, 0.2};
    sc.motion.curvature = 2.5;
    sc.occluders.count = 3;
    sc.occluders.w = 30.0;
    sc.occluders.h = 70.0;
    sc.occluders.speed = 2.0;
    sc.noise.miss_prob = 0.05;
    sc.noise.occ_miss_multiplier = 0.7;
    sc.noise.box_jitter_sigma = 0.4;
    sc.noise.fp_rate = 0.05;
    sc.noise.mask_dilate = 1;
    sc.noise.mask_erode = 1;
    sc.noise.label_flip_prob = 0.03;
    sc.noise.plate_char_corrupt = 0.1;
    suite.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "low_visibility";
    sc.seed = 33;
    sc.n_frames = 70;
    sc.spawn.rate = 0.2;
    sc.spawn.initial = 3;
    sc.noise.miss_prob = 0.15;
    sc.noise.box_jitter_sigma = 0.8;
    sc.noise.fp_rate = 0.3;
    sc.noise.mask_erode = 2;
    sc.noise.mask_dilate = 1;
    sc.noise.label_flip_prob = 0.08;
    sc.noise.plate_char_corrupt = 0.3;
    suite.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "opposite_lane";
    sc.seed = 44;
    sc.n_frames = 70;
    sc.spawn.rate = 0.25;
    sc.spawn.initial = 3;
    sc.motion.speed_min = 2.0;
    sc.motion.speed_max = 3.5;
    sc.motion.opposite_prob = 0.5;
    sc.motion.ego_drift = 0.3;
    sc.noise.miss_prob = 0.05;
    sc.noise.box_jitter_sigma = 0.3;
    suite.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "triple_riding_mix";
    sc.seed = 55;
    sc.n_frames = 70;
    sc.spawn.rate = 0.2;
    sc.spawn.initial = 4;
    sc.spawn.rider_count_probs = {0.2, 0.3, 0.5};
    sc.spawn.helmet_prob = 0.4;
    sc.noise.miss_prob = 0.03;
    sc.noise.box_jitter_sigma = 0.2;
    sc.noise.label_flip_prob = 0.02;
    sc.noise.plate_char_corrupt = 0.05;
    suite.push_back(sc);
  }
  return suite;
}

nlohmann::ordered_json scenario_to_json(const Scenario& sc) {
  ordered_json j;
  j["name"] = sc.name;
  j["seed"] = sc.seed;
  j["n_frames"] = sc.n_frames;
  j["image_w"] = sc.image_w;
  j["image_h"] = sc.image_h;
  j["grid"] = {{"w", sc.grid.grid_w}, {"h", sc.grid.grid_h}, {"cell", sc.grid.cell_size}};
  j["spawn"] = {{"rate", sc.spawn.rate},
                {"initial", sc.spawn.initial},
                {"max_active", sc.spawn.max_active},
                {"rider_count_probs", sc.spawn.rider_count_probs},
                {"helmet_prob", sc.spawn.helmet_prob},
                {"plate_templates", sc.spawn.plate_templates}};
  j["motion"] = {{"speed_min", sc.motion.speed_min},
                 {"speed_max", sc.motion.speed_max},
                 {"curvature", sc.motion.curvature},
                 {"ego_drift", sc.motion.ego_drift},
                 {"opposite_prob", sc.motion.opposite_prob}};
  j["occluders"] = {{"count", sc.occluders.count},
                    {"w", sc.occluders.w},
                    {"h", sc.occluders.h},
                    {"speed", sc.occluders.speed}};
  j["noise"] = {{"miss_prob", sc.noise.miss_prob},
                {"occ_miss_multiplier", sc.noise.occ_miss_multiplier},
                {"box_jitter_sigma", sc.noise.box_jitter_sigma},
                {"fp_rate", sc.noise.fp_rate},
                {"mask_erode", sc.noise.mask_erode},
                {"mask_dilate", sc.noise.mask_dilate},
                {"label_flip_prob", sc.noise.label_flip_prob},
                {"plate_char_corrupt", sc.noise.plate_char_corrupt}};
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("scenario: not an object");
  require_keys(j, {"name", "seed", "n_frames"},
               {"image_w", "image_h", "grid", "spawn", "motion", "occluders", "noise"},
               "scenario");
  Scenario sc;
  if (!j.at("name").is_string()) throw SchemaError("scenario: 'name' not a string");
  sc.name = j.at("name").get<std::string>();
  const auto& seed = j.at("seed");
  if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                    seed.get<std::int64_t>() < 0))
    throw SchemaError("scenario: 'seed' not a non-negative integer");
  sc.seed = seed.get<std::uint64_t>();
  sc.n_frames = int_field(j, "n_frames", "scenario");
  if (j.contains("image_w")) sc.image_w = number_field(j, "image_w", "scenario");
  if (j.contains("image_h")) sc.image_h = number_field(j, "image_h", "scenario");
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    require_keys(g, {"w", "h", "cell"}, {}, "scenario.grid");
    sc.grid.grid_w = int_field(g, "w", "scenario.grid");
    sc.grid.grid_h = int_field(g, "h", "scenario.grid");
    sc.grid.cell_size = number_field(g, "cell", "scenario.grid");
  }
  if (j.contains("spawn")) {
    const auto& s = j.at("spawn");
    require_keys(s, {},
                 {"rate", "initial", "max_active", "rider_count_probs", "helmet_prob",
                  "plate_templates"},
                 "scenario.spawn");
    if (s.contains("rate")) sc.spawn.rate = number_field(s, "rate", "scenario.spawn");
    if (s.contains("initial")) sc.spawn.initial = int_field(s, "initial", "scenario.spawn");
    if (s.contains("max_active"))
      sc.spawn.max_active = int_field(s, "max_active", "scenario.spawn");
    if (s.contains("rider_count_probs")) {
      const auto& rp = s.at("rider_count_probs");
      if (!rp.is_array() || rp.size() != 3)
        throw SchemaError("scenario.spawn: rider_count_probs must have 3 entries");
      for (int i = 0; i < 3; ++i) {
        if (!rp[i].is_number())
          throw SchemaError("scenario.spawn: rider_count_probs entry not a number");
        sc.spawn.rider_count_probs[i] = rp[i].get<double>();
      }
    }
    if (s.contains("helmet_prob"))
      sc.spawn.helmet_prob = number_field(s, "helmet_prob", "scenario.spawn");
    if (s.contains("plate_templates")) {
      const auto& pt = s.at("plate_templates");
      if (!pt.is_array()) throw SchemaError("scenario.spawn: plate_templates not an array");
      sc.spawn.plate_templates.clear();
      for (const auto& t : pt) {
        if (!t.is_string())
          throw SchemaError("scenario.spawn: plate template not a string");
        sc.spawn.plate_templates.push_back(t.get<std::string>());
      }
    }
  }
  if (j.contains("motion")) {
    const auto& m = j.at("motion");
    require_keys(m, {}, {"speed_min", "speed_max", "curvature", "ego_drift", "opposite_prob"},
                 "scenario.motion");
    if (m.contains("speed_min"))
      sc.motion.speed_min = number_field(m, "speed_min", "scenario.motion");
    if (m.contains("speed_max"))
      sc.motion.speed_max = number_field(m, "speed_max", "scenario.motion");
    if (m.contains("curvature"))
      sc.motion.curvature = number_field(m, "curvature", "scenario.motion");
    if (m.contains("ego_drift"))
      sc.motion.ego_drift = number_field(m, "ego_drift", "scenario.motion");
    if (m.contains("opposite_prob"))
      sc.motion.opposite_prob = number_field(m, "opposite_prob", "scenario.motion");
  }
  if (j.contains("occluders")) {
    const auto& o = j.at("occluders");
    require_keys(o, {}, {"count", "w", "h", "speed"}, "scenario.occluders");
    if (o.contains("count")) sc.occluders.count = int_field(o, "count", "scenario.occluders");
    if (o.contains("w")) sc.occluders.w = number_field(o, "w", "scenario.occluders");
    if (o.contains("h")) sc.occluders.h = number_field(o, "h", "scenario.occluders");
    if (o.contains("speed"))
      sc.occluders.speed = number_field(o, "speed", "scenario.occluders");
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    require_keys(n, {},
                 {"miss_prob", "occ_miss_multiplier", "box_jitter_sigma", "fp_rate",
                  "mask_erode", "mask_dilate", "label_flip_prob", "plate_char_corrupt"},
                 "scenario.noise");
    if (n.contains("miss_prob"))
      sc.noise.miss_prob = number_field(n, "miss_prob", "scenario.noise");
    if (n.contains("occ_miss_multiplier"))
      sc.noise.occ_miss_multiplier = number_field(n, "occ_miss_multiplier", "scenario.noise");
    if (n.contains("box_jitter_sigma"))
      sc.noise.box_jitter_sigma = number_field(n, "box_jitter_sigma", "scenario.noise");
    if (n.contains("fp_rate")) sc.noise.fp_rate = number_field(n, "fp_rate", "scenario.noise");
    if (n.contains("mask_erode"))
      sc.noise.mask_erode = int_field(n, "mask_erode", "scenario.noise");
    if (n.contains("mask_dilate"))
      sc.noise.mask_dilate = int_field(n, "mask_dilate", "scenario.noise");
    if (n.contains("label_flip_prob"))
      sc.noise.label_flip_prob = number_field(n, "label_flip_prob", "scenario.noise");
    if (n.contains("plate_char_corrupt"))
      sc.noise.plate_char_corrupt = number_field(n, "plate_char_corrupt", "scenario.noise");
  }
  validate_scenario(sc);
  return sc;
}

namespace {

ordered_json gt_object_to_json(const GtObject& g) {
  ordered_json j;
  j["gt_id"] = g.gt_id;
  j["class"] = to_string(g.cls);
  j["bbox"] = {g.bbox.x, g.bbox.y, g.bbox.w, g.bbox.h};
  j["assoc"] = g.assoc_gt_id;
  j["occ"] = g.occluded_fraction;
  if (g.cls == ObjClass::rider) j["helmet"] = to_string(g.helmet);
  if (g.cls == ObjClass::motorcycle) {
    j["count"] = to_string(g.count);
    j["plate"] = g.plate;
  }
  return j;
}

GtObject gt_object_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("gt object: not an object");
  require_keys(j, {"gt_id", "class", "bbox", "assoc", "occ"},
               {"helmet", "count", "plate"}, "gt object");
  GtObject g;
  g.gt_id = int_field(j, "gt_id", "gt object");
  if (!j.at("class").is_string()) throw SchemaError("gt object: 'class' not a string");
  g.cls = obj_class_from_string(j.at("class").get<std::string>());
  const auto& bb = j.at("bbox");
  if (!bb.is_array() || bb.size() != 4)
    throw SchemaError("gt object: 'bbox' must have 4 numbers");
  for (const auto& v : bb)
    if (!v.is_number()) throw SchemaError("gt object: 'bbox' entry not a number");
  g.bbox = BBox{bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                bb[3].get<double>()};
  g.assoc_gt_id = int_field(j, "assoc", "gt object");
  g.occluded_fraction = number_field(j, "occ", "gt object");
  if (g.cls == ObjClass::rider) {
    if (!j.contains("helmet")) throw SchemaError("gt object: rider missing 'helmet'");
    g.helmet = helmet_from_string(j.at("helmet").get<std::string>());
  } else {
    if (!j.contains("count") || !j.contains("plate"))
      throw SchemaError("gt object: motorcycle missing 'count' or 'plate'");
    g.count = count_from_string(j.at("count").get<std::string>());
    g.plate = j.at("plate").get<std::string>();
  }
  return g;
}

void rebuild_track_summaries(GroundTruthLog& gt) {
  std::map<int, GtTrack> tracks;
  std::map<int, int> rider_count_of_assoc;
  for (const GtFrame& f : gt.frames) {
    std::map<int, int> riders_now;
    for (const GtObject& g : f.objects)
      if (g.cls == ObjClass::rider) ++riders_now[g.assoc_gt_id];
    for (const auto& [aid, n] : riders_now) {
      auto& best = rider_count_of_assoc[aid];
      best = std::max(best, n);
    }
    for (const GtObject& g : f.objects) {
      auto [it, fresh] = tracks.try_emplace(g.gt_id);
      GtTrack& tk = it->second;
      if (fresh) {
        tk.gt_id = g.gt_id;
        tk.cls = g.cls;
        tk.assoc_gt_id = g.assoc_gt_id;
        tk.first_frame = f.frame;
        tk.helmet = g.helmet;
        tk.plate = g.plate;
      }
      tk.last_frame = f.frame;
    }
  }
  gt.tracks.clear();
  for (auto& [id, tk] : tracks) {
    tk.triple = rider_count_of_assoc[tk.assoc_gt_id] >= 3;
    gt.tracks.push_back(tk);
  }
}

}  // namespace

void write_gt_jsonl(const std::string& path, const GroundTruthLog& gt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot open for writing: " + path);
  for (const GtFrame& f : gt.frames) {
    ordered_json j;
    j["frame"] = f.frame;
    ordered_json objs = ordered_json::array();
    for (const GtObject& g : f.objects) objs.push_back(gt_object_to_json(g));
    j["objects"] = std::move(objs);
    out << j.dump() << '\n';
  }
}

GroundTruthLog read_gt_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open: " + path);
  GroundTruthLog gt;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw SchemaError("line is not an object");
      require_keys(j, {"frame", "objects"}, {}, "gt frame");
      GtFrame f;
      f.frame = int_field(j, "frame", "gt frame");
      const auto& objs = j.at("objects");
      if (!objs.is_array()) throw SchemaError("gt frame: 'objects' not an array");
      for (const auto& o : objs) f.objects.push_back(gt_object_from_json(o));
      gt.frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  rebuild_track_summaries(gt);
  return gt;
}

std::vector<TrackRow> gt_track_rows(const GroundTruthLog& gt) {
  std::vector<TrackRow> rows;
  for (const GtFrame& f : gt.frames)
    for (const GtObject& g : f.objects)
      rows.push_back(TrackRow{f.frame, g.gt_id, g.cls, g.assoc_gt_id, g.bbox.x, g.bbox.y,
                              g.bbox.w, g.bbox.h, 1.0});
  return rows;
}

}  // namespace rmtrack
