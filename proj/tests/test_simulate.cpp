#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "rmtrack/assoc.hpp"
#include "rmtrack/errors.hpp"
#include "rmtrack/io.hpp"
#include "rmtrack/simulate.hpp"

using namespace rmtrack;

namespace {

Scenario small_noiseless() {
  Scenario sc;
  sc.name = "t";
  sc.seed = 7;
  sc.n_frames = 30;
  sc.spawn.initial = 3;
  sc.spawn.rate = 0.2;
  sc.spawn.rider_count_probs = {0.4, 0.3, 0.3};
  return sc;
}

std::string dets_fingerprint(const std::vector<SacDetection>& dets) {
  std::ostringstream os;
  for (const SacDetection& d : dets) os << detection_to_json(d).dump() << '\n';
  return os.str();
}

}  // namespace

TEST_CASE("scenario validation rejects out-of-range fields") {
  Scenario sc = small_noiseless();
  CHECK_NOTHROW(validate_scenario(sc));

  Scenario bad = sc;
  bad.n_frames = 0;
  CHECK_THROWS_AS(validate_scenario(bad), SchemaError);
  bad = sc;
  bad.spawn.rate = 1.5;
  CHECK_THROWS_AS(validate_scenario(bad), SchemaError);
  bad = sc;
  bad.spawn.rider_count_probs = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(validate_scenario(bad), SchemaError);
  bad = sc;
  bad.noise.miss_prob = -0.1;
  CHECK_THROWS_AS(validate_scenario(bad), SchemaError);
  bad = sc;
  bad.motion.speed_max = bad.motion.speed_min - 1.0;
  CHECK_THROWS_AS(validate_scenario(bad), SchemaError);
  bad = sc;
  bad.spawn.plate_templates.clear();
  CHECK_THROWS_AS(validate_scenario(bad), SchemaError);
}

TEST_CASE("scenario JSON round trip is strict and lossless") {
  Scenario sc = small_noiseless();
  sc.noise.miss_prob = 0.25;
  sc.occluders.count = 2;
  sc.motion.opposite_prob = 0.5;
  const auto j = scenario_to_json(sc);
  const Scenario back = scenario_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.name == sc.name);
  CHECK(back.seed == sc.seed);
  CHECK(back.n_frames == sc.n_frames);
  CHECK(back.spawn.rider_count_probs == sc.spawn.rider_count_probs);
  CHECK(back.noise.miss_prob == sc.noise.miss_prob);
  CHECK(back.occluders.count == sc.occluders.count);
  CHECK(back.motion.opposite_prob == sc.motion.opposite_prob);
  CHECK(scenario_to_json(back).dump() == j.dump());

  nlohmann::json junk = nlohmann::json::parse(j.dump());
  junk["mystery"] = 1;
  CHECK_THROWS_AS(scenario_from_json(junk), SchemaError);
  nlohmann::json bad_noise = nlohmann::json::parse(j.dump());
  bad_noise["noise"]["typo"] = 0.1;
  CHECK_THROWS_AS(scenario_from_json(bad_noise), SchemaError);
  nlohmann::json neg_seed = nlohmann::json::parse(j.dump());
  neg_seed["seed"] = -4;
  CHECK_THROWS_AS(scenario_from_json(neg_seed), SchemaError);
}

TEST_CASE("noiseless generation: detections mirror ground truth exactly") {
  const Scenario sc = small_noiseless();
  const SimOutput out = generate(sc);

  REQUIRE(out.gt.frames.size() == static_cast<std::size_t>(sc.n_frames));
  std::size_t n_gt = 0;
  for (const GtFrame& f : out.gt.frames) n_gt += f.objects.size();
  REQUIRE(n_gt > 0);
  REQUIRE(out.detections.size() == n_gt);

  std::size_t di = 0;
  for (const GtFrame& f : out.gt.frames)
    for (const GtObject& g : f.objects) {
      const SacDetection& d = out.detections[di++];
      CHECK(d.frame == f.frame);
      CHECK(d.cls == g.cls);
      CHECK(d.bbox.x == g.bbox.x);
      CHECK(d.bbox.y == g.bbox.y);
      CHECK(d.bbox.w == g.bbox.w);
      CHECK(d.bbox.h == g.bbox.h);
      CHECK(d.confidence == 1.0);
      if (g.cls == ObjClass::rider) {
        REQUIRE(d.attrs.helmet.has_value());
        CHECK(*d.attrs.helmet == g.helmet);
        CHECK_FALSE(d.attrs.plate.has_value());
      } else {
        REQUIRE(d.attrs.count.has_value());
        CHECK(*d.attrs.count == g.count);
        REQUIRE(d.attrs.plate.has_value());
        CHECK(d.attrs.plate->text == g.plate);
        CHECK(d.attrs.plate->confidence == 1.0);
      }
    }
}

TEST_CASE("ground-truth mask pairs score a perfect association") {
  Scenario sc = small_noiseless();
  sc.spawn.rider_count_probs = {0.2, 0.3, 0.5};
  sc.seed = 99;
  const SimOutput out = generate(sc);

  int pairs = 0;
  std::size_t base = 0;
  for (const GtFrame& f : out.gt.frames) {
    // Noiseless: detections per frame align 1-1 with GT objects.
    std::map<int, std::vector<const SacDetection*>> riders_of;
    std::map<int, const SacDetection*> moto_of;
    for (std::size_t k = 0; k < f.objects.size(); ++k) {
      const GtObject& g = f.objects[k];
      const SacDetection& d = out.detections[base + k];
      if (g.cls == ObjClass::rider)
        riders_of[g.assoc_gt_id].push_back(&d);
      else
        moto_of[g.assoc_gt_id] = &d;
    }
    base += f.objects.size();
    for (const auto& [aid, rs] : riders_of) {
      REQUIRE(moto_of.count(aid) == 1);
      for (const SacDetection* r : rs) {
        CHECK(association_score(*r, *moto_of[aid]) == 1.0);
        ++pairs;
      }
    }
  }
  CHECK(pairs > 30);
}

TEST_CASE("rider counts, helmets, and plates are consistent over lifetimes") {
  Scenario sc = small_noiseless();
  sc.seed = 123;
  sc.n_frames = 40;
  const SimOutput out = generate(sc);

  // Per-frame: count label equals the actual rider count of the instance.
  for (const GtFrame& f : out.gt.frames) {
    std::map<int, int> riders;
    for (const GtObject& g : f.objects)
      if (g.cls == ObjClass::rider) ++riders[g.assoc_gt_id];
    for (const GtObject& g : f.objects)
      if (g.cls == ObjClass::motorcycle)
        CHECK(g.count == (riders[g.assoc_gt_id] == 1   ? CountLabel::single
                          : riders[g.assoc_gt_id] == 2 ? CountLabel::double_
                                                       : CountLabel::triple));
  }

  // Per-object: attributes never change across a lifetime.
  std::map<int, std::set<std::string>> plate_of;
  std::map<int, std::set<int>> assoc_of;
  for (const GtFrame& f : out.gt.frames)
    for (const GtObject& g : f.objects) {
      assoc_of[g.gt_id].insert(g.assoc_gt_id);
      if (g.cls == ObjClass::motorcycle) plate_of[g.gt_id].insert(g.plate);
    }
  for (const auto& [id, s] : assoc_of) CHECK(s.size() == 1);
  for (const auto& [id, s] : plate_of) {
    CHECK(s.size() == 1);
    CHECK_FALSE(s.begin()->empty());
  }

  // Track summaries agree with the frame log.
  CHECK(!out.gt.tracks.empty());
  for (const GtTrack& tk : out.gt.tracks) {
    CHECK(tk.first_frame <= tk.last_frame);
    if (tk.cls == ObjClass::motorcycle) CHECK(!tk.plate.empty());
  }
}

TEST_CASE("miss probability one silences the detector") {
  Scenario sc = small_noiseless();
  sc.noise.miss_prob = 1.0;
  const SimOutput out = generate(sc);
  CHECK(out.detections.empty());
  std::size_t n_gt = 0;
  for (const GtFrame& f : out.gt.frames) n_gt += f.objects.size();
  CHECK(n_gt > 0);  // ground truth itself is unaffected
}

TEST_CASE("generation is a pure function of the scenario") {
  std::vector<Scenario> presets = preset_suite();
  Scenario sc = presets[2];  // an occlusion preset: every noise path active
  const SimOutput a = generate(sc);
  const SimOutput b = generate(sc);
  CHECK(dets_fingerprint(a.detections) == dets_fingerprint(b.detections));

  Scenario other = sc;
  other.seed += 1;
  const SimOutput c = generate(other);
  CHECK(dets_fingerprint(a.detections) != dets_fingerprint(c.detections));
}

TEST_CASE("noise axes corrupt the stream when enabled") {
  Scenario sc = small_noiseless();
  sc.seed = 5;
  sc.n_frames = 40;
  sc.noise.miss_prob = 0.3;
  const std::size_t full = generate(small_noiseless()).detections.size();
  (void)full;

  const SimOutput missy = generate(sc);
  std::size_t n_gt = 0;
  for (const GtFrame& f : missy.gt.frames) n_gt += f.objects.size();
  CHECK(missy.detections.size() < n_gt);

  Scenario fp = small_noiseless();
  fp.noise.fp_rate = 1.0;  // one guaranteed false positive per frame
  const SimOutput fpy = generate(fp);
  std::size_t fp_gt = 0;
  for (const GtFrame& f : fpy.gt.frames) fp_gt += f.objects.size();
  CHECK(fpy.detections.size() == fp_gt + fpy.gt.frames.size());

  Scenario jit = small_noiseless();
  jit.noise.box_jitter_sigma = 1.0;
  const SimOutput jity = generate(jit);
  bool any_moved = false;
  std::size_t di = 0;
  for (const GtFrame& f : jity.gt.frames)
    for (const GtObject& g : f.objects) {
      if (jity.detections[di].bbox.x != g.bbox.x) any_moved = true;
      ++di;
    }
  CHECK(any_moved);

  Scenario pl = small_noiseless();
  pl.noise.plate_char_corrupt = 0.5;
  const SimOutput ply = generate(pl);
  bool any_dot = false;
  for (const SacDetection& d : ply.detections)
    if (d.attrs.plate && d.attrs.plate->text.find('.') != std::string::npos)
      any_dot = true;
  CHECK(any_dot);
}

TEST_CASE("preset suite ships the documented scenarios") {
  const std::vector<Scenario> suite = preset_suite();
  CHECK(suite.size() >= 6);

  std::set<std::string> names;
  int occlusion_heavy = 0;
  bool has_noiseless = false;
  for (const Scenario& sc : suite) {
    CHECK_NOTHROW(validate_scenario(sc));
    CHECK(names.insert(sc.name).second);  // unique names
    if (sc.name.rfind("occlusion_heavy", 0) == 0) {
      ++occlusion_heavy;
      CHECK(sc.occluders.count > 0);
    }
    const NoiseSpec& n = sc.noise;
    if (n.miss_prob == 0.0 && n.box_jitter_sigma == 0.0 && n.fp_rate == 0.0 &&
        n.mask_erode == 0 && n.mask_dilate == 0 && n.label_flip_prob == 0.0 &&
        n.plate_char_corrupt == 0.0 && sc.occluders.count == 0)
      has_noiseless = true;
  }
  CHECK(occlusion_heavy >= 5);
  CHECK(has_noiseless);

  // Distinct seeds across the occlusion family keep the suite independent.
  std::set<std::uint64_t> occ_seeds;
  for (const Scenario& sc : suite)
    if (sc.name.rfind("occlusion_heavy", 0) == 0) occ_seeds.insert(sc.seed);
  CHECK(occ_seeds.size() == static_cast<std::size_t>(occlusion_heavy));
}

TEST_CASE("gt jsonl round trip preserves the log") {
  Scenario sc = small_noiseless();
  sc.seed = 321;
  const SimOutput out = generate(sc);
  const std::string path =
      (std::filesystem::temp_directory_path() / "gt_roundtrip_test.jsonl").string();
  write_gt_jsonl(path, out.gt);
  const GroundTruthLog back = read_gt_jsonl(path);

  REQUIRE(back.frames.size() == out.gt.frames.size());
  for (std::size_t i = 0; i < back.frames.size(); ++i) {
    REQUIRE(back.frames[i].objects.size() == out.gt.frames[i].objects.size());
    for (std::size_t k = 0; k < back.frames[i].objects.size(); ++k) {
      const GtObject& a = out.gt.frames[i].objects[k];
      const GtObject& b = back.frames[i].objects[k];
      CHECK(a.gt_id == b.gt_id);
      CHECK(a.cls == b.cls);
      CHECK(a.bbox.x == b.bbox.x);
      CHECK(a.assoc_gt_id == b.assoc_gt_id);
      CHECK(a.helmet == b.helmet);
      CHECK(a.count == b.count);
      CHECK(a.plate == b.plate);
      CHECK(a.occluded_fraction == b.occluded_fraction);
    }
  }
  REQUIRE(back.tracks.size() == out.gt.tracks.size());
  for (std::size_t i = 0; i < back.tracks.size(); ++i) {
    CHECK(back.tracks[i].gt_id == out.gt.tracks[i].gt_id);
    CHECK(back.tracks[i].triple == out.gt.tracks[i].triple);
    CHECK(back.tracks[i].helmet == out.gt.tracks[i].helmet);
    CHECK(back.tracks[i].plate == out.gt.tracks[i].plate);
    CHECK(back.tracks[i].first_frame == out.gt.tracks[i].first_frame);
    CHECK(back.tracks[i].last_frame == out.gt.tracks[i].last_frame);
  }

  const auto rows = gt_track_rows(out.gt);
  std::size_t n_gt = 0;
  for (const GtFrame& f : out.gt.frames) n_gt += f.objects.size();
  CHECK(rows.size() == n_gt);
  for (const TrackRow& r : rows) CHECK(r.conf == 1.0);
}

TEST_CASE("occluders raise the occluded fraction somewhere") {
  Scenario sc = small_noiseless();
  sc.occluders.count = 3;
  sc.occluders.w = 40.0;
  sc.occluders.h = 80.0;
  const SimOutput out = generate(sc);
  double max_occ = 0.0;
  for (const GtFrame& f : out.gt.frames)
    for (const GtObject& g : f.objects) max_occ = std::max(max_occ, g.occluded_fraction);
  CHECK(max_occ > 0.2);
}
