// Acceptance gate: one pass/fail line per shipped guarantee. Each check is
// self-contained, uses independent oracles where the guarantee is numeric,
// and pins its tolerance and runtime budget in code. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rmtrack/assoc.hpp"
#include "rmtrack/config.hpp"
#include "rmtrack/evaluate.hpp"
#include "rmtrack/geom.hpp"
#include "rmtrack/io.hpp"
#include "rmtrack/joint_solver.hpp"
#include "rmtrack/lap.hpp"
#include "rmtrack/rng.hpp"
#include "rmtrack/simulate.hpp"
#include "rmtrack/tracker.hpp"
#include "rmtrack/violate.hpp"

using namespace rmtrack;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int idx, const std::string& name, bool ok, double secs,
            const std::string& detail = "") {
  std::ostringstream line;
  line << (ok ? "PASS" : "FAIL") << "  criterion " << idx << ": " << name;
  line.precision(2);
  line << std::fixed << "  (" << secs << " s";
  if (!detail.empty()) line << "; " << detail;
  line << ")";
  std::cout << line.str() << std::endl;
  if (!ok) ++g_failures;
}

std::vector<TicketLabel> ticket_labels(int tp, int fp, int fn) {
  std::vector<TicketLabel> v;
  v.insert(v.end(), static_cast<std::size_t>(tp), TicketLabel::tp);
  v.insert(v.end(), static_cast<std::size_t>(fp), TicketLabel::fp);
  v.insert(v.end(), static_cast<std::size_t>(fn), TicketLabel::fn);
  return v;
}

// ---- criterion 1: ticket P/R/F1 arithmetic ------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  const Prf automatic = eticket_prf(ticket_labels(48, 9, 28), false);
  const Prf reviewed = eticket_prf(ticket_labels(16, 5, 7), true);
  const bool ok = std::abs(automatic.precision - 84.21) < 0.01 &&
                  std::abs(automatic.recall - 63.16) < 0.01 &&
                  std::abs(automatic.f1 - 72.18) < 0.01 &&
                  reviewed.precision == 100.0 &&
                  std::abs(reviewed.recall - 69.57) < 0.01 &&
                  std::abs(reviewed.f1 - 82.05) < 0.01;
  report(1, "ticket P/R/F1 reproduces the published arithmetic", ok,
         seconds_since(t0));
}

// ---- criterion 2: ticket truth table ------------------------------------

void criterion_2() {
  const auto t0 = Clock::now();
  using V = StageOutcome;
  using D = LpDetOutcome;
  using R = LpRecOutcome;
  using T = TicketLabel;
  const auto label = [](V v, D d, R r) { return eticket_label(StageLabel{v, d, r}); };
  bool ok = true;
  try {
    ok = ok && label(V::tp, D::tp, R::correct) == T::tp;
    ok = ok && label(V::tp, D::tp, R::incorrect) == T::fp;
    ok = ok && label(V::fp, D::tp, R::incorrect) == T::fp;
    ok = ok && label(V::fp, D::tp, R::correct) == T::fp;
    ok = ok && label(V::tp, D::fp, R::incorrect) == T::fp;
    ok = ok && label(V::fp, D::fp, R::incorrect) == T::fp;
    ok = ok && label(V::fn, D::absent, R::absent) == T::fn;
    ok = ok && label(V::tp, D::fn, R::absent) == T::fn;
  } catch (const std::exception&) {
    ok = false;
  }
  report(2, "ticket truth table matches all eight tabulated rows", ok,
         seconds_since(t0));
}

// ---- criterion 3: exact solver vs enumeration and per-class assignment --

void all_selections(const std::vector<Hypothesis>& hyps, std::size_t k,
                    std::vector<char>& cur, std::vector<std::vector<char>>& out) {
  if (k == hyps.size()) {
    out.push_back(cur);
    return;
  }
  bool clash = false;
  for (std::size_t o = 0; o < k && !clash; ++o)
    if (cur[o] && (hyps[o].track == hyps[k].track || hyps[o].det == hyps[k].det))
      clash = true;
  if (!clash) {
    cur[k] = 1;
    all_selections(hyps, k + 1, cur, out);
    cur[k] = 0;
  }
  all_selections(hyps, k + 1, cur, out);
}

double enumerate_best(const JointProblem& p) {
  std::vector<std::vector<char>> sel_r, sel_m;
  std::vector<char> cur(p.riders.size(), 0);
  all_selections(p.riders, 0, cur, sel_r);
  cur.assign(p.motos.size(), 0);
  all_selections(p.motos, 0, cur, sel_m);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& tr : sel_r) {
    double base = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
      if (tr[i]) base += p.lambda1 * p.riders[i].score;
    for (const auto& tm : sel_m) {
      double obj = base;
      for (std::size_t j = 0; j < tm.size(); ++j)
        if (tm[j]) obj += p.lambda2 * p.motos[j].score;
      for (std::size_t i = 0; i < tr.size(); ++i) {
        if (!tr[i]) continue;
        double gain = 0.0;
        for (std::size_t j = 0; j < p.motos.size(); ++j)
          if (tm[j] && p.feasible_at(static_cast<int>(i), static_cast<int>(j)))
            gain = std::max(gain, p.lambda3 * p.assoc_at(static_cast<int>(i),
                                                         static_cast<int>(j)));
        obj += gain;
      }
      best = std::max(best, obj);
    }
  }
  return best;
}

JointProblem seeded_problem(const CounterRng& rng, int inst, bool zero_coupling) {
  const std::uint64_t s = CounterRng::stream_of(77, static_cast<std::uint64_t>(inst));
  JointProblem p;
  const int rt = 1 + static_cast<int>(rng.pick(s, 0, 4));
  const int rd = 1 + static_cast<int>(rng.pick(s, 1, 4));
  const int mt = 1 + static_cast<int>(rng.pick(s, 2, 4));
  const int md = 1 + static_cast<int>(rng.pick(s, 3, 4));
  std::uint64_t c = 10;
  const auto draw = [&](double lo, double hi) {
    // Quarter-step values 40% of the time force exact ties.
    const double u = rng.uniform(s, c++);
    if (u < 0.4) return lo + 0.25 * std::floor(rng.uniform(s, c++) * (hi - lo) * 4.0);
    return lo + rng.uniform(s, c++) * (hi - lo);
  };
  for (int t = 0; t < rt; ++t)
    for (int d = 0; d < rd; ++d)
      if (rng.uniform(s, c++) < 0.75) p.riders.push_back({t, d, draw(-0.5, 1.5)});
  for (int t = 0; t < mt; ++t)
    for (int d = 0; d < md; ++d)
      if (rng.uniform(s, c++) < 0.75) p.motos.push_back({t, d, draw(-0.5, 1.5)});
  const std::size_t n = p.riders.size() * p.motos.size();
  p.assoc.resize(n);
  p.feasible.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    p.assoc[k] = draw(-1.0, 3.5);
    p.feasible[k] = rng.uniform(s, c++) < 0.7 ? 1 : 0;
  }
  const double l_opts[] = {0.5, 1.0, 2.0};
  p.lambda1 = l_opts[rng.pick(s, c++, 3)];
  p.lambda2 = l_opts[rng.pick(s, c++, 3)];
  const double l3_opts[] = {0.0, 0.5, 1.0, 2.0};
  p.lambda3 = zero_coupling ? 0.0 : l3_opts[rng.pick(s, c++, 4)];
  return p;
}

// Maximum-weight per-class assignment total via the library's matching on a
// dense track-by-detection matrix (absent pairs forbidden).
double class_assignment_total(const std::vector<Hypothesis>& hyps) {
  if (hyps.empty()) return 0.0;
  int rows = 0, cols = 0;
  for (const Hypothesis& h : hyps) {
    rows = std::max(rows, h.track + 1);
    cols = std::max(cols, h.det + 1);
  }
  std::vector<double> w(static_cast<std::size_t>(rows) * cols,
                        -std::numeric_limits<double>::infinity());
  for (const Hypothesis& h : hyps)
    w[static_cast<std::size_t>(h.track) * cols + h.det] = h.score;
  return max_weight_matching(rows, cols, w).total;
}

void criterion_3() {
  const auto t0 = Clock::now();
  const CounterRng rng(314159);
  bool ok = true;
  std::string detail;
  try {
    for (int inst = 0; inst < 200 && ok; ++inst) {
      const JointProblem p = seeded_problem(rng, inst, false);
      const JointSolution sol = solve_joint(p);
      verify_joint(p, sol);
      if (std::abs(sol.objective - enumerate_best(p)) > 1e-9) {
        ok = false;
        detail = "enumeration mismatch at instance " + std::to_string(inst);
      }
    }
    for (int inst = 0; inst < 200 && ok; ++inst) {
      const JointProblem p = seeded_problem(rng, inst, true);
      const double expect = p.lambda1 * class_assignment_total(p.riders) +
                            p.lambda2 * class_assignment_total(p.motos);
      if (std::abs(solve_joint(p).objective - expect) > 1e-9) {
        ok = false;
        detail = "per-class assignment mismatch at instance " + std::to_string(inst);
      }
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  const double secs = seconds_since(t0);
  if (secs >= 30.0) {
    ok = false;
    detail = "exceeded 30 s budget";
  }
  report(3, "exact solver equals enumeration on 200 seeded problems", ok, secs,
         detail);
}

// ---- criterion 4: cross-mask score vs dense pixel oracle ----------------

double dense_cross_score(const SacDetection& r, const SacDetection& m) {
  const double term1 =
      oracle::dense_iou(oracle::dense_from(r.cross_mask), oracle::dense_from(m.seg_mask));
  auto clipped = oracle::dense_from(m.cross_mask);
  const GridSpec g = m.cross_mask.grid();
  const auto box = oracle::dense_raster(r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h,
                                        g.grid_w, g.grid_h, g.cell_size);
  for (std::size_t i = 0; i < clipped.cell.size(); ++i)
    clipped.cell[i] = clipped.cell[i] && box.cell[i];
  const double term2 = oracle::dense_iou(oracle::dense_from(r.seg_mask), clipped);
  return 0.5 * (term1 + term2);
}

SacDetection mask_det(ObjClass cls, const BBox& box, BinaryMask seg, BinaryMask cross) {
  SacDetection d;
  d.cls = cls;
  d.bbox = box;
  d.confidence = 0.9;
  d.seg_mask = std::move(seg);
  d.cross_mask = std::move(cross);
  return d;
}

void criterion_4() {
  const auto t0 = Clock::now();
  const GridSpec grid{32, 32, 2.0};
  const CounterRng rng(9001);
  bool ok = true;
  std::string detail;

  const auto random_mask = [&](std::uint64_t stream, double density) {
    BinaryMask m(grid);
    std::uint64_t c = 0;
    for (int y = 0; y < grid.grid_h; ++y)
      for (int x = 0; x < grid.grid_w; ++x)
        if (rng.uniform(stream, c++) < density) m.set(x, y, true);
    return m;
  };

  for (int q = 0; q < 500 && ok; ++q) {
    const std::uint64_t s = CounterRng::stream_of(88, static_cast<std::uint64_t>(q));
    const BBox rb{rng.uniform(s, 0) * 40.0, rng.uniform(s, 1) * 40.0,
                  4.0 + rng.uniform(s, 2) * 16.0, 4.0 + rng.uniform(s, 3) * 16.0};
    const double density = 0.05 + 0.45 * rng.uniform(s, 4);
    const SacDetection r = mask_det(ObjClass::rider, rb, random_mask(s + 1, density),
                                    random_mask(s + 2, density));
    const BBox mb{rng.uniform(s, 5) * 40.0, rng.uniform(s, 6) * 40.0,
                  4.0 + rng.uniform(s, 7) * 16.0, 4.0 + rng.uniform(s, 8) * 16.0};
    const SacDetection m = mask_det(ObjClass::motorcycle, mb, random_mask(s + 3, density),
                                    random_mask(s + 4, density));
    if (std::abs(association_score(r, m) - dense_cross_score(r, m)) > 1e-12) {
      ok = false;
      detail = "pixel-oracle mismatch at quadruple " + std::to_string(q);
    }
  }

  // A mirrored pair scores exactly 1; fully separated masks exactly 0.
  if (ok) {
    const BBox rb{8.0, 8.0, 12.0, 16.0};
    const BBox mb{8.0, 24.0, 12.0, 20.0};
    const BinaryMask rs = rasterize_box(rb, grid);
    const BinaryMask ms = rasterize_box(mb, grid);
    const SacDetection r = mask_det(ObjClass::rider, rb, rs, ms);
    const SacDetection m = mask_det(ObjClass::motorcycle, mb, ms, rs);
    if (association_score(r, m) != 1.0) {
      ok = false;
      detail = "mirrored pair not exactly 1";
    }
    const BBox rb2{0.0, 0.0, 8.0, 8.0};
    const BBox mb2{48.0, 48.0, 12.0, 12.0};
    const SacDetection r2 = mask_det(ObjClass::rider, rb2, rasterize_box(rb2, grid),
                                     rasterize_box(BBox{0.0, 8.0, 8.0, 8.0}, grid));
    const SacDetection m2 = mask_det(ObjClass::motorcycle, mb2, rasterize_box(mb2, grid),
                                     rasterize_box(BBox{48.0, 40.0, 12.0, 8.0}, grid));
    if (association_score(r2, m2) != 0.0) {
      ok = false;
      detail = "separated pair not exactly 0";
    }
  }
  report(4, "cross-mask score matches the dense pixel oracle", ok, seconds_since(t0),
         detail);
}

// ---- criterion 5: noiseless end-to-end identity -------------------------

const Scenario* find_preset(const std::vector<Scenario>& suite, const std::string& name) {
  for (const Scenario& sc : suite)
    if (sc.name == name) return &sc;
  return nullptr;
}

// What a perfect run should ticket: per ground-truth group, the sorted
// violation list and the plate.
std::multiset<std::pair<std::vector<std::string>, std::string>> expected_tickets(
    const GroundTruthLog& gt) {
  struct Group {
    bool no_helmet = false;
    bool triple = false;
    std::string plate;
  };
  std::map<int, Group> groups;
  for (const GtTrack& t : gt.tracks) {
    Group& g = groups[t.assoc_gt_id];
    if (t.cls == ObjClass::rider) {
      if (t.helmet == HelmetLabel::no_helmet) g.no_helmet = true;
    } else {
      g.plate = t.plate;
      if (t.triple) g.triple = true;
    }
  }
  std::multiset<std::pair<std::vector<std::string>, std::string>> out;
  for (const auto& [id, g] : groups) {
    std::vector<std::string> v;
    if (g.no_helmet) v.push_back("no_helmet");
    if (g.triple) v.push_back("triple_riding");
    if (!v.empty()) out.insert({v, g.plate});
  }
  return out;
}

void criterion_5() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  try {
    const auto suite = preset_suite();
    const Scenario* sc = find_preset(suite, "noiseless");
    if (!sc) throw std::runtime_error("no noiseless preset");
    const SimOutput sim = generate(*sc);

    TrackerConfig cfg;
    cfg.min_hits = 1;  // report tracks from birth so the identity is exact
    const auto rows = run_tracker(sim.detections, cfg);
    const EvalReport rep = evaluate_sequence(sim.gt, rows, sim.detections);

    ok = rep.hota == 1.0 && rep.det_a == 1.0 && rep.ass_a == 1.0 && rep.mota == 1.0 &&
         rep.idf1 == 1.0 && rep.assoc_score_pct == 100.0 && rep.counts.fp == 0 &&
         rep.counts.fn == 0 && rep.counts.idsw == 0;
    if (!ok) detail = "tracking metrics not perfect";

    const auto expect = expected_tickets(sim.gt);
    std::multiset<std::pair<std::vector<std::string>, std::string>> got;
    for (const ETicket& t : assemble_etickets(rows, sim.detections))
      got.insert({t.violations, t.plate.value_or("")});
    if (expect.empty() || got != expect) {
      ok = false;
      detail = "tickets differ from ground truth (" + std::to_string(got.size()) +
               " vs " + std::to_string(expect.size()) + ")";
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  const double secs = seconds_since(t0);
  if (secs >= 10.0) {
    ok = false;
    detail = "exceeded 10 s budget";
  }
  report(5, "noiseless end-to-end run is exactly perfect", ok, secs, detail);
}

// ---- criterion 6: metric hand values and edit-distance oracle -----------

TrackRow mk_row(int frame, int tid, ObjClass cls, double x, double y) {
  TrackRow r;
  r.frame = frame;
  r.track_id = tid;
  r.cls = cls;
  r.x = x;
  r.y = y;
  r.w = 10.0;
  r.h = 10.0;
  r.conf = 1.0;
  return r;
}

int dp_lev(const std::string& a, const std::string& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

void criterion_6() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  const auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };

  {  // Missed detections: 3 ground-truth frames, middle one unmatched.
    std::vector<TrackRow> gt, pred;
    for (int f = 0; f < 3; ++f) gt.push_back(mk_row(f, 1, ObjClass::rider, 0, 0));
    pred.push_back(mk_row(0, 5, ObjClass::rider, 0, 0));
    pred.push_back(mk_row(2, 5, ObjClass::rider, 0, 0));
    const HotaResult h = hota(gt, pred);
    if (!close(mota(gt, pred), 2.0 / 3.0) || !close(idf1(gt, pred), 0.8) ||
        !close(h.hota, 2.0 / 3.0)) {
      ok = false;
      detail = "missed-detection sequence";
    }
  }
  if (ok) {  // False positives: 10 matched frames plus a 2-frame stray.
    std::vector<TrackRow> gt, pred;
    for (int f = 0; f < 10; ++f) {
      gt.push_back(mk_row(f, 1, ObjClass::rider, 0, 0));
      pred.push_back(mk_row(f, 5, ObjClass::rider, 0, 0));
    }
    pred.push_back(mk_row(3, 6, ObjClass::rider, 100, 100));
    pred.push_back(mk_row(4, 6, ObjClass::rider, 100, 100));
    if (!close(mota(gt, pred), 0.8) || !close(idf1(gt, pred), 20.0 / 22.0)) {
      ok = false;
      detail = "false-positive sequence";
    }
  }
  if (ok) {  // One identity switch at frame 6 of 10.
    std::vector<TrackRow> gt, pred;
    for (int f = 0; f < 10; ++f) {
      gt.push_back(mk_row(f, 1, ObjClass::rider, 2.0 * f, 0));
      pred.push_back(mk_row(f, f < 6 ? 5 : 6, ObjClass::rider, 2.0 * f, 0));
    }
    const ClearCounts c = clear_counts(gt, pred);
    const HotaResult h = hota(gt, pred);
    const double ass = (6.0 * 0.6 + 4.0 * 0.4) / 10.0;
    if (c.idsw != 1 || !close(mota(gt, pred), 0.9) || !close(idf1(gt, pred), 0.6) ||
        !close(h.det_a, 1.0) || !close(h.ass_a, ass) ||
        !close(h.hota, std::sqrt(ass))) {
      ok = false;
      detail = "identity-switch sequence";
    }
  }
  if (ok) {  // Edit distance against a full-matrix DP oracle.
    std::mt19937 rng(20260822);
    const std::string charset = "ABCD0123";
    const auto word = [&](std::size_t lo, std::size_t hi) {
      std::string s;
      const std::size_t n = lo + rng() % (hi - lo + 1);
      for (std::size_t i = 0; i < n; ++i) s.push_back(charset[rng() % charset.size()]);
      return s;
    };
    for (int i = 0; i < 1000 && ok; ++i) {
      const std::string a = word(1, 10);
      const std::string b = word(0, 12);
      const int d = dp_lev(a, b);
      if (levenshtein(a, b) != d ||
          !close(cer(a, b), static_cast<double>(d) / static_cast<double>(a.size()))) {
        ok = false;
        detail = "edit-distance pair " + std::to_string(i);
      }
    }
  }
  report(6, "tracking metrics match hand values; CER matches the DP oracle", ok,
         seconds_since(t0), detail);
}

// ---- criterion 7: occlusion suite, joint vs independent baseline --------

void criterion_7() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  try {
    const auto suite = preset_suite();
    std::vector<const Scenario*> occl;
    for (const Scenario& sc : suite)
      if (sc.name.rfind("occlusion_heavy", 0) == 0) occl.push_back(&sc);
    if (occl.size() < 5) throw std::runtime_error("fewer than 5 occlusion presets");

    TrackerConfig cfg;
    cfg.min_hits = 1;
    const RunConfig run;
    double j_idf1 = 0.0, j_hota = 0.0, b_idf1 = 0.0, b_hota = 0.0;
    for (const Scenario* sc : occl) {
      const SimOutput sim = generate(*sc);
      const EvalReport jr =
          evaluate_sequence(sim.gt, run_tracker(sim.detections, cfg), sim.detections);
      const EvalReport br = evaluate_sequence(
          sim.gt, run_independent_baseline(sim.detections, cfg, run.tau_assoc, run.rider_cap),
          sim.detections);
      j_idf1 += jr.idf1;
      j_hota += jr.hota;
      b_idf1 += br.idf1;
      b_hota += br.hota;
    }
    const double n = static_cast<double>(occl.size());
    j_idf1 /= n;
    j_hota /= n;
    b_idf1 /= n;
    b_hota /= n;
    ok = j_idf1 >= b_idf1 && j_hota >= b_hota;
    std::ostringstream d;
    d.precision(4);
    d << std::fixed << "joint idf1 " << j_idf1 << " vs " << b_idf1 << ", hota "
      << j_hota << " vs " << b_hota;
    detail = d.str();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(7, "occlusion suite: joint tracking >= independent baseline", ok,
         seconds_since(t0), detail);
}

// ---- criterion 8: determinism, constraint audit, throughput -------------

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Every artifact the pipeline emits for every preset, serialized once.
std::string suite_fingerprint(const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream all;
  TrackerConfig cfg;
  cfg.min_hits = 1;
  for (const Scenario& sc : preset_suite()) {
    const SimOutput sim = generate(sc);
    const auto rows = run_tracker(sim.detections, cfg);
    const fs::path tracks = dir / (sc.name + "_tracks.csv");
    write_tracks_csv(tracks.string(), rows);
    const fs::path tickets = dir / (sc.name + "_etickets.json");
    write_etickets_json(tickets.string(), assemble_etickets(rows, sim.detections));
    const EvalReport rep = evaluate_sequence(sim.gt, rows, sim.detections);
    all << sc.name << "\n"
        << file_bytes(tracks) << file_bytes(tickets) << report_to_json(rep).dump(2)
        << "\n";
  }
  return all.str();
}

void criterion_8() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  try {
    // (a) Two full-suite passes must serialize byte-identically.
    const fs::path base = fs::temp_directory_path() / "rmtrack_acceptance";
    const std::string pass1 = suite_fingerprint(base / "pass1");
    const std::string pass2 = suite_fingerprint(base / "pass2");
    fs::remove_all(base);
    if (pass1 != pass2 || pass1.empty()) {
      ok = false;
      detail = "suite passes differ";
    }

    // (b) Constraint audit: every solve self-verifies its constraint set
    // and throws on violation; drive the counter past ten thousand solved
    // frames with seeded problems solved since this binary started.
    const CounterRng rng(271828);
    for (int inst = 0; joint_solve_count() < 10000 && inst < 20000; ++inst)
      solve_joint(seeded_problem(rng, 100000 + inst, false));
    if (joint_solve_count() < 10000) {
      ok = false;
      detail = "fewer than 10^4 verified solves";
    }

    // (c) Throughput: 1000 frames at up to 30 objects per frame in < 10 s.
    if (ok) {
      Scenario sc;
      sc.name = "throughput";
      sc.seed = 424242;
      sc.n_frames = 1000;
      sc.image_w = 512.0;
      sc.image_h = 192.0;
      sc.grid = GridSpec{128, 48, 4.0};
      sc.spawn.rate = 0.5;
      sc.spawn.initial = 7;
      sc.spawn.max_active = 7;
      sc.spawn.rider_count_probs = {0.2, 0.3, 0.5};
      const SimOutput sim = generate(sc);
      std::map<int, int> per_frame;
      for (const SacDetection& d : sim.detections) ++per_frame[d.frame];
      int max_obj = 0;
      for (const auto& [f, n] : per_frame) max_obj = std::max(max_obj, n);
      if (max_obj > 30) {
        ok = false;
        detail = "scene exceeds 30 objects per frame";
      } else {
        TrackerConfig cfg;
        const auto tt0 = Clock::now();
        const auto rows = run_tracker(sim.detections, cfg);
        const double track_secs = seconds_since(tt0);
        if (rows.empty() || track_secs >= 10.0) {
          ok = false;
          detail = "tracking took " + std::to_string(track_secs) + " s";
        } else {
          std::ostringstream d;
          d.precision(2);
          d << std::fixed << "1000 frames, max " << max_obj << " objects, tracked in "
            << track_secs << " s";
          detail = d.str();
        }
      }
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(8, "byte-identical reruns, verified constraints, throughput bound", ok,
         seconds_since(t0), detail);
}

}  // namespace

int main() {
  std::cout << "acceptance checks (tolerances and budgets pinned in code)\n";
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  if (g_failures == 0) {
    std::cout << "acceptance: all 8 criteria passed" << std::endl;
  } else {
    std::cout << "acceptance: " << g_failures << " criteria FAILED" << std::endl;
  }
  return g_failures;
}
