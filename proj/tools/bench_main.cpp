#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmtrack/assoc.hpp"
#include "rmtrack/evaluate.hpp"
#include "rmtrack/simulate.hpp"

using namespace rmtrack;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* kernel, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-22s %10.2f %12.2f %8.2fx  %s\n", kernel, serial_ms, parallel_ms,
              serial_ms / parallel_ms, identical ? "identical" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP timing of the three parallel kernels"};
  int pairs = 96;
  int frames = 400;
  int reps = 5;
  app.add_option("--pairs", pairs, "riders and motorcycles per association matrix");
  app.add_option("--frames", frames, "frames in the matching/sweep workload");
  app.add_option("--reps", reps, "repetitions; best time wins");
  CLI11_PARSE(app, argc, argv);

  // A dense scene supplies mask-bearing detections and long track streams.
  Scenario sc;
  sc.name = "bench";
  sc.seed = 7;
  sc.n_frames = frames;
  sc.spawn.rate = 0.5;
  sc.spawn.initial = 12;
  sc.spawn.max_active = 16;
  sc.spawn.rider_count_probs = {0.2, 0.3, 0.5};
  const SimOutput sim = generate(sc);

  std::vector<SacDetection> riders, motos;
  for (const SacDetection& d : sim.detections) {
    if (d.cls == ObjClass::rider && static_cast<int>(riders.size()) < pairs)
      riders.push_back(d);
    if (d.cls == ObjClass::motorcycle && static_cast<int>(motos.size()) < pairs)
      motos.push_back(d);
  }
  std::printf("workload: %zu riders x %zu motorcycles, %d frames, best of %d\n\n",
              riders.size(), motos.size(), frames, reps);
  std::printf("%-22s %10s %12s %9s\n", "kernel", "serial_ms", "parallel_ms", "speedup");

  {
    AssociationMatrix out_s, out_p;
    const double ts = best_of(reps, [&] { out_s = build_matrix_serial(riders, motos); });
    const double tp = best_of(reps, [&] { out_p = build_matrix(riders, motos); });
    report("association-matrix", ts, tp,
           out_s.scores == out_p.scores && out_s.n_riders == out_p.n_riders);
  }

  const std::vector<TrackRow> gt_rows = gt_track_rows(sim.gt);
  std::vector<TrackRow> pred = gt_rows;
  for (TrackRow& r : pred) {
    r.x += 0.3;
    r.track_id += 1000;
  }

  {
    std::vector<FrameCorrespondence> out_s, out_p;
    const double ts = best_of(reps, [&] { out_s = match_frames_serial(gt_rows, pred); });
    const double tp = best_of(reps, [&] { out_p = match_frames(gt_rows, pred); });
    report("frame-matching", ts, tp, out_s == out_p);
  }

  {
    HotaResult out_s{}, out_p{};
    const double ts = best_of(reps, [&] { out_s = hota_serial(gt_rows, pred); });
    const double tp = best_of(reps, [&] { out_p = hota(gt_rows, pred); });
    report("localization-sweep", ts, tp,
           out_s.hota == out_p.hota && out_s.det_a == out_p.det_a &&
               out_s.ass_a == out_p.ass_a);
  }

  return 0;
}
