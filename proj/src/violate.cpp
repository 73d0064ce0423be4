#include "rmtrack/violate.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "rmtrack/errors.hpp"

namespace rmtrack {

HelmetLabel consolidate_helmet(const std::vector<HelmetLabel>& obs) {
  int helmeted = 0;
  int bare = 0;
  for (const HelmetLabel h : obs) {
    if (h == HelmetLabel::helmet) ++helmeted;
    if (h == HelmetLabel::no_helmet) ++bare;
  }
  return bare > helmeted ? HelmetLabel::no_helmet : HelmetLabel::helmet;
}

bool consolidate_triple(const std::vector<CountLabel>& obs, int m) {
  if (m < 1) throw std::invalid_argument("consolidate_triple: m < 1");
  int triples = 0;
  for (const CountLabel c : obs)
    if (c == CountLabel::triple) ++triples;
  return triples >= m;
}

std::optional<std::string> consolidate_plate(const std::vector<PlateRead>& reads) {
  struct Tally {
    int count = 0;
    double conf = 0.0;
  };
  std::map<std::string, Tally> tallies;
  for (const PlateRead& r : reads) {
    if (r.text.empty()) continue;
    if (r.text.find('.') != std::string::npos) continue;
    if (r.text.find('#') != std::string::npos) continue;
    Tally& t = tallies[r.text];
    ++t.count;
    t.conf += r.confidence;
  }
  const std::string* best = nullptr;
  const Tally* best_t = nullptr;
  for (const auto& [text, t] : tallies) {
    // Map order is lexicographic, so on full ties the first candidate
    // (smallest string) wins and strict comparisons keep it.
    if (!best || t.count > best_t->count ||
        (t.count == best_t->count && t.conf > best_t->conf)) {
      best = &text;
      best_t = &t;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

namespace {

struct GroupEvidence {
  std::map<int, std::vector<HelmetLabel>> rider_obs;   // rider track -> labels
  std::map<int, std::vector<int>> rider_bare_frames;   // rider track -> frames
  std::vector<CountLabel> count_obs;
  std::vector<int> triple_frames;
  std::vector<PlateRead> plate_reads;
};

}  // namespace

std::vector<ETicket> assemble_etickets(const std::vector<TrackRow>& rows,
                                       const std::vector<SacDetection>& dets,
                                       int triple_m) {
  // Frame-keyed detection index for the box join.
  std::map<int, std::vector<const SacDetection*>> dets_of_frame;
  for (const SacDetection& d : dets) dets_of_frame[d.frame].push_back(&d);

  std::map<int, GroupEvidence> groups;
  for (const TrackRow& row : rows) {
    if (row.assoc_id == -1) continue;
    const SacDetection* det = nullptr;
    const auto it = dets_of_frame.find(row.frame);
    if (it != dets_of_frame.end())
      for (const SacDetection* d : it->second)
        if (d->cls == row.cls && d->bbox.x == row.x && d->bbox.y == row.y &&
            d->bbox.w == row.w && d->bbox.h == row.h) {
          det = d;
          break;
        }
    if (!det)
      throw SchemaError("e-ticket assembly: track " + std::to_string(row.track_id) +
                        " frame " + std::to_string(row.frame) +
                        " references no detection");

    GroupEvidence& g = groups[row.assoc_id];
    if (row.cls == ObjClass::rider) {
      if (det->attrs.helmet) {
        g.rider_obs[row.track_id].push_back(*det->attrs.helmet);
        if (*det->attrs.helmet == HelmetLabel::no_helmet)
          g.rider_bare_frames[row.track_id].push_back(row.frame);
      }
    } else {
      if (det->attrs.count) {
        g.count_obs.push_back(*det->attrs.count);
        if (*det->attrs.count == CountLabel::triple)
          g.triple_frames.push_back(row.frame);
      }
      if (det->attrs.plate) g.plate_reads.push_back(*det->attrs.plate);
    }
  }

  std::vector<ETicket> tickets;
  for (const auto& [assoc_id, g] : groups) {
    ETicket t;
    t.assoc_id = assoc_id;

    std::set<int> evidence;
    bool any_bare = false;
    for (const auto& [rider, obs] : g.rider_obs) {
      const HelmetLabel verdict = consolidate_helmet(obs);
      t.per_rider_helmet[rider] = verdict;
      if (verdict == HelmetLabel::no_helmet) {
        any_bare = true;
        const auto bf = g.rider_bare_frames.find(rider);
        if (bf != g.rider_bare_frames.end())
          evidence.insert(bf->second.begin(), bf->second.end());
      }
    }
    if (any_bare) t.violations.push_back("no_helmet");
    if (!g.count_obs.empty() && consolidate_triple(g.count_obs, triple_m)) {
      t.violations.push_back("triple_riding");
      evidence.insert(g.triple_frames.begin(), g.triple_frames.end());
    }
    if (t.violations.empty()) continue;

    t.plate = consolidate_plate(g.plate_reads);
    t.evidence_frames.assign(evidence.begin(), evidence.end());
    tickets.push_back(std::move(t));
  }
  return tickets;
}

void write_etickets_json(const std::string& path, const std::vector<ETicket>& tickets) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ETicket& t : tickets) {
    nlohmann::ordered_json j;
    j["assoc_id"] = t.assoc_id;
    j["violations"] = t.violations;
    if (t.plate)
      j["plate"] = *t.plate;
    else
      j["plate"] = nullptr;
    j["evidence_frames"] = t.evidence_frames;
    nlohmann::ordered_json helmets = nlohmann::ordered_json::object();
    for (const auto& [rider, verdict] : t.per_rider_helmet)
      helmets[std::to_string(rider)] = to_string(verdict);
    j["per_rider_helmet"] = std::move(helmets);
    arr.push_back(std::move(j));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot open for writing: " + path);
  out << arr.dump(2) << '\n';
}

std::vector<ETicket> read_etickets_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open: " + path);
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  if (!arr.is_array()) throw SchemaError(path + ": not a JSON array");
  std::vector<ETicket> tickets;
  for (const auto& j : arr) {
    if (!j.is_object()) throw SchemaError(path + ": ticket is not an object");
    require_keys(j, {"assoc_id", "violations", "plate", "evidence_frames",
                     "per_rider_helmet"},
                 {}, "eticket");
    ETicket t;
    t.assoc_id = int_field(j, "assoc_id", "eticket");
    const auto& vio = j.at("violations");
    if (!vio.is_array()) throw SchemaError("eticket: 'violations' not an array");
    for (const auto& v : vio) {
      const std::string s = v.get<std::string>();
      if (s != "no_helmet" && s != "triple_riding")
        throw SchemaError("eticket: unknown violation '" + s + "'");
      t.violations.push_back(s);
    }
    if (!j.at("plate").is_null()) t.plate = j.at("plate").get<std::string>();
    for (const auto& f : j.at("evidence_frames")) {
      if (!f.is_number_integer())
        throw SchemaError("eticket: non-integer evidence frame");
      t.evidence_frames.push_back(f.get<int>());
    }
    const auto& helmets = j.at("per_rider_helmet");
    if (!helmets.is_object())
      throw SchemaError("eticket: 'per_rider_helmet' not an object");
    for (auto it = helmets.begin(); it != helmets.end(); ++it) {
      int rider = 0;
      try {
        rider = std::stoi(it.key());
      } catch (const std::exception&) {
        throw SchemaError("eticket: non-integer rider key '" + it.key() + "'");
      }
      t.per_rider_helmet[rider] = helmet_from_string(it.value().get<std::string>());
    }
    tickets.push_back(std::move(t));
  }
  return tickets;
}

}  // namespace rmtrack
