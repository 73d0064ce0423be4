#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rmtrack/detection.hpp"
#include "rmtrack/io.hpp"

namespace rmtrack {

/// Majority vote over per-frame helmet observations. Unknown labels are
/// dropped first; an empty list (before or after dropping) and exact ties
/// both return helmet, so only clear evidence flags a violation.
HelmetLabel consolidate_helmet(const std::vector<HelmetLabel>& obs);

/// Triple-riding flag: at least m frames labelled triple. Throws
/// std::invalid_argument when m < 1.
bool consolidate_triple(const std::vector<CountLabel>& obs, int m = 1);

/// Modal complete plate string. Reads containing the placeholder dot or
/// the invisible marker "#" (or empty reads) are excluded from the vote;
/// ties break toward the higher summed confidence, then the
/// lexicographically smaller string. No valid read yields absent.
std::optional<std::string> consolidate_plate(const std::vector<PlateRead>& reads);

/// One violation record for a rider-motorcycle group.
struct ETicket {
  int assoc_id = -1;
  std::vector<std::string> violations;  // sorted subset of {no_helmet, triple_riding}
  std::optional<std::string> plate;
  std::vector<int> evidence_frames;            // ascending, unique
  std::map<int, HelmetLabel> per_rider_helmet;  // rider track_id -> verdict

  bool operator==(const ETicket&) const = default;
};

/// Consolidate every associated track group into at most one e-ticket.
/// Rows are joined back to their detections by frame, class, and exact box
/// (the tracker echoes matched detection boxes); a row with no matching
/// detection throws SchemaError. Groups whose consolidations flag no
/// violation emit nothing. evidence_frames lists the frames whose labels
/// drove the flagged violations. Tickets come back sorted by assoc_id.
std::vector<ETicket> assemble_etickets(const std::vector<TrackRow>& rows,
                                       const std::vector<SacDetection>& dets,
                                       int triple_m = 1);

/// JSON array with fixed field order per ticket; plate serializes as null
/// when absent.
void write_etickets_json(const std::string& path, const std::vector<ETicket>& tickets);
std::vector<ETicket> read_etickets_json(const std::string& path);

}  // namespace rmtrack
