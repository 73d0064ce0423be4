#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmtrack/geom.hpp"

namespace rmtrack {

enum class ObjClass { rider, motorcycle };

enum class HelmetLabel { helmet, no_helmet, unknown };

// double_ carries a trailing underscore only because double is a keyword.
enum class CountLabel { none, single, double_, triple };

struct PlateRead {
  std::string text;
  double confidence = 0.0;
};

/// Per-frame attributes a detector attaches to a detection. Which members
/// are populated depends on the class: helmet for riders; count and plate
/// for motorcycles.
struct DetAttrs {
  std::optional<HelmetLabel> helmet;
  std::optional<CountLabel> count;
  std::optional<PlateRead> plate;

  bool any() const { return helmet || count || plate; }
};

/// One segmentation-and-cross-mask detection: its own mask plus the mask of
/// the partner region it claims (a rider's cross mask covers the motorcycle
/// it sits on, and vice versa).
struct SacDetection {
  int frame = 0;
  ObjClass cls = ObjClass::rider;
  BBox bbox;
  double confidence = 0.0;
  BinaryMask seg_mask;
  BinaryMask cross_mask;
  std::optional<std::vector<double>> embedding;  // unit norm when present
  DetAttrs attrs;
  int det_id = -1;
};

/// Throws SchemaError when the detection violates its invariants
/// (mask grids differ, confidence out of range, embedding not unit norm).
void validate_detection(const SacDetection& d);

/// A motorcycle with the riders assigned to it in one frame. Members are
/// indices into the frame's rider / motorcycle detection lists.
struct RMInstance {
  int motorcycle = -1;
  std::vector<int> riders;  // nonempty, ascending
  BBox bbox;                // tight hull of all member boxes
  std::optional<int> instance_id;
};

std::string to_string(ObjClass c);
std::string to_string(HelmetLabel h);
std::string to_string(CountLabel c);
ObjClass obj_class_from_string(const std::string& s);
HelmetLabel helmet_from_string(const std::string& s);
CountLabel count_from_string(const std::string& s);

}  // namespace rmtrack
