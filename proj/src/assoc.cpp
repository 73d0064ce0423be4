#include "rmtrack/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rmtrack/errors.hpp"

namespace rmtrack {

void validate_detection(const SacDetection& d) {
  if (!d.bbox.valid()) throw SchemaError("detection: invalid bbox");
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
    throw SchemaError("detection: confidence outside [0,1]");
  if (!(d.seg_mask.grid() == d.cross_mask.grid()))
    throw SchemaError("detection: seg and cross masks on different grids");
  if (d.embedding) {
    double n2 = 0.0;
    for (const double v : *d.embedding) {
      if (!std::isfinite(v)) throw SchemaError("detection: non-finite embedding");
      n2 += v * v;
    }
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
      throw SchemaError("detection: embedding norm not 1");
  }
}

std::string to_string(ObjClass c) {
  return c == ObjClass::rider ? "rider" : "motorcycle";
}

std::string to_string(HelmetLabel h) {
  switch (h) {
    case HelmetLabel::helmet: return "helmet";
    case HelmetLabel::no_helmet: return "no_helmet";
    default: return "unknown";
  }
}

std::string to_string(CountLabel c) {
  switch (c) {
    case CountLabel::none: return "none";
    case CountLabel::single: return "single";
    case CountLabel::double_: return "double";
    default: return "triple";
  }
}

ObjClass obj_class_from_string(const std::string& s) {
  if (s == "rider") return ObjClass::rider;
  if (s == "motorcycle") return ObjClass::motorcycle;
  throw SchemaError("unknown object class: " + s);
}

HelmetLabel helmet_from_string(const std::string& s) {
  if (s == "helmet") return HelmetLabel::helmet;
  if (s == "no_helmet") return HelmetLabel::no_helmet;
  if (s == "unknown") return HelmetLabel::unknown;
  throw SchemaError("unknown helmet label: " + s);
}

CountLabel count_from_string(const std::string& s) {
  if (s == "none") return CountLabel::none;
  if (s == "single") return CountLabel::single;
  if (s == "double") return CountLabel::double_;
  if (s == "triple") return CountLabel::triple;
  throw SchemaError("unknown count label: " + s);
}

double association_score(const SacDetection& r, const SacDetection& m) {
  if (r.cls != ObjClass::rider || m.cls != ObjClass::motorcycle)
    throw std::invalid_argument("association_score: wrong classes");
  return cross_mask_score(r.seg_mask, r.cross_mask, r.bbox, m.seg_mask, m.cross_mask);
}

double cross_mask_score(const BinaryMask& rider_seg, const BinaryMask& rider_cross,
                        const BBox& rider_box, const BinaryMask& moto_seg,
                        const BinaryMask& moto_cross) {
  const double cross_vs_moto = mask_iou(rider_cross, moto_seg);
  const double rider_vs_clipped =
      mask_iou(rider_seg, mask_restrict(moto_cross, rider_box));
  return 0.5 * (cross_vs_moto + rider_vs_clipped);
}

namespace {

AssociationMatrix build_matrix_impl(const std::vector<SacDetection>& riders,
                                    const std::vector<SacDetection>& motos,
                                    bool parallel) {
  AssociationMatrix m;
  m.n_riders = static_cast<int>(riders.size());
  m.n_motos = static_cast<int>(motos.size());
  m.scores.assign(static_cast<std::size_t>(m.n_riders) * m.n_motos, 0.0);
  const int total = m.n_riders * m.n_motos;
  // Entries are independent writes, so the parallel and serial paths fill
  // identical values in identical slots.
#pragma omp parallel for schedule(static) if (parallel)
  for (int idx = 0; idx < total; ++idx) {
    const int k = idx / m.n_motos;
    const int l = idx % m.n_motos;
    m.scores[idx] = association_score(riders[k], motos[l]);
  }
  return m;
}

}  // namespace

AssociationMatrix build_matrix(const std::vector<SacDetection>& riders,
                               const std::vector<SacDetection>& motos) {
  return build_matrix_impl(riders, motos, true);
}

AssociationMatrix build_matrix_serial(const std::vector<SacDetection>& riders,
                                      const std::vector<SacDetection>& motos) {
  return build_matrix_impl(riders, motos, false);
}

InstancePartition form_instances(const std::vector<SacDetection>& riders,
                                 const std::vector<SacDetection>& motos,
                                 double tau, int rider_cap) {
  const AssociationMatrix m = build_matrix(riders, motos);
  InstancePartition out;
  std::vector<std::vector<int>> assigned(motos.size());

  for (int k = 0; k < m.n_riders; ++k) {
    int best = -1;
    double best_score = 0.0;
    for (int l = 0; l < m.n_motos; ++l) {
      const double s = m.at(k, l);
      if (s >= tau && (best < 0 || s > best_score)) {
        best = l;
        best_score = s;
      }
    }
    if (best >= 0 && static_cast<int>(assigned[best].size()) < rider_cap) {
      assigned[best].push_back(k);
    } else {
      out.unassigned_riders.push_back(k);
    }
  }

  for (int l = 0; l < m.n_motos; ++l) {
    if (assigned[l].empty()) {
      out.unassigned_motos.push_back(l);
      continue;
    }
    RMInstance inst;
    inst.motorcycle = l;
    inst.riders = assigned[l];
    inst.bbox = motos[l].bbox;
    for (const int k : inst.riders) inst.bbox = BBox::hull(inst.bbox, riders[k].bbox);
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace rmtrack
