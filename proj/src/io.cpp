#include "rmtrack/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "rmtrack/errors.hpp"

namespace rmtrack {

using nlohmann::json;
using nlohmann::ordered_json;

void require_keys(const json& j, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional,
                  const char* what) {
  for (const char* k : required)
    if (!j.contains(k))
      throw SchemaError(std::string(what) + ": missing key '" + k + "'");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : required)
      if (it.key() == k) known = true;
    for (const char* k : optional)
      if (it.key() == k) known = true;
    if (!known)
      throw SchemaError(std::string(what) + ": unknown key '" + it.key() + "'");
  }
}

double number_field(const json& j, const char* key, const char* what) {
  const auto& v = j.at(key);
  if (!v.is_number())
    throw SchemaError(std::string(what) + ": '" + key + "' is not a number");
  return v.get<double>();
}

int int_field(const json& j, const char* key, const char* what) {
  const auto& v = j.at(key);
  if (!v.is_number_integer())
    throw SchemaError(std::string(what) + ": '" + key + "' is not an integer");
  return v.get<int>();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ordered_json mask_to_json(const BinaryMask& m) {
  ordered_json j;
  j["w"] = m.grid().grid_w;
  j["h"] = m.grid().grid_h;
  j["cell"] = m.grid().cell_size;
  j["runs"] = rle_encode(m);
  return j;
}

BinaryMask mask_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("mask: not an object");
  require_keys(j, {"w", "h", "cell", "runs"}, {}, "mask");
  GridSpec g;
  g.grid_w = int_field(j, "w", "mask");
  g.grid_h = int_field(j, "h", "mask");
  g.cell_size = number_field(j, "cell", "mask");
  if (!g.valid()) throw SchemaError("mask: invalid grid dimensions");
  const auto& runs_j = j.at("runs");
  if (!runs_j.is_array()) throw SchemaError("mask: 'runs' is not an array");
  std::vector<std::int64_t> runs;
  runs.reserve(runs_j.size());
  for (const auto& r : runs_j) {
    if (!r.is_number_integer()) throw SchemaError("mask: non-integer run length");
    runs.push_back(r.get<std::int64_t>());
  }
  return rle_decode(g, runs);
}

ordered_json detection_to_json(const SacDetection& d) {
  ordered_json j;
  j["frame"] = d.frame;
  j["class"] = to_string(d.cls);
  j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
  j["conf"] = d.confidence;
  j["seg"] = mask_to_json(d.seg_mask);
  j["cross"] = mask_to_json(d.cross_mask);
  if (d.embedding) j["emb"] = *d.embedding;
  if (d.attrs.any()) {
    ordered_json a;
    if (d.attrs.helmet) a["helmet"] = to_string(*d.attrs.helmet);
    if (d.attrs.count) a["count"] = to_string(*d.attrs.count);
    if (d.attrs.plate) {
      a["plate"] = ordered_json{{"text", d.attrs.plate->text},
                                {"conf", d.attrs.plate->confidence}};
    }
    j["attrs"] = std::move(a);
  }
  j["det_id"] = d.det_id;
  return j;
}

SacDetection detection_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("detection: not an object");
  require_keys(j, {"frame", "class", "bbox", "conf", "seg", "cross", "det_id"},
               {"emb", "attrs"}, "detection");
  SacDetection d;
  d.frame = int_field(j, "frame", "detection");
  d.cls = obj_class_from_string(j.at("class").get<std::string>());
  const auto& bb = j.at("bbox");
  if (!bb.is_array() || bb.size() != 4)
    throw SchemaError("detection: 'bbox' is not a 4-array");
  d.bbox = BBox{bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                bb[3].get<double>()};
  d.confidence = number_field(j, "conf", "detection");
  d.seg_mask = mask_from_json(j.at("seg"));
  d.cross_mask = mask_from_json(j.at("cross"));
  if (j.contains("emb")) {
    const auto& e = j.at("emb");
    if (!e.is_array()) throw SchemaError("detection: 'emb' is not an array");
    d.embedding = e.get<std::vector<double>>();
  }
  if (j.contains("attrs")) {
    const auto& a = j.at("attrs");
    if (!a.is_object()) throw SchemaError("detection: 'attrs' is not an object");
    require_keys(a, {}, {"helmet", "count", "plate"}, "detection attrs");
    if (a.contains("helmet"))
      d.attrs.helmet = helmet_from_string(a.at("helmet").get<std::string>());
    if (a.contains("count"))
      d.attrs.count = count_from_string(a.at("count").get<std::string>());
    if (a.contains("plate")) {
      const auto& p = a.at("plate");
      require_keys(p, {"text", "conf"}, {}, "detection plate");
      d.attrs.plate = PlateRead{p.at("text").get<std::string>(),
                                number_field(p, "conf", "detection plate")};
    }
  }
  d.det_id = int_field(j, "det_id", "detection");
  validate_detection(d);
  return d;
}

void write_detections_jsonl(const std::string& path,
                            const std::vector<SacDetection>& dets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const SacDetection& d : dets) out << detection_to_json(d).dump() << '\n';
}

std::vector<SacDetection> read_detections_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<SacDetection> dets;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      dets.push_back(detection_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": JSON parse error: " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dets;
}

void write_tracks_csv(const std::string& path, const std::vector<TrackRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "frame,track_id,class,assoc_id,x,y,w,h,conf\n";
  for (const TrackRow& r : rows) {
    out << r.frame << ',' << r.track_id << ',' << to_string(r.cls) << ','
        << r.assoc_id << ',' << format_double(r.x) << ',' << format_double(r.y)
        << ',' << format_double(r.w) << ',' << format_double(r.h) << ','
        << format_double(r.conf) << '\n';
  }
}

std::vector<TrackRow> read_tracks_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw SchemaError(path + ": empty track file");
  if (line == "frame,track_id,class,assoc_id,x,y,w,h,conf\r")
    line.pop_back();
  if (line != "frame,track_id,class,assoc_id,x,y,w,h,conf")
    throw SchemaError(path + ": unexpected CSV header '" + line + "'");
  std::vector<TrackRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9)
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": expected 9 columns, got " + std::to_string(cells.size()));
    const auto parse_int = [&](const std::string& s, const char* field) {
      int v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SchemaError(path + ":" + std::to_string(line_no) + ": bad " +
                          field + " '" + s + "'");
      return v;
    };
    const auto parse_num = [&](const std::string& s, const char* field) {
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SchemaError(path + ":" + std::to_string(line_no) + ": bad " +
                          field + " '" + s + "'");
      return v;
    };
    TrackRow r;
    r.frame = parse_int(cells[0], "frame");
    r.track_id = parse_int(cells[1], "track_id");
    r.cls = obj_class_from_string(cells[2]);
    r.assoc_id = parse_int(cells[3], "assoc_id");
    r.x = parse_num(cells[4], "x");
    r.y = parse_num(cells[5], "y");
    r.w = parse_num(cells[6], "w");
    r.h = parse_num(cells[7], "h");
    r.conf = parse_num(cells[8], "conf");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace rmtrack
