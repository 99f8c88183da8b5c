#include "patchmine/export.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "patchmine/image_io.hpp"

namespace patchmine {

const char* to_string(PatchRole role) { return role == PatchRole::FG ? "FG" : "BG"; }

ImageRGB crop_patch(const Frame& f, const BoundingBox& box,
                    std::optional<std::pair<int, int>> resize_to) {
  if (!f.contains(box)) {
    throw std::invalid_argument("crop_patch: box outside frame");
  }
  ImageRGB out = crop(f.rgb, box);
  if (resize_to) {
    out = resize_bilinear(out, resize_to->first, resize_to->second);
  }
  return out;
}

std::string patch_file_name(const std::string& video_id, int frame_index, PatchRole role) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "_%06d.png", frame_index);
  const std::string dir = role == PatchRole::FG ? "fg/" : "bg/";
  return dir + video_id + buf;
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Manifest order: video, then frame, then FG before BG.
bool record_less(const PatchRecord& a, const PatchRecord& b) {
  if (a.video_id != b.video_id) return a.video_id < b.video_id;
  if (a.frame_index != b.frame_index) return a.frame_index < b.frame_index;
  return static_cast<int>(a.role) < static_cast<int>(b.role);
}

}  // namespace

std::string manifest_line(const PatchRecord& rec) {
  std::ostringstream os;
  os << "{\"video_id\":\"" << json_escape(rec.video_id) << "\""
     << ",\"frame_index\":" << rec.frame_index << ",\"x\":" << rec.box.x << ",\"y\":" << rec.box.y
     << ",\"w\":" << rec.box.w << ",\"h\":" << rec.box.h << ",\"role\":\"" << to_string(rec.role)
     << "\""
     << ",\"s_a\":" << fmt_real(rec.s_a) << ",\"s_m\":" << fmt_real(rec.s_m)
     << ",\"s\":" << fmt_real(rec.s);
  if (rec.cluster_score) {
    os << ",\"cluster_score\":" << fmt_real(*rec.cluster_score);
  }
  os << ",\"source\":\"" << to_string(rec.source) << "\""
     << ",\"file\":\"" << json_escape(rec.file) << "\"}";
  return os.str();
}

void write_manifest(std::vector<PatchRecord> records, const std::filesystem::path& path) {
  if (records.empty()) {
    throw std::invalid_argument("nothing mined");
  }
  std::stable_sort(records.begin(), records.end(), record_less);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  for (const PatchRecord& rec : records) {
    out << manifest_line(rec) << '\n';
  }
  if (!out) throw IoError("manifest write failed: " + path.string());
}

std::vector<PatchRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest: " + path.string());
  std::vector<PatchRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("manifest parse error at " + path.string() + ":" + std::to_string(line_no) +
                    ": " + e.what());
    }
    PatchRecord rec;
    rec.video_id = j.at("video_id").get<std::string>();
    rec.frame_index = j.at("frame_index").get<int>();
    rec.box = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
               j.at("h").get<int>()};
    const std::string role = j.at("role").get<std::string>();
    if (role != "FG" && role != "BG")
      throw IoError("manifest parse error at " + path.string() + ":" + std::to_string(line_no) +
                    ": unknown role '" + role + "'");
    rec.role = role == "FG" ? PatchRole::FG : PatchRole::BG;
    rec.s_a = j.at("s_a").get<double>();
    rec.s_m = j.at("s_m").get<double>();
    rec.s = j.at("s").get<double>();
    if (j.contains("cluster_score")) rec.cluster_score = j.at("cluster_score").get<double>();
    const std::string source = j.at("source").get<std::string>();
    if (source != "RGB" && source != "FLOW")
      throw IoError("manifest parse error at " + path.string() + ":" + std::to_string(line_no) +
                    ": unknown source '" + source + "'");
    rec.source = source == "RGB" ? ProposalSource::RGB : ProposalSource::FLOW;
    rec.file = j.at("file").get<std::string>();
    records.push_back(std::move(rec));
  }
  return records;
}

DatasetSummary export_dataset(std::vector<PatchRecord> records,
                              const std::vector<ImageRGB>& patch_images,
                              const std::filesystem::path& out_dir) {
  if (records.empty()) {
    throw std::invalid_argument("nothing mined");
  }
  if (records.size() != patch_images.size()) {
    throw std::invalid_argument("export_dataset: records and patch images misaligned");
  }

  std::set<std::string> seen;
  for (PatchRecord& rec : records) {
    rec.file = patch_file_name(rec.video_id, rec.frame_index, rec.role);
    if (!seen.insert(rec.file).second) {
      throw std::runtime_error("export_dataset: filename collision on " + rec.file +
                               " (duplicate input)");
    }
  }

  std::filesystem::create_directories(out_dir / "fg");
  std::filesystem::create_directories(out_dir / "bg");
  for (std::size_t i = 0; i < records.size(); ++i) {
    write_png(patch_images[i], out_dir / records[i].file);
  }

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return record_less(records[a], records[b]); });

  std::ofstream labels(out_dir / "labels.txt", std::ios::binary);
  if (!labels) throw IoError("cannot write labels.txt under " + out_dir.string());
  DatasetSummary summary;
  std::map<std::string, std::size_t> per_video;
  for (const std::size_t i : order) {
    const PatchRecord& rec = records[i];
    labels << rec.file << ' ' << (rec.role == PatchRole::FG ? 1 : 0) << '\n';
    if (rec.role == PatchRole::FG) {
      ++summary.fg_count;
    } else {
      ++summary.bg_count;
    }
    ++per_video[rec.video_id];
  }
  if (!labels) throw IoError("labels.txt write failed under " + out_dir.string());
  summary.per_video.assign(per_video.begin(), per_video.end());

  write_manifest(std::move(records), out_dir / "manifest.jsonl");
  return summary;
}

}  // namespace patchmine
