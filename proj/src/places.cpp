#include "vpr/places.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;

std::string_view to_string(Frame frame) { return frame == Frame::utm ? "utm" : "wgs84"; }

Frame parse_frame(std::string_view value) {
  if (value == "utm") return Frame::utm;
  if (value == "wgs84") return Frame::wgs84;
  throw Error(ErrorCode::UnknownFrame, std::string(value));
}

namespace {

PlaceRecord parse_record(const std::string& line, std::size_t line_no) {
  const auto where = "line " + std::to_string(line_no);
  json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::ParseError, where + ": not a JSON object");

  auto string_field = [&](const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      throw Error(ErrorCode::ParseError, where + ": field '" + key + "' missing or not a string");
    }
    return it->get<std::string>();
  };
  auto number_field = [&](const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number()) {
      throw Error(ErrorCode::ParseError, where + ": field '" + key + "' missing or not a number");
    }
    return it->get<double>();
  };

  PlaceRecord rec;
  rec.id = string_field("id");
  if (rec.id.empty()) throw Error(ErrorCode::ParseError, where + ": empty id");
  rec.image_path = string_field("image");
  rec.frame = parse_frame(string_field("frame"));
  rec.x = number_field("x");
  rec.y = number_field("y");
  if (rec.frame == Frame::wgs84 && (rec.x < -180.0 || rec.x > 180.0 || rec.y < -90.0 || rec.y > 90.0)) {
    throw Error(ErrorCode::ParseError, where + ": wgs84 coordinates out of range");
  }
  return rec;
}

}  // namespace

std::vector<PlaceRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());

  std::vector<PlaceRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    PlaceRecord rec = parse_record(line, line_no);
    if (!seen.insert(rec.id).second) throw Error(ErrorCode::DuplicateId, rec.id);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_manifest(const std::filesystem::path& path, const std::vector<PlaceRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::StoreError, "cannot write " + path.string());
  for (const auto& rec : records) {
    json line = {{"id", rec.id},
                 {"image", rec.image_path.string()},
                 {"frame", to_string(rec.frame)},
                 {"x", rec.x},
                 {"y", rec.y}};
    out << line.dump() << '\n';
  }
}

void PlaceIndex::add(const std::vector<PlaceRecord>& records) {
  for (const auto& rec : records) {
    if (by_id_.contains(rec.id)) throw Error(ErrorCode::DuplicateId, rec.id);
    by_id_.emplace(rec.id, records_.size());
    records_.push_back(rec);
  }
}

const PlaceRecord* PlaceIndex::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

const PlaceRecord& PlaceIndex::at(std::string_view id) const {
  if (const auto* rec = find(id)) return *rec;
  throw Error(ErrorCode::UnknownId, std::string(id));
}

}  // namespace vpr
