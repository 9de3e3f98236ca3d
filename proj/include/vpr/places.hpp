#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vpr {

enum class Frame { utm, wgs84 };

std::string_view to_string(Frame frame);
Frame parse_frame(std::string_view value);  // throws UnknownFrame

// One geotagged image. For utm, x/y are easting/northing in meters; for wgs84
// they are longitude/latitude in degrees.
struct PlaceRecord {
  std::string id;
  std::filesystem::path image_path;
  Frame frame = Frame::utm;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const PlaceRecord&) const = default;
};

// Reads a JSON-lines manifest. The whole file is rejected on the first bad line.
std::vector<PlaceRecord> load_manifest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const std::vector<PlaceRecord>& records);

// Id lookup over one or more manifests; ids stay unique across all of them.
class PlaceIndex {
 public:
  PlaceIndex() = default;
  explicit PlaceIndex(const std::vector<PlaceRecord>& records) { add(records); }

  void add(const std::vector<PlaceRecord>& records);
  const PlaceRecord& at(std::string_view id) const;  // throws UnknownId
  const PlaceRecord* find(std::string_view id) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<PlaceRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace vpr
