#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vpr/descriptors.hpp"
#include "vpr/evaluation.hpp"
#include "vpr/mock_model.hpp"
#include "vpr/pipeline.hpp"
#include "vpr/places.hpp"

namespace vpr::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Writes a valid 1x1 RGB PNG.
void write_tiny_png(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// 2D world: database places scattered uniformly over a square, each query placed a
// few metres from one database place. Descriptors are the planar location plus
// isotropic Gaussian noise and are compared with the l2 metric.
struct WorldConfig {
  int num_places = 200;
  int num_queries = 60;
  double extent_m = 1000.0;
  double query_offset_m = 10.0;
  double descriptor_noise_m = 20.0;
};

struct World {
  std::vector<PlaceRecord> database;
  std::vector<PlaceRecord> queries;
  DescriptorSet database_descriptors;
  DescriptorSet query_descriptors;
  PlaceIndex index() const;
};

World make_world(std::uint64_t seed, const WorldConfig& cfg, const std::filesystem::path& image);

struct TrialResult {
  double coarse_r1 = 0.0;
  double single_r1 = 0.0;
  double uasc_r1 = 0.0;
};

// Coarse top-n retrieval, then single-pass and UASC reranking with the mock model.
TrialResult run_trial(std::uint64_t seed, const WorldConfig& world_cfg, const MockConfig& mock_cfg,
                      const std::filesystem::path& image, std::size_t top_n = 20);

}  // namespace vpr::testing
