#include "test_support.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

namespace vpr::testing {

TempDir::TempDir() {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  do {
    path_ = base / ("vpr-test-" + std::to_string(rd()) + std::to_string(rd()));
  } while (!std::filesystem::create_directory(path_));
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_tiny_png(const std::filesystem::path& path) {
  static constexpr unsigned char kPng[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00,
      0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00, 0x0c, 0x49,
      0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xdf, 0xc0, 0x00, 0x00, 0x04, 0x01, 0x01, 0x80, 0xc5, 0x2a, 0x18, 0x5d,
      0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(kPng), sizeof kPng);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
}

PlaceIndex World::index() const {
  PlaceIndex index(database);
  index.add(queries);
  return index;
}

World make_world(std::uint64_t seed, const WorldConfig& cfg, const std::filesystem::path& image) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, cfg.extent_m);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, cfg.descriptor_noise_m);
  std::uniform_int_distribution<int> pick(0, cfg.num_places - 1);

  World world;
  world.database_descriptors = DescriptorSet(2);
  world.query_descriptors = DescriptorSet(2);
  for (int i = 0; i < cfg.num_places; ++i) {
    const double x = coord(rng), y = coord(rng);
    world.database.push_back({"db" + std::to_string(i), image, Frame::utm, x, y});
    const double v[] = {x + noise(rng), y + noise(rng)};
    world.database_descriptors.add(world.database.back().id, v);
  }
  for (int q = 0; q < cfg.num_queries; ++q) {
    const auto& anchor = world.database[pick(rng)];
    const double r = cfg.query_offset_m * std::sqrt(unit(rng));
    const double a = angle(rng);
    const double x = anchor.x + r * std::cos(a), y = anchor.y + r * std::sin(a);
    world.queries.push_back({"q" + std::to_string(q), image, Frame::utm, x, y});
    const double v[] = {x + noise(rng), y + noise(rng)};
    world.query_descriptors.add(world.queries.back().id, v);
  }
  return world;
}

namespace {

double reranked_r1(const std::vector<CandidateList>& coarse, const PlaceIndex& places,
                   const MockConfig& mock_cfg, ScoringKind kind) {
  ModelConfig model{"http://mock", "mock", 0.7, Seconds(5.0), 0, 4};
  Gateway gateway(std::make_shared<MockTransport>(mock_cfg), model);
  PipelineConfig pipeline;
  pipeline.mode.kind = kind;
  pipeline.model_tag = "mock";
  const PairScorer scorer(gateway, default_template(), pipeline);

  std::vector<Ranking> rankings;
  for (const auto& list : coarse) rankings.push_back(rerank_query(places.at(list.query_id), list, places, scorer));
  const auto ids = ranked_ids(rankings);
  return recall_at_k(ids, places, EvalConfig{25.0, {1}}).recall.at(1);
}

}  // namespace

TrialResult run_trial(std::uint64_t seed, const WorldConfig& world_cfg, const MockConfig& mock_cfg,
                      const std::filesystem::path& image, std::size_t top_n) {
  const World world = make_world(seed, world_cfg, image);
  const PlaceIndex places = world.index();
  const auto coarse = retrieve_batch(world.query_descriptors, world.database_descriptors, top_n, Metric::l2);

  MockConfig mock = mock_cfg;
  mock.seed = seed;
  TrialResult result;
  const auto coarse_ids = ranked_ids(coarse);
  result.coarse_r1 = recall_at_k(coarse_ids, places, EvalConfig{25.0, {1}}).recall.at(1);
  result.single_r1 = reranked_r1(coarse, places, mock, ScoringKind::single_pass);
  result.uasc_r1 = reranked_r1(coarse, places, mock, ScoringKind::uasc);
  return result;
}

}  // namespace vpr::testing
