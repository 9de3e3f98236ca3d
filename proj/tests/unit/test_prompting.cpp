#include <variant>

#include "unit_helpers.hpp"
#include "vpr/encoding.hpp"
#include "vpr/prompting.hpp"

using namespace vpr;
using vpr::testing::TempDir;
using vpr::testing::read_file;
using vpr::testing::write_file;
using vpr::testing::write_tiny_png;

TEST(DefaultTemplate, CarriesRubricAndOutputKeys) {
  const auto& t = default_template();
  EXPECT_NO_THROW(validate(t));
  EXPECT_NE(t.system_text.find("You are an expert in visual place recognition"), std::string::npos);
  for (const char* anchor : {"1.0", "0.8-0.99", "0.5-0.79", "0.2-0.49", "0.0-0.19"}) {
    EXPECT_NE(t.user_text.find(anchor), std::string::npos) << anchor;
  }
  for (const char* key : {"similarity_score", "justification", "key_matching_objects", "key_mismatched_objects"}) {
    EXPECT_NE(t.user_text.find(key), std::string::npos) << key;
  }
}

TEST(TemplateFile, ParsesSectionsAndRejectsBadFiles) {
  const auto t = parse_template("Be a judge.\n---USER---\nScore it; reply with similarity_score.\n");
  EXPECT_EQ(t.system_text, "Be a judge.");
  EXPECT_EQ(t.user_text, "Score it; reply with similarity_score.");
  EXPECT_VPR_ERROR(parse_template("no marker here"), ErrorCode::InvalidTemplate);
  EXPECT_VPR_ERROR(parse_template("sys\n---USER---\n   \n"), ErrorCode::InvalidTemplate);
  EXPECT_VPR_ERROR(parse_template("sys\n---USER---\nno score key\n"), ErrorCode::InvalidTemplate);
  EXPECT_NE(prompt_fingerprint(t), prompt_fingerprint(default_template()));
  EXPECT_EQ(prompt_fingerprint(t), prompt_fingerprint(parse_template("Be a judge.\n---USER---\nScore it; reply with similarity_score.\n")));
}

TEST(ImageEncoding, PngRoundTripsAndTypesMap) {
  TempDir dir;
  write_tiny_png(dir / "a.png");
  const auto payload = encode_image_data_url(dir / "a.png");
  EXPECT_EQ(payload.media_type, "image/png");
  EXPECT_EQ(base64_decode(payload.base64), read_file(dir / "a.png"));
  EXPECT_EQ(media_type_for("a.jpg"), "image/jpeg");
  EXPECT_EQ(media_type_for("B.JPEG"), "image/jpeg");
  EXPECT_EQ(media_type_for("c.webp"), "image/webp");
  EXPECT_VPR_ERROR(media_type_for("a.tiff"), ErrorCode::UnsupportedImageType);
  EXPECT_VPR_ERROR(encode_image_data_url(dir / "absent.png"), ErrorCode::MissingFile);
}

TEST(BuildMessages, SystemThenUserWithTextAndTwoImages) {
  TempDir dir;
  write_tiny_png(dir / "q.png");
  write_file(dir / "c.jpg", "not really a jpeg");
  const PlaceRecord q{"q1", dir / "q.png", Frame::utm, 0, 0};
  const PlaceRecord c{"c1", dir / "c.jpg", Frame::utm, 0, 0};
  const auto seq = build_messages(q, c, default_template());
  ASSERT_EQ(seq.messages.size(), 2u);
  EXPECT_EQ(seq.messages[0].role, Role::system);
  const auto& user = seq.messages[1];
  EXPECT_EQ(user.role, Role::user);
  ASSERT_EQ(user.parts.size(), 3u);
  EXPECT_EQ(std::get<TextPart>(user.parts[0]).text, default_template().user_text);
  EXPECT_EQ(std::get<ImagePayload>(user.parts[1]).media_type, "image/png");
  EXPECT_EQ(base64_decode(std::get<ImagePayload>(user.parts[2]).base64), "not really a jpeg");
  EXPECT_NO_THROW(validate(seq));
  EXPECT_EQ(seq, build_messages(q, c, default_template()));

  const auto custom = parse_template("S\n---USER---\nU similarity_score\n");
  const auto seq2 = build_messages(q, c, custom);
  ASSERT_EQ(seq2.messages.size(), 2u);
  EXPECT_EQ(std::get<TextPart>(seq2.messages[0].parts[0]).text, "S");
  EXPECT_EQ(std::get<TextPart>(seq2.messages[1].parts[0]).text, "U similarity_score");
  EXPECT_EQ(seq2.messages[1].parts.size(), 3u);
}

TEST(BuildMessages, MissingCandidateImageNamesTheCandidate) {
  TempDir dir;
  write_tiny_png(dir / "q.png");
  const PlaceRecord q{"q1", dir / "q.png", Frame::utm, 0, 0};
  const PlaceRecord c{"cand7", dir / "gone.png", Frame::utm, 0, 0};
  try {
    build_messages(q, c, default_template());
    FAIL() << "expected MissingFile";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
    EXPECT_NE(std::string(e.what()).find("candidate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("cand7"), std::string::npos);
  }
}

TEST(BuildMessages, WireFormat) {
  TempDir dir;
  write_tiny_png(dir / "q.png");
  const PlaceRecord q{"q1", dir / "q.png", Frame::utm, 0, 0};
  const auto wire = to_wire(build_messages(q, q, default_template()));
  ASSERT_TRUE(wire.is_array());
  ASSERT_EQ(wire.size(), 2u);
  EXPECT_EQ(wire[0]["role"], "system");
  EXPECT_EQ(wire[1]["role"], "user");
  const auto& parts = wire[1]["content"];
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0]["type"], "text");
  EXPECT_EQ(parts[1]["type"], "image_url");
  const std::string url = parts[1]["image_url"]["url"];
  EXPECT_EQ(url, "data:image/png;base64," + base64_encode(read_file(dir / "q.png")));
}

TEST(BuildMessages, ValidateRejectsBrokenLayouts) {
  MessageSequence seq;
  EXPECT_VPR_ERROR(validate(seq), ErrorCode::InvalidTemplate);
  seq.messages.push_back({Role::system, {TextPart{"s"}}});
  seq.messages.push_back({Role::user, {TextPart{"u"}, ImagePayload{"image/png", "AA=="}}});
  EXPECT_VPR_ERROR(validate(seq), ErrorCode::InvalidTemplate);
}


namespace {
std::pair<std::uint32_t, std::uint32_t> png_size(const std::string& bytes) {
  auto be32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes.at(at + i));
    return v;
  };
  return {be32(16), be32(20)};
}
}  // namespace

TEST(Downscale, CapsLongerSideAndKeepsSmallImages) {
  const auto original = read_file(test_data("gradient_40x20.png"));
  ASSERT_EQ(png_size(original), (std::pair<std::uint32_t, std::uint32_t>{40, 20}));
  EXPECT_EQ(downscale_image(original, "image/png", 0), original);
  std::string smaller;
  try {
    smaller = downscale_image(original, "image/png", 10);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) GTEST_SKIP() << "built without image support";
    throw;
  }
  EXPECT_EQ(png_size(smaller), (std::pair<std::uint32_t, std::uint32_t>{10, 5}));
  EXPECT_EQ(downscale_image(original, "image/png", 64), original);
  EXPECT_VPR_ERROR(downscale_image("garbage", "image/png", 10), ErrorCode::ImageCodecError);
}
