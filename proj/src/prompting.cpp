#include "vpr/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vpr/encoding.hpp"
#include "vpr/error.hpp"

namespace vpr {

using nlohmann::json;

namespace {

constexpr std::string_view kUserMarker = "---USER---";

std::string trim_blank_lines(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string read_file(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, std::string(what) + ": " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

PromptTemplate parse_template(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  std::string line, system, user;
  bool in_user = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!in_user && line == kUserMarker) {
      in_user = true;
      continue;
    }
    (in_user ? user : system) += line + '\n';
  }
  if (!in_user) throw Error(ErrorCode::InvalidTemplate, "missing '---USER---' marker line");
  PromptTemplate tmpl{trim_blank_lines(system), trim_blank_lines(user), "custom"};
  validate(tmpl);
  return tmpl;
}

PromptTemplate load_template_file(const std::filesystem::path& path) {
  return parse_template(read_file(path, "prompt file"));
}

void validate(const PromptTemplate& tmpl) {
  if (tmpl.system_text.empty()) throw Error(ErrorCode::InvalidTemplate, "empty system text");
  if (tmpl.user_text.empty()) throw Error(ErrorCode::InvalidTemplate, "empty user text");
  if (tmpl.user_text.find("similarity_score") == std::string::npos) {
    throw Error(ErrorCode::InvalidTemplate, "user text must mention the similarity_score key");
  }
}

std::string prompt_fingerprint(const PromptTemplate& tmpl) {
  auto h = fnv1a64(tmpl.system_text);
  h = fnv1a64(kUserMarker, h);
  h = fnv1a64(tmpl.user_text, h);
  return to_hex(h);
}

std::string media_type_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == "png") return "image/png";
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "webp") return "image/webp";
  throw Error(ErrorCode::UnsupportedImageType, ext.empty() ? path.string() : ext);
}

ImagePayload encode_image_data_url(const std::filesystem::path& path, const ImageOptions& options) {
  std::string media_type = media_type_for(path);
  std::string bytes = read_file(path, "image");
  if (options.max_side > 0) bytes = downscale_image(bytes, media_type, options.max_side);
  return {std::move(media_type), base64_encode(bytes)};
}

MessageSequence build_messages(const PlaceRecord& query, const PlaceRecord& candidate, const PromptTemplate& tmpl,
                               const ImageOptions& options) {
  auto encode = [&](const PlaceRecord& rec, std::string_view role) {
    try {
      return encode_image_data_url(rec.image_path, options);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(role) + " '" + rec.id + "' (" + rec.image_path.string() + ")");
    }
  };
  ImagePayload query_image = encode(query, "query");
  ImagePayload candidate_image = encode(candidate, "candidate");

  MessageSequence seq;
  seq.messages.push_back({Role::system, {TextPart{tmpl.system_text}}});
  seq.messages.push_back({Role::user, {TextPart{tmpl.user_text}, std::move(query_image), std::move(candidate_image)}});
  return seq;
}

void validate(const MessageSequence& seq) {
  if (seq.messages.size() != 2 || seq.messages[0].role != Role::system || seq.messages[1].role != Role::user) {
    throw Error(ErrorCode::InvalidTemplate, "expected exactly one system message followed by one user message");
  }
  const auto& user = seq.messages[1].parts;
  const auto images = std::count_if(user.begin(), user.end(),
                                    [](const ContentPart& p) { return std::holds_alternative<ImagePayload>(p); });
  if (images != 2 || images == static_cast<std::ptrdiff_t>(user.size())) {
    throw Error(ErrorCode::InvalidTemplate, "user message needs two images and at least one text part");
  }
}

json to_wire(const MessageSequence& seq) {
  json messages = json::array();
  for (const auto& message : seq.messages) {
    json content = json::array();
    for (const auto& part : message.parts) {
      if (const auto* text = std::get_if<TextPart>(&part)) {
        content.push_back({{"type", "text"}, {"text", text->text}});
      } else {
        const auto& image = std::get<ImagePayload>(part);
        content.push_back(
            {{"type", "image_url"}, {"image_url", {{"url", "data:" + image.media_type + ";base64," + image.base64}}}});
      }
    }
    messages.push_back({{"role", message.role == Role::system ? "system" : "user"}, {"content", std::move(content)}});
  }
  return messages;
}

}  // namespace vpr
