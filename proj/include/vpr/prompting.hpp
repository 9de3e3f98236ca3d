#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vpr/places.hpp"

namespace vpr {

struct PromptTemplate {
  std::string system_text;
  std::string user_text;
  std::string schema_version;

  bool operator==(const PromptTemplate&) const = default;
};

// The built-in place-comparison prompt: static-feature constraints, a 0.0-1.0
// scoring rubric and a mandatory four-key JSON verdict.
const PromptTemplate& default_template();

// Override file: system text, then a line reading exactly "---USER---", then user text.
PromptTemplate load_template_file(const std::filesystem::path& path);
PromptTemplate parse_template(std::string_view contents);
void validate(const PromptTemplate& tmpl);  // InvalidTemplate

// Stable fingerprint of both texts; part of the pair cache key.
std::string prompt_fingerprint(const PromptTemplate& tmpl);

struct ImagePayload {
  std::string media_type;
  std::string base64;

  bool operator==(const ImagePayload&) const = default;
};

struct TextPart {
  std::string text;
  bool operator==(const TextPart&) const = default;
};

using ContentPart = std::variant<TextPart, ImagePayload>;

enum class Role { system, user };

struct Message {
  Role role;
  std::vector<ContentPart> parts;

  bool operator==(const Message&) const = default;
};

struct MessageSequence {
  std::vector<Message> messages;

  bool operator==(const MessageSequence&) const = default;
};

struct ImageOptions {
  int max_side = 0;  // 0 keeps the original resolution
};

// Maps png/jpg/jpeg/webp to a media type; throws UnsupportedImageType otherwise.
std::string media_type_for(const std::filesystem::path& path);

ImagePayload encode_image_data_url(const std::filesystem::path& path, const ImageOptions& options = {});

// One system message, then one user message holding [text, query image, candidate image].
MessageSequence build_messages(const PlaceRecord& query, const PlaceRecord& candidate, const PromptTemplate& tmpl,
                               const ImageOptions& options = {});

// Throws InvalidTemplate when the sequence breaks the system/user/two-image layout.
void validate(const MessageSequence& messages);

// The "messages" array of a chat-completions request.
nlohmann::json to_wire(const MessageSequence& messages);

// Downscales an encoded image so its longer side is at most max_side, re-encoding in
// the same format. Returns the input unchanged when already small enough.
std::string downscale_image(const std::string& bytes, const std::string& media_type, int max_side);

}  // namespace vpr
