#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcr {

enum class TokenizationMode { Whitespace, PreTokenizedIds };

std::string_view to_string(TokenizationMode mode);
TokenizationMode parse_tokenization_mode(std::string_view name);

/// Ordered token units. In whitespace mode each unit is a surface string; in
/// pre-tokenized mode each unit is the decimal rendering of a caller id.
class TokenSeq {
 public:
  TokenSeq() = default;
  explicit TokenSeq(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}

  std::size_t length() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  TokenSeq prefix(std::size_t n) const;
  TokenSeq slice(std::size_t first, std::size_t last) const;
  TokenSeq concat(const TokenSeq& other) const;
  bool is_prefix_of(const TokenSeq& other) const;

  /// Tokens joined by single spaces.
  std::string joined() const;

  bool operator==(const TokenSeq&) const = default;

 private:
  std::vector<std::string> tokens_;
};

struct TokenizerOptions {
  TokenizationMode mode = TokenizationMode::Whitespace;
  // Marker strings are always emitted as standalone tokens in whitespace mode,
  // so "abc</think>xyz" yields three units.
  std::vector<std::string> markers = {"<think>", "</think>"};
};

/// Whitespace mode splits on runs of whitespace (isolating markers).
/// Pre-tokenized mode expects the text to be a whitespace-separated id list.
TokenSeq tokenize(std::string_view text, const TokenizerOptions& options = {});
TokenSeq tokenize_ids(std::span<const std::int64_t> ids);

}  // namespace lcr
