#include "lcr/tokens.hpp"

#include <cctype>
#include <stdexcept>

namespace lcr {

std::string_view to_string(TokenizationMode mode) {
  switch (mode) {
    case TokenizationMode::Whitespace: return "whitespace";
    case TokenizationMode::PreTokenizedIds: return "ids";
  }
  return "whitespace";
}

TokenizationMode parse_tokenization_mode(std::string_view name) {
  if (name == "whitespace") return TokenizationMode::Whitespace;
  if (name == "ids" || name == "pre-tokenized") return TokenizationMode::PreTokenizedIds;
  throw std::invalid_argument("unknown tokenization mode: " + std::string(name));
}

TokenSeq TokenSeq::prefix(std::size_t n) const { return slice(0, n); }

TokenSeq TokenSeq::slice(std::size_t first, std::size_t last) const {
  if (first > last || last > tokens_.size()) throw std::out_of_range("token slice out of range");
  return TokenSeq({tokens_.begin() + static_cast<std::ptrdiff_t>(first),
                   tokens_.begin() + static_cast<std::ptrdiff_t>(last)});
}

TokenSeq TokenSeq::concat(const TokenSeq& other) const {
  std::vector<std::string> out = tokens_;
  out.insert(out.end(), other.tokens_.begin(), other.tokens_.end());
  return TokenSeq(std::move(out));
}

bool TokenSeq::is_prefix_of(const TokenSeq& other) const {
  if (tokens_.size() > other.tokens_.size()) return false;
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (tokens_[i] != other.tokens_[i]) return false;
  return true;
}

std::string TokenSeq::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i) out += ' ';
    out += tokens_[i];
  }
  return out;
}

namespace {

void push_word(std::string_view word, const std::vector<std::string>& markers, std::vector<std::string>& out) {
  while (!word.empty()) {
    // earliest marker occurrence; longer marker wins ties
    std::size_t best = std::string_view::npos;
    std::size_t best_len = 0;
    for (const auto& m : markers) {
      if (m.empty()) continue;
      const auto pos = word.find(m);
      if (pos == std::string_view::npos) continue;
      if (pos < best || (pos == best && m.size() > best_len)) {
        best = pos;
        best_len = m.size();
      }
    }
    if (best == std::string_view::npos) {
      out.emplace_back(word);
      return;
    }
    if (best > 0) out.emplace_back(word.substr(0, best));
    out.emplace_back(word.substr(best, best_len));
    word.remove_prefix(best + best_len);
  }
}

}  // namespace

TokenSeq tokenize(std::string_view text, const TokenizerOptions& options) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    const auto word = text.substr(start, i - start);
    if (options.mode == TokenizationMode::Whitespace) {
      push_word(word, options.markers, out);
    } else {
      out.emplace_back(word);
    }
  }
  return TokenSeq(std::move(out));
}

TokenSeq tokenize_ids(std::span<const std::int64_t> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const auto id : ids) out.push_back(std::to_string(id));
  return TokenSeq(std::move(out));
}

}  // namespace lcr
