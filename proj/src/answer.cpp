#include "lcr/answer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace lcr {

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::Rational: return "rational";
    case AnswerKind::Decimal: return "decimal";
    case AnswerKind::SymbolicText: return "symbolic-text";
  }
  return "symbolic-text";
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string collapse_lower(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (const char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

// Index of the brace closing the one at `open`, or npos.
std::size_t matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

constexpr std::array<std::string_view, 7> kWrapperCommands = {
    "\\boxed", "\\fbox", "\\text", "\\textbf", "\\mathrm", "\\mathbf", "\\displaystyle"};

constexpr std::array<std::string_view, 9> kDroppedCommands = {
    "\\left", "\\right", "\\displaystyle", "\\!", "\\,", "\\;", "\\:", "\\ ", "\\quad"};

bool strip_once(std::string& s) {
  const std::string before = s;
  std::string_view v = trim(s);

  while (!v.empty() && std::string_view(".,;:!?").find(v.back()) != std::string_view::npos) {
    v.remove_suffix(1);
    v = trim(v);
  }

  auto enclosed = [&](std::string_view open, std::string_view close) {
    return v.size() >= open.size() + close.size() && v.substr(0, open.size()) == open &&
           v.substr(v.size() - close.size()) == close;
  };
  if (enclosed("$$", "$$") && v.size() >= 4) {
    v = v.substr(2, v.size() - 4);
  } else if (enclosed("$", "$") && v.size() >= 2) {
    v = v.substr(1, v.size() - 2);
  } else if (enclosed("\\(", "\\)") || enclosed("\\[", "\\]")) {
    v = v.substr(2, v.size() - 4);
  } else if (!v.empty() && v.front() == '{' && matching_brace(v, 0) == v.size() - 1) {
    v = v.substr(1, v.size() - 2);
  } else {
    for (const auto cmd : kWrapperCommands) {
      if (v.size() > cmd.size() && v.substr(0, cmd.size()) == cmd && v[cmd.size()] == '{' &&
          matching_brace(v, cmd.size()) == v.size() - 1) {
        v = v.substr(cmd.size() + 1, v.size() - cmd.size() - 2);
        break;
      }
    }
  }

  std::string out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size();) {
    bool dropped = false;
    if (v[i] == '\\') {
      for (const auto cmd : kDroppedCommands) {
        if (v.substr(i, cmd.size()) != cmd) continue;
        const bool letter_cmd = is_alpha(cmd.back());
        const std::size_t next = i + cmd.size();
        if (letter_cmd && next < v.size() && is_alpha(v[next])) continue;
        i = next;
        out += ' ';
        dropped = true;
        break;
      }
      if (!dropped) {
        for (const std::string_view alias : {std::string_view("\\dfrac"), std::string_view("\\tfrac")}) {
          if (v.substr(i, alias.size()) == alias) {
            out += "\\frac";
            i += alias.size();
            dropped = true;
            break;
          }
        }
      }
    }
    if (!dropped) out += v[i++];
  }
  s = collapse_lower(out);
  return s != before;
}

std::optional<Rational> parse_fraction(std::string_view t) {
  bool negative = false;
  std::string_view v = t;
  if (v.substr(0, 6) == "\\frac{" || v.substr(0, 7) == "-\\frac{") {
    if (v.front() == '-') {
      negative = true;
      v.remove_prefix(1);
    }
    const std::size_t a_close = matching_brace(v, 5);
    if (a_close == std::string_view::npos || a_close + 1 >= v.size() || v[a_close + 1] != '{') return std::nullopt;
    const std::size_t b_close = matching_brace(v, a_close + 1);
    if (b_close != v.size() - 1) return std::nullopt;
    const auto a = parse_int64(trim(v.substr(6, a_close - 6)));
    const auto b = parse_int64(trim(v.substr(a_close + 2, b_close - a_close - 2)));
    if (!a || !b || *b == 0) return std::nullopt;
    try {
      Rational r(*a, *b);
      return negative ? -r : r;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  const auto slash = v.find('/');
  if (slash == std::string_view::npos || v.find('/', slash + 1) != std::string_view::npos) return std::nullopt;
  const auto a = parse_int64(trim(v.substr(0, slash)));
  const auto b = parse_int64(trim(v.substr(slash + 1)));
  if (!a || !b || *b == 0) return std::nullopt;
  try {
    return Rational(*a, *b);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<NormalizedAnswer> parse_decimal(std::string_view t) {
  bool negative = false;
  std::string_view v = t;
  if (!v.empty() && (v.front() == '-' || v.front() == '+')) {
    negative = v.front() == '-';
    v.remove_prefix(1);
  }
  const auto dot = v.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  std::string_view int_part = v.substr(0, dot);
  std::string_view frac_part = v.substr(dot + 1);
  if (frac_part.empty()) return std::nullopt;
  if (!std::all_of(int_part.begin(), int_part.end(), is_digit) ||
      !std::all_of(frac_part.begin(), frac_part.end(), is_digit))
    return std::nullopt;
  while (int_part.size() > 1 && int_part.front() == '0') int_part.remove_prefix(1);
  while (frac_part.size() > 1 && frac_part.back() == '0') frac_part.remove_suffix(1);
  std::string ip = int_part.empty() ? "0" : std::string(int_part);
  const std::string fp(frac_part);
  const bool zero = ip == "0" && fp == "0";
  NormalizedAnswer out;
  out.kind = AnswerKind::Decimal;
  out.value = (negative && !zero ? "-" : "") + ip + "." + fp;
  const auto whole = parse_int64(ip + fp);
  if (whole && fp.size() <= 18) {
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
    try {
      Rational r(*whole, scale);
      out.exact = negative ? -r : r;
    } catch (const std::exception&) {
    }
  }
  return out;
}

}  // namespace

NormalizedAnswer normalize_answer(std::string_view surface) {
  std::string s(surface);
  for (int guard = 0; guard < 64 && strip_once(s); ++guard) {
  }

  NormalizedAnswer out;
  if (const auto i = parse_int64(s)) {
    out.kind = AnswerKind::Rational;
    out.exact = Rational(*i);
  } else if (const auto f = parse_fraction(s)) {
    out.kind = AnswerKind::Rational;
    out.exact = *f;
  } else if (auto d = parse_decimal(s)) {
    return *d;
  } else {
    out.kind = AnswerKind::SymbolicText;
    out.value = s;
    return out;
  }
  out.value = out.exact->str();
  return out;
}

AnswerKey make_answer_key(std::string_view surface) {
  return AnswerKey{std::string(surface), normalize_answer(surface)};
}

bool answers_equivalent(const NormalizedAnswer& a, const NormalizedAnswer& b, const MatchOptions& options) {
  if (a.kind == b.kind) return a.value == b.value;
  if (options.strict_surface) return false;
  const bool numeric_pair = a.kind != AnswerKind::SymbolicText && b.kind != AnswerKind::SymbolicText;
  return numeric_pair && a.exact && b.exact && *a.exact == *b.exact;
}

namespace {

bool literal_blocker(char c) {
  return is_alnum(c) || c == '.' || c == '{' || c == '}' || c == '^' || c == '_' || c == '\\' || c == '-' ||
         c == '+' || c == '/';
}

// Number literals ([sign] digits [.digits] [/digits]) that stand alone inside
// a token, e.g. "42" in "(42)," but nothing inside "x2", "{1}" or "2^3".
std::vector<std::string_view> number_literals(std::string_view tok) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < tok.size()) {
    std::size_t start = i;
    const bool signed_start = (tok[i] == '-' || tok[i] == '+') && i + 1 < tok.size() && is_digit(tok[i + 1]);
    if (!is_digit(tok[i]) && !signed_start) {
      ++i;
      continue;
    }
    const char prev = start > 0 ? tok[start - 1] : ' ';
    std::size_t j = start + (signed_start ? 1 : 0);
    while (j < tok.size() && is_digit(tok[j])) ++j;
    if (j + 1 < tok.size() && tok[j] == '.' && is_digit(tok[j + 1])) {
      ++j;
      while (j < tok.size() && is_digit(tok[j])) ++j;
    }
    if (j + 1 < tok.size() && tok[j] == '/' && is_digit(tok[j + 1])) {
      ++j;
      while (j < tok.size() && is_digit(tok[j])) ++j;
    }
    const char next = j < tok.size() ? tok[j] : ' ';
    const bool next_blocks = is_alnum(next) || next == '{' || next == '}' || next == '^' || next == '_' ||
                             (next == '.' && j + 1 < tok.size() && is_digit(tok[j + 1]));
    if (!literal_blocker(prev) && !next_blocks) out.push_back(tok.substr(start, j - start));
    i = j;
  }
  return out;
}

std::string join_range(const TokenSeq& seq, std::size_t first, std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out += ' ';
    out += seq[i];
  }
  return out;
}

struct Best {
  std::optional<CandidateSpan> span;

  void offer(const TokenSeq& seq, std::size_t first, std::size_t last, NormalizedAnswer normalized) {
    if (span && (last > span->end_token || (last == span->end_token && first <= span->start_token))) return;
    span = CandidateSpan{first, last, join_range(seq, first, last), std::move(normalized)};
  }
};

constexpr std::size_t kMaxBoxedTokens = 64;

}  // namespace

std::optional<CandidateSpan> detect_first_answer(const TokenSeq& thinking, const AnswerKey& key,
                                                 const MatchOptions& options) {
  const std::size_t n = thinking.length();
  const std::size_t key_len = std::max<std::size_t>(1, tokenize(key.surface).length());
  Best best;
  auto check = [&](std::size_t first, std::size_t last, NormalizedAnswer cand) {
    if (answers_equivalent(cand, key.normalized, options)) best.offer(thinking, first, last, std::move(cand));
  };

  for (std::size_t i = 0; i < n; ++i) {
    // Every candidate starting here ends at or after i + 1.
    if (best.span && best.span->end_token <= i) break;
    const std::string& tok = thinking[i];

    for (const auto lit : number_literals(tok)) check(i, i + 1, normalize_answer(lit));
    check(i, i + 1, normalize_answer(tok));

    if (i + 2 < n && thinking[i + 1] == "/") check(i, i + 3, normalize_answer(join_range(thinking, i, i + 3)));

    if (key_len > 1 && i + key_len <= n) check(i, i + key_len, normalize_answer(join_range(thinking, i, i + key_len)));

    const auto boxed = tok.find("\\boxed{");
    if (boxed != std::string::npos) {
      // Balance braces across tokens, starting from the boxed opener.
      int depth = 0;
      for (std::size_t j = i; j < n && j < i + kMaxBoxedTokens; ++j) {
        const std::string& t = thinking[j];
        for (std::size_t c = (j == i ? boxed : 0); c < t.size(); ++c) {
          if (t[c] == '{') ++depth;
          if (t[c] == '}') --depth;
        }
        if (depth <= 0) {
          std::string text = join_range(thinking, i, j + 1).substr(boxed);
          const auto close = text.rfind('}');
          check(i, j + 1, normalize_answer(text.substr(0, close + 1)));
          break;
        }
      }
    }
  }
  return best.span;
}

std::optional<CandidateSpan> last_boxed(const TokenSeq& tokens) {
  std::optional<CandidateSpan> out;
  const std::size_t n = tokens.length();
  for (std::size_t i = 0; i < n; ++i) {
    const auto boxed = tokens[i].find("\\boxed{");
    if (boxed == std::string::npos) continue;
    int depth = 0;
    for (std::size_t j = i; j < n; ++j) {
      const std::string& t = tokens[j];
      for (std::size_t c = (j == i ? boxed : 0); c < t.size(); ++c) {
        if (t[c] == '{') ++depth;
        if (t[c] == '}') --depth;
      }
      if (depth <= 0) {
        std::string text = join_range(tokens, i, j + 1).substr(boxed);
        const auto close = text.rfind('}');
        text = text.substr(0, close + 1);
        out = CandidateSpan{i, j + 1, join_range(tokens, i, j + 1), normalize_answer(text)};
        break;
      }
    }
  }
  return out;
}

bool judge_answer(const TokenSeq& answer_part, const AnswerKey& key, const MatchOptions& options) {
  if (const auto boxed = last_boxed(answer_part)) return answers_equivalent(boxed->normalized, key.normalized, options);
  return detect_first_answer(answer_part, key, options).has_value();
}

}  // namespace lcr
