// Copyright 2026 the citerank authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace citerank {

/// Lower-cased, diacritic-stripped, whitespace-collapsed title text.
struct NormalizedTitle {
  std::string text;

  bool empty() const { return text.empty(); }
  friend bool operator==(const NormalizedTitle&, const NormalizedTitle&) = default;
};

/// Token -> frequency. No zero-count entries; tokens non-empty.
using TermVector = std::map<std::string, std::uint32_t>;

/// Link between a submission and an external publication id.
struct MatchRecord {
  std::string submission_id;
  std::string external_id;
  double similarity = 0.0;
  bool accepted = false;
  std::size_t candidate_count = 0;
};

namespace unicode {

inline const char* kErrNotUtf8 = "input is not valid UTF-8";

// Decodes one UTF-8 sequence starting at s[i]; advances i. Throws on
// malformed input.
inline char32_t decode_utf8(const std::string& s, std::size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) {
    ++i;
    return c;
  }
  std::size_t len;
  char32_t cp;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
  } else {
    throw std::invalid_argument(kErrNotUtf8);
  }
  if (i + len > s.size()) throw std::invalid_argument(kErrNotUtf8);
  for (std::size_t k = 1; k < len; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) throw std::invalid_argument(kErrNotUtf8);
    cp = (cp << 6) | (cc & 0x3F);
  }
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
      (len == 4 && cp < 0x10000) || (cp >= 0xD800 && cp <= 0xDFFF) ||
      cp > 0x10FFFF)
    throw std::invalid_argument(kErrNotUtf8);
  i += len;
  return cp;
}

inline void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_combining_mark(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) ||  // combining diacritical marks
         (cp >= 0x1AB0 && cp <= 0x1AFF) ||  // extended
         (cp >= 0x1DC0 && cp <= 0x1DFF) ||  // supplement
         (cp >= 0x20D0 && cp <= 0x20FF) ||  // for symbols
         (cp >= 0xFE20 && cp <= 0xFE2F);    // half marks
}

// Canonical decomposition base letter for precomposed Latin letters
// (Latin-1 Supplement and Latin Extended-A), already lower-cased.
// Returns 0 for codepoints with no base-plus-mark decomposition.
inline char32_t latin_base_lower(char32_t cp) {
  // Latin-1 Supplement. AE, ETH, THORN, O-stroke and sharp s do not
  // decompose canonically and are left alone.
  if (cp >= 0xC0 && cp <= 0xFF) {
    static const char tbl[64] = {
        // 0xC0..0xDF (upper)
        'a', 'a', 'a', 'a', 'a', 'a', 0,   'c', 'e', 'e', 'e', 'e', 'i',
        'i', 'i', 'i', 0,   'n', 'o', 'o', 'o', 'o', 'o', 0,   0,   'u',
        'u', 'u', 'u', 'y', 0,   0,
        // 0xE0..0xFF (lower)
        'a', 'a', 'a', 'a', 'a', 'a', 0,   'c', 'e', 'e', 'e', 'e', 'i',
        'i', 'i', 'i', 0,   'n', 'o', 'o', 'o', 'o', 'o', 0,   0,   'u',
        'u', 'u', 'u', 'y', 0,   'y'};
    return static_cast<char32_t>(tbl[cp - 0xC0]);
  }
  // Latin Extended-A. Non-decomposable letters (dz, l-stroke, o-e, eng,
  // d-stroke, h-stroke, t-stroke, dotless i, long s, kra) map to 0.
  if (cp >= 0x100 && cp <= 0x17F) {
    static const char tbl[128] = {
        'a', 'a', 'a', 'a', 'a', 'a', 'c', 'c', 'c', 'c', 'c', 'c', 'c',
        'c', 'd', 'd',                                              // 0100-010F
        0,   0,   'e', 'e', 'e', 'e', 'e', 'e', 'e', 'e', 'e', 'e', 'g',
        'g', 'g', 'g',                                              // 0110-011F
        'g', 'g', 'g', 'g', 'h', 'h', 0,   0,   'i', 'i', 'i', 'i', 'i',
        'i', 'i', 'i',                                              // 0120-012F
        'i', 0,   0,   0,   'j', 'j', 'k', 'k', 0,   'l', 'l', 'l', 'l',
        'l', 'l', 0,                                                // 0130-013F
        0,   0,   0,   'n', 'n', 'n', 'n', 'n', 'n', 0,   0,   0,   'o',
        'o', 'o', 'o',                                              // 0140-014F
        'o', 'o', 0,   0,   'r', 'r', 'r', 'r', 'r', 'r', 's', 's', 's',
        's', 's', 's',                                              // 0150-015F
        's', 's', 't', 't', 't', 't', 0,   0,   'u', 'u', 'u', 'u', 'u',
        'u', 'u', 'u',                                              // 0160-016F
        'u', 'u', 'u', 'u', 'w', 'w', 'y', 'y', 'y', 'z', 'z', 'z', 'z',
        'z', 'z', 0};                                               // 0170-017F
    return static_cast<char32_t>(tbl[cp - 0x100]);
  }
  // Latin Extended Additional (covers Vietnamese and transliteration marks).
  if (cp >= 0x1E00 && cp <= 0x1EFF) {
    static const char tbl[257] =
        "aabbbbbbccddddddddddeeeeeeeeeeffgghhhhhhhhhhiiiikkkkkkllllllllmm"
        "mmmmnnnnnnnnoooooooopppprrrrrrrrssssssssssttttttttuuuuuuuuuuvvvv"
        "wwwwwwwwwwxxxxyyzzzzzzhtwy\0\0\0\0\0\0aaaaaaaaaaaaaaaaaaaaaaaaeeeeeeee"
        "eeeeeeeeiiiioooooooooooooooooooooooouuuuuuuuuuuuuuyyyyyyyy\0\0\0\0\0\0";
    char b = tbl[cp - 0x1E00];
    return b ? static_cast<char32_t>(b) : 0;
  }
  return 0;
}

// Simple lowercase for scripts likely to appear in titles.
inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;  // Latin-1 upper
  if (cp >= 0x100 && cp <= 0x177 && (cp % 2 == 0)) return cp + 1;  // Ext-A pairs
  if (cp == 0x178) return 0xFF;                                    // Y diaeresis
  if (cp >= 0x179 && cp <= 0x17E && (cp % 2 == 1)) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                 // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  if (cp >= 0x1E00 && cp <= 0x1EFF && (cp % 2 == 0)) return cp + 1;
  return cp;
}

inline bool is_ascii_alnum(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

// Word character test after lowering/decomposition: ASCII alphanumerics plus
// non-ASCII letters. Punctuation and symbol blocks become separators.
inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) return is_ascii_alnum(cp);
  if (is_combining_mark(cp)) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x2070 && cp <= 0x2BFF) return false;  // super/sub, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp == 0xA0 || cp == 0xA1 || cp == 0xAB || cp == 0xBB || cp == 0xBF)
    return false;
  if ((cp >= 0xA2 && cp <= 0xBE) && !(cp == 0xAA || cp == 0xBA)) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;  // multiply / divide signs
  return true;
}

}  // namespace unicode

/// Case-folds, strips diacritics (canonical decomposition then removal of
/// combining marks), maps punctuation to single spaces and collapses
/// whitespace. Empty output is allowed for punctuation-only input.
inline NormalizedTitle normalize_title(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < raw.size()) {
    char32_t cp = unicode::decode_utf8(raw, i);
    cp = unicode::to_lower(cp);
    if (char32_t base = unicode::latin_base_lower(cp)) cp = base;
    if (unicode::is_combining_mark(cp)) continue;
    if (!unicode::is_word_char(cp)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    unicode::encode_utf8(cp, out);
  }
  return NormalizedTitle{std::move(out)};
}

/// Splits a normalized title into unigram term frequencies. Tokens are the
/// space-separated runs produced by normalize_title.
inline TermVector vectorize(const NormalizedTitle& title) {
  TermVector tv;
  std::size_t pos = 0;
  const std::string& t = title.text;
  while (pos < t.size()) {
    std::size_t end = t.find(' ', pos);
    if (end == std::string::npos) end = t.size();
    if (end > pos) ++tv[t.substr(pos, end - pos)];
    pos = end + 1;
  }
  return tv;
}

/// Cosine of two term-frequency vectors; 0 if either is empty.
inline double cosine_similarity(const TermVector& a, const TermVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  const TermVector& small = a.size() <= b.size() ? a : b;
  const TermVector& large = a.size() <= b.size() ? b : a;
  double dot = 0.0;
  for (const auto& [tok, cnt] : small) {
    auto it = large.find(tok);
    if (it != large.end()) dot += double(cnt) * double(it->second);
  }
  if (dot == 0.0) return 0.0;
  double na = 0.0, nb = 0.0;
  for (const auto& [tok, cnt] : a) na += double(cnt) * double(cnt);
  for (const auto& [tok, cnt] : b) nb += double(cnt) * double(cnt);
  // sqrt of the product keeps self-similarity exactly 1 for identical
  // integer count vectors
  double sim = dot / std::sqrt(na * nb);
  return sim > 1.0 ? 1.0 : sim;
}

/// Candidate publication as returned by a provider.
struct Candidate {
  std::string external_id;
  std::string title;
};

/// Picks the most similar candidate if its similarity reaches the threshold.
/// Ties on similarity break toward the lexicographically smallest external
/// id so results do not depend on candidate order.
inline std::optional<MatchRecord> select_match(
    const NormalizedTitle& query, const std::vector<Candidate>& candidates,
    double threshold = 0.9) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw std::invalid_argument("match threshold must be in (0, 1]");
  TermVector qv = vectorize(query);
  std::optional<MatchRecord> best;
  for (const auto& cand : candidates) {
    double sim = cosine_similarity(qv, vectorize(normalize_title(cand.title)));
    if (!best || sim > best->similarity ||
        (sim == best->similarity && cand.external_id < best->external_id)) {
      MatchRecord rec;
      rec.external_id = cand.external_id;
      rec.similarity = sim;
      rec.candidate_count = candidates.size();
      best = rec;
    }
  }
  if (!best || best->similarity < threshold) return std::nullopt;
  best->accepted = true;
  return best;
}

}  // namespace citerank
