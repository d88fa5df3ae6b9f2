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

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace citerank {

/// Hard parse failure carrying a 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

// Rejects bytes that do not form well-formed UTF-8. Overlong encodings and
// surrogates are treated as undecodable.
inline bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    unsigned cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (len == 2 && cp < 0x80) return false;
    if (len == 3 && (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))) return false;
    if (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) return false;
    i += len;
  }
  return true;
}

}  // namespace detail

/// One parsed row plus its source line number (header is line 1).
struct DelimRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Reader for delimited text with RFC-4180-style quoting. The delimiter is
/// configurable (comma default, tab selectable). Quoted fields may contain
/// the delimiter, doubled quotes, and embedded newlines.
class DelimReader {
 public:
  explicit DelimReader(std::istream& in, char delim = ',')
      : in_(in), delim_(delim) {}

  /// Reads the next logical record. Returns false at end of input.
  bool next(DelimRow& row) {
    if (!fetch_record()) return false;
    row.line = record_line_;
    row.fields = std::move(fields_);
    return true;
  }

  std::size_t line() const { return line_; }

 private:
  bool fetch_record() {
    fields_.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int ch;
    record_line_ = line_ + 1;
    while ((ch = in_.get()) != std::istream::traits_type::eof()) {
      any = true;
      char c = static_cast<char>(ch);
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
      } else if (c == '"' && field.empty()) {
        in_quotes = true;
      } else if (c == delim_) {
        fields_.push_back(check(std::move(field)));
        field.clear();
      } else if (c == '\n') {
        ++line_;
        break;
      } else if (c == '\r') {
        // consumed; \r\n handled when \n follows
      } else {
        field.push_back(c);
      }
    }
    if (in_quotes) throw ParseError(record_line_, "unterminated quoted field");
    if (!any) return false;
    fields_.push_back(check(std::move(field)));
    return true;
  }

  std::string check(std::string field) {
    if (!detail::valid_utf8(field))
      throw ParseError(record_line_, "undecodable byte sequence");
    return field;
  }

  std::istream& in_;
  char delim_;
  std::size_t line_ = 0;         // lines fully consumed
  std::size_t record_line_ = 0;  // first line of the current record
  std::vector<std::string> fields_;
};

/// Writes one row, quoting fields only when needed.
inline void write_delim_row(std::ostream& out,
                            const std::vector<std::string>& fields,
                            char delim = ',') {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delim;
    const std::string& f = fields[i];
    if (f.find_first_of(std::string("\"\r\n") + delim) != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << "\"\"";
        else out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

/// Header-indexed view over a delimited stream. Column lookups are by name.
class DelimTable {
 public:
  DelimTable(std::istream& in, char delim = ',') : reader_(in, delim) {
    DelimRow header;
    if (!reader_.next(header) || header.fields.empty())
      throw ParseError(1, "missing header row");
    header_ = header.fields;
    for (std::size_t i = 0; i < header_.size(); ++i) columns_[header_[i]] = i;
  }

  bool has_column(const std::string& name) const {
    return columns_.count(name) != 0;
  }

  /// Index of a required column; throws naming the column when absent.
  std::size_t column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end())
      throw ParseError(1, "missing required column '" + name + "'");
    return it->second;
  }

  bool next(DelimRow& row) {
    while (reader_.next(row)) {
      if (row.fields.size() == 1 && row.fields[0].empty()) continue;  // blank line
      if (row.fields.size() != header_.size())
        throw ParseError(row.line, "expected " + std::to_string(header_.size()) +
                                       " fields, got " +
                                       std::to_string(row.fields.size()));
      return true;
    }
    return false;
  }

  const std::vector<std::string>& header() const { return header_; }

 private:
  DelimReader reader_;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> columns_;
};

}  // namespace citerank
