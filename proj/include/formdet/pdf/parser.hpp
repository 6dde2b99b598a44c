#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "formdet/pdf/object.hpp"

namespace formdet::pdf {

enum class TokenKind {
  kEof,
  kInteger,
  kReal,
  kName,
  kString,
  kHexString,
  kArrayOpen,
  kArrayClose,
  kDictOpen,
  kDictClose,
  kKeyword,
};

struct Token {
  TokenKind kind = TokenKind::kEof;
  std::string text;  // decoded bytes for names/strings, raw text otherwise
  std::int64_t int_value = 0;
  double real_value = 0.0;
  std::size_t offset = 0;
};

bool is_pdf_whitespace(char c);
bool is_pdf_delimiter(char c);

// Tokenizer for PDF object syntax and content streams. Never throws on
// malformed input; unknown bytes come back as single-character keywords.
class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0)
      : data_(data), pos_(pos) {}

  Token next();
  Token peek();

  void skip_whitespace();
  std::size_t position() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos < data_.size() ? pos : data_.size(); }
  bool at_end() const { return pos_ >= data_.size(); }
  std::string_view data() const { return data_; }

 private:
  Token read_number();
  Token read_name();
  Token read_literal_string();
  Token read_hex_string();

  std::string_view data_;
  std::size_t pos_ = 0;
};

// Parses direct objects (with "N G R" references). Throws MalformedPdf when
// the syntax cannot be recovered.
class Parser {
 public:
  explicit Parser(std::string_view data, std::size_t pos = 0)
      : lexer_(data, pos) {}

  Object parse_object();
  // Parses the object that starts with an already-consumed token.
  Object parse_from(Token tok);

  Lexer& lexer() { return lexer_; }

 private:
  Object parse_array();
  Object parse_dict();

  Lexer lexer_;
  int depth_ = 0;
};

}  // namespace formdet::pdf
