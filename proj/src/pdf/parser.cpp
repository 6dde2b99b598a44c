#include "formdet/pdf/parser.hpp"

#include <charconv>
#include <cstdlib>

#include "formdet/errors.hpp"

namespace formdet::pdf {

namespace {

constexpr int kMaxNesting = 256;

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_regular(char c) { return !is_pdf_whitespace(c) && !is_pdf_delimiter(c); }

}  // namespace

bool is_pdf_whitespace(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' ||
         c == '\0';
}

bool is_pdf_delimiter(char c) {
  switch (c) {
    case '(': case ')': case '<': case '>': case '[': case ']':
    case '{': case '}': case '/': case '%':
      return true;
    default:
      return false;
  }
}

void Lexer::skip_whitespace() {
  while (pos_ < data_.size()) {
    char c = data_[pos_];
    if (is_pdf_whitespace(c)) {
      ++pos_;
    } else if (c == '%') {
      while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') {
        ++pos_;
      }
    } else {
      break;
    }
  }
}

Token Lexer::peek() {
  std::size_t saved = pos_;
  Token t = next();
  pos_ = saved;
  return t;
}

Token Lexer::next() {
  skip_whitespace();
  Token tok;
  tok.offset = pos_;
  if (pos_ >= data_.size()) return tok;

  char c = data_[pos_];
  switch (c) {
    case '/':
      return read_name();
    case '(':
      return read_literal_string();
    case '<':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
        pos_ += 2;
        tok.kind = TokenKind::kDictOpen;
        tok.text = "<<";
        return tok;
      }
      return read_hex_string();
    case '>':
      tok.kind = TokenKind::kKeyword;
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
        pos_ += 2;
        tok.kind = TokenKind::kDictClose;
        tok.text = ">>";
        return tok;
      }
      ++pos_;
      tok.text = ">";
      return tok;
    case '[':
      ++pos_;
      tok.kind = TokenKind::kArrayOpen;
      tok.text = "[";
      return tok;
    case ']':
      ++pos_;
      tok.kind = TokenKind::kArrayClose;
      tok.text = "]";
      return tok;
    case '{': case '}': case ')':
      ++pos_;
      tok.kind = TokenKind::kKeyword;
      tok.text = std::string(1, c);
      return tok;
    default:
      break;
  }

  if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.') {
    return read_number();
  }

  std::size_t start = pos_;
  while (pos_ < data_.size() && is_regular(data_[pos_])) ++pos_;
  tok.kind = TokenKind::kKeyword;
  tok.text = std::string(data_.substr(start, pos_ - start));
  return tok;
}

Token Lexer::read_number() {
  Token tok;
  tok.offset = pos_;
  std::size_t start = pos_;
  while (pos_ < data_.size() && is_regular(data_[pos_])) ++pos_;
  std::string_view text = data_.substr(start, pos_ - start);
  tok.text = std::string(text);

  // Tolerate doubled signs ("--5") which some producers emit.
  std::size_t i = 0;
  bool negative = false;
  while (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    if (text[i] == '-') negative = !negative;
    ++i;
  }
  std::string_view body = text.substr(i);
  bool has_dot = false;
  bool valid = !body.empty();
  bool any_digit = false;
  for (char ch : body) {
    if (ch == '.') {
      if (has_dot) valid = false;
      has_dot = true;
    } else if (ch >= '0' && ch <= '9') {
      any_digit = true;
    } else {
      valid = false;
    }
  }
  if (!valid || !any_digit) {
    tok.kind = TokenKind::kKeyword;
    return tok;
  }
  if (!has_dot) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec == std::errc()) {
      tok.kind = TokenKind::kInteger;
      tok.int_value = negative ? -v : v;
      tok.real_value = static_cast<double>(tok.int_value);
      return tok;
    }
  }
  std::string tmp(body);
  tok.kind = TokenKind::kReal;
  tok.real_value = std::strtod(tmp.c_str(), nullptr);
  if (negative) tok.real_value = -tok.real_value;
  return tok;
}

Token Lexer::read_name() {
  Token tok;
  tok.offset = pos_;
  tok.kind = TokenKind::kName;
  ++pos_;  // '/'
  while (pos_ < data_.size() && is_regular(data_[pos_])) {
    char c = data_[pos_];
    if (c == '#' && pos_ + 2 < data_.size() &&
        hex_value(data_[pos_ + 1]) >= 0 && hex_value(data_[pos_ + 2]) >= 0) {
      tok.text.push_back(static_cast<char>(hex_value(data_[pos_ + 1]) * 16 +
                                           hex_value(data_[pos_ + 2])));
      pos_ += 3;
    } else {
      tok.text.push_back(c);
      ++pos_;
    }
  }
  return tok;
}

Token Lexer::read_literal_string() {
  Token tok;
  tok.offset = pos_;
  tok.kind = TokenKind::kString;
  ++pos_;  // '('
  int depth = 1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '\\') {
      if (pos_ >= data_.size()) break;
      char e = data_[pos_++];
      switch (e) {
        case 'n': tok.text.push_back('\n'); break;
        case 'r': tok.text.push_back('\r'); break;
        case 't': tok.text.push_back('\t'); break;
        case 'b': tok.text.push_back('\b'); break;
        case 'f': tok.text.push_back('\f'); break;
        case '\r':
          if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
          break;
        case '\n':
          break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && pos_ < data_.size() &&
                            data_[pos_] >= '0' && data_[pos_] <= '7';
                 ++k) {
              v = v * 8 + (data_[pos_++] - '0');
            }
            tok.text.push_back(static_cast<char>(v & 0xff));
          } else {
            tok.text.push_back(e);
          }
      }
    } else if (c == '(') {
      ++depth;
      tok.text.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) return tok;
      tok.text.push_back(c);
    } else if (c == '\r') {
      if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
      tok.text.push_back('\n');
    } else {
      tok.text.push_back(c);
    }
  }
  return tok;  // unterminated: return what we have
}

Token Lexer::read_hex_string() {
  Token tok;
  tok.offset = pos_;
  tok.kind = TokenKind::kHexString;
  ++pos_;  // '<'
  int pending = -1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '>') break;
    int v = hex_value(c);
    if (v < 0) continue;
    if (pending < 0) {
      pending = v;
    } else {
      tok.text.push_back(static_cast<char>(pending * 16 + v));
      pending = -1;
    }
  }
  if (pending >= 0) tok.text.push_back(static_cast<char>(pending * 16));
  return tok;
}

Object Parser::parse_object() { return parse_from(lexer_.next()); }

Object Parser::parse_from(Token tok) {
  switch (tok.kind) {
    case TokenKind::kEof:
      throw MalformedPdf("unexpected end of data");
    case TokenKind::kInteger: {
      // Lookahead for "num gen R".
      std::size_t saved = lexer_.position();
      Token gen = lexer_.next();
      if (gen.kind == TokenKind::kInteger && tok.int_value >= 0 &&
          gen.int_value >= 0 && gen.int_value <= 65535) {
        Token r = lexer_.next();
        if (r.kind == TokenKind::kKeyword && r.text == "R") {
          return Ref{static_cast<std::uint32_t>(tok.int_value),
                     static_cast<std::uint16_t>(gen.int_value)};
        }
      }
      lexer_.seek(saved);
      return tok.int_value;
    }
    case TokenKind::kReal:
      return tok.real_value;
    case TokenKind::kName:
      return Name{std::move(tok.text)};
    case TokenKind::kString:
      return String{std::move(tok.text), false};
    case TokenKind::kHexString:
      return String{std::move(tok.text), true};
    case TokenKind::kArrayOpen:
      return parse_array();
    case TokenKind::kDictOpen:
      return parse_dict();
    case TokenKind::kKeyword:
      if (tok.text == "true") return true;
      if (tok.text == "false") return false;
      if (tok.text == "null") return Null{};
      throw MalformedPdf("unexpected keyword '" + tok.text + "' at offset " +
                         std::to_string(tok.offset));
    case TokenKind::kArrayClose:
    case TokenKind::kDictClose:
      throw MalformedPdf("unbalanced delimiter at offset " +
                         std::to_string(tok.offset));
  }
  throw MalformedPdf("unreachable token kind");
}

Object Parser::parse_array() {
  if (++depth_ > kMaxNesting) throw MalformedPdf("object nesting too deep");
  Array out;
  while (true) {
    Token t = lexer_.next();
    if (t.kind == TokenKind::kArrayClose) break;
    if (t.kind == TokenKind::kEof) throw MalformedPdf("unterminated array");
    if (t.kind == TokenKind::kKeyword &&
        (t.text == "endobj" || t.text == "stream")) {
      lexer_.seek(t.offset);
      break;  // missing ']' before end of object
    }
    out.push_back(parse_from(std::move(t)));
  }
  --depth_;
  return out;
}

Object Parser::parse_dict() {
  if (++depth_ > kMaxNesting) throw MalformedPdf("object nesting too deep");
  Dict out;
  while (true) {
    Token key = lexer_.next();
    if (key.kind == TokenKind::kDictClose) break;
    if (key.kind == TokenKind::kEof) throw MalformedPdf("unterminated dictionary");
    if (key.kind == TokenKind::kKeyword &&
        (key.text == "endobj" || key.text == "stream")) {
      lexer_.seek(key.offset);
      break;
    }
    if (key.kind != TokenKind::kName) {
      // Skip junk keys rather than failing the whole object.
      continue;
    }
    Token val = lexer_.next();
    if (val.kind == TokenKind::kDictClose) {
      out[key.text] = Null{};
      break;
    }
    out[key.text] = parse_from(std::move(val));
  }
  --depth_;
  return out;
}

}  // namespace formdet::pdf
