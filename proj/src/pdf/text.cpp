#include "formdet/pdf/text.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "formdet/errors.hpp"
#include "formdet/pdf/parser.hpp"

namespace formdet::pdf {

namespace {

constexpr int kMaxFormDepth = 8;

// WinAnsiEncoding differs from Latin-1 only in 0x80..0x9F.
constexpr char32_t kWinAnsiHigh[32] = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
    0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0,      0x017D, 0,
    0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
    0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178};

std::string utf16be_to_utf8(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
    char32_t u = (static_cast<std::uint8_t>(s[i]) << 8) |
                 static_cast<std::uint8_t>(s[i + 1]);
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < s.size()) {
      char32_t lo = (static_cast<std::uint8_t>(s[i + 2]) << 8) |
                    static_cast<std::uint8_t>(s[i + 3]);
      if (lo >= 0xDC00 && lo <= 0xDFFF) {
        u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    append_utf8(out, u);
  }
  return out;
}

std::uint32_t code_value(std::string_view bytes) {
  std::uint32_t v = 0;
  for (char c : bytes) v = (v << 8) | static_cast<std::uint8_t>(c);
  return v;
}

class FontDecoder {
 public:
  static std::unique_ptr<FontDecoder> from_font(const Document& doc,
                                                const Dict* font) {
    auto dec = std::make_unique<FontDecoder>();
    if (font == nullptr) return dec;
    if (const Object* st = find(*font, "Subtype")) {
      dec->composite_ = doc.resolve(*st).is_name("Type0");
    }
    if (const Object* tu = find(*font, "ToUnicode")) {
      if (const Stream* s = doc.resolve(*tu).stream()) {
        try {
          dec->load_cmap(doc.decode(*s));
        } catch (const MalformedPdf&) {
          dec->cmap_.clear();
        }
      }
    }
    return dec;
  }

  std::string decode(std::string_view bytes) const {
    std::string out;
    if (!cmap_.empty()) {
      std::size_t i = 0;
      while (i < bytes.size()) {
        std::size_t len = code_length(bytes.substr(i));
        std::string_view code = bytes.substr(i, len);
        auto it = cmap_.find(code_value(code) | (static_cast<std::uint64_t>(len) << 32));
        if (it != cmap_.end()) out += it->second;
        i += len;
      }
      return out;
    }
    if (composite_) return out;  // CIDs without a mapping carry no text
    for (char c : bytes) {
      auto u = static_cast<std::uint8_t>(c);
      if (u < 0x20) continue;
      char32_t cp = u;
      if (u >= 0x80 && u <= 0x9F) cp = kWinAnsiHigh[u - 0x80];
      if (cp != 0) append_utf8(out, cp);
    }
    return out;
  }

 private:
  std::size_t code_length(std::string_view rest) const {
    for (const auto& [len, lo, hi] : ranges_) {
      if (rest.size() < len) continue;
      std::uint32_t v = code_value(rest.substr(0, len));
      if (v >= lo && v <= hi) return len;
    }
    std::size_t fallback = composite_ ? 2 : 1;
    return std::min(fallback, rest.size());
  }

  void load_cmap(const std::string& text) {
    Lexer lex(text);
    std::vector<Token> operands;
    while (true) {
      Token t = lex.next();
      if (t.kind == TokenKind::kEof) break;
      if (t.kind != TokenKind::kKeyword) {
        if (t.kind == TokenKind::kArrayOpen) {
          // bfrange destination arrays: collect hex strings until ']'
          Token arr;
          arr.kind = TokenKind::kArrayOpen;
          std::vector<std::string> items;
          while (true) {
            Token in = lex.next();
            if (in.kind == TokenKind::kArrayClose || in.kind == TokenKind::kEof) break;
            if (in.kind == TokenKind::kHexString || in.kind == TokenKind::kString) {
              items.push_back(in.text);
            }
          }
          array_items_.push_back(std::move(items));
          arr.int_value = static_cast<std::int64_t>(array_items_.size() - 1);
          operands.push_back(std::move(arr));
        } else {
          operands.push_back(std::move(t));
        }
        continue;
      }
      if (t.text == "endcodespacerange") {
        for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
          const std::string& lo = operands[i].text;
          const std::string& hi = operands[i + 1].text;
          if (lo.empty() || lo.size() > 4) continue;
          ranges_.push_back({lo.size(), code_value(lo), code_value(hi)});
        }
      } else if (t.text == "endbfchar") {
        for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
          const std::string& src = operands[i].text;
          if (src.empty() || src.size() > 4) continue;
          cmap_[key(src.size(), code_value(src))] = utf16be_to_utf8(operands[i + 1].text);
        }
      } else if (t.text == "endbfrange") {
        for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
          const std::string& lo_s = operands[i].text;
          if (lo_s.empty() || lo_s.size() > 4) continue;
          std::uint32_t lo = code_value(lo_s);
          std::uint32_t hi = code_value(operands[i + 1].text);
          if (hi < lo || hi - lo > 0xFFFF) continue;
          const Token& dst = operands[i + 2];
          if (dst.kind == TokenKind::kArrayOpen) {
            const auto& items = array_items_[static_cast<std::size_t>(dst.int_value)];
            for (std::uint32_t c = lo; c <= hi && c - lo < items.size(); ++c) {
              cmap_[key(lo_s.size(), c)] = utf16be_to_utf8(items[c - lo]);
            }
          } else {
            std::string base = dst.text;
            for (std::uint32_t c = lo; c <= hi; ++c) {
              cmap_[key(lo_s.size(), c)] = utf16be_to_utf8(base);
              // Increment the last UTF-16 unit for the next code.
              if (!base.empty()) {
                std::size_t k = base.size();
                while (k > 0) {
                  --k;
                  auto b = static_cast<std::uint8_t>(base[k]);
                  base[k] = static_cast<char>(b + 1);
                  if (b != 0xFF) break;
                }
              }
            }
          }
        }
      }
      operands.clear();
    }
    std::sort(ranges_.begin(), ranges_.end());
  }

  static std::uint64_t key(std::size_t len, std::uint32_t code) {
    return code | (static_cast<std::uint64_t>(len) << 32);
  }

  struct Range {
    std::size_t len;
    std::uint32_t lo;
    std::uint32_t hi;
    bool operator<(const Range& o) const {
      return std::tie(len, lo, hi) < std::tie(o.len, o.lo, o.hi);
    }
  };

  bool composite_ = false;
  std::vector<Range> ranges_;
  std::map<std::uint64_t, std::string> cmap_;
  std::vector<std::vector<std::string>> array_items_;
};

class TextExtractor {
 public:
  explicit TextExtractor(const Document& doc) : doc_(doc) {}

  void run(const std::string& content, const Dict* resources, int depth) {
    if (depth > kMaxFormDepth) return;
    Parser parser(content);
    Lexer& lex = parser.lexer();
    std::vector<Object> operands;
    const FontDecoder* font = &default_font_;

    while (true) {
      Token t = lex.next();
      if (t.kind == TokenKind::kEof) break;
      if (t.kind != TokenKind::kKeyword || t.text == "true" ||
          t.text == "false" || t.text == "null") {
        try {
          operands.push_back(parser.parse_from(std::move(t)));
        } catch (const MalformedPdf&) {
          operands.clear();
        }
        continue;
      }
      const std::string& op = t.text;
      if (op == "BI") {
        skip_inline_image(lex);
      } else if (op == "BT") {
        separate(' ');
      } else if (op == "Tf" && !operands.empty()) {
        if (const auto* name = operands.front().as_name()) {
          font = font_for(resources, *name);
        }
      } else if (op == "Tj" && !operands.empty()) {
        show(font, operands.back());
      } else if ((op == "'" || op == "\"") && !operands.empty()) {
        separate('\n');
        show(font, operands.back());
      } else if (op == "TJ" && !operands.empty()) {
        if (const Array* a = operands.back().array()) {
          for (const Object& item : *a) {
            if (item.is_string()) {
              show(font, item);
            } else if (auto n = item.as_number(); n && *n < -250.0) {
              separate(' ');
            }
          }
        }
      } else if ((op == "Td" || op == "TD") && operands.size() >= 2) {
        double ty = operands[1].as_number().value_or(0.0);
        separate(ty != 0.0 ? '\n' : ' ');
      } else if (op == "T*") {
        separate('\n');
      } else if (op == "Tm" && operands.size() >= 6) {
        double y = operands[5].as_number().value_or(0.0);
        if (last_tm_y_ && *last_tm_y_ != y) separate('\n');
        last_tm_y_ = y;
      } else if (op == "ET") {
        separate(' ');
      } else if (op == "Do" && !operands.empty()) {
        if (const auto* name = operands.front().as_name()) {
          run_form(resources, *name, depth);
        }
      }
      operands.clear();
    }
  }

  std::string take() {
    while (!out_.empty() && (out_.back() == ' ' || out_.back() == '\n')) out_.pop_back();
    return std::move(out_);
  }

 private:
  void separate(char c) {
    if (out_.empty()) return;
    char last = out_.back();
    if (last == '\n') return;
    if (c == '\n' && last == ' ') {
      out_.back() = '\n';
      return;
    }
    if (last != ' ') out_.push_back(c);
  }

  void show(const FontDecoder* font, const Object& s) {
    if (const auto* bytes = s.as_string()) out_ += font->decode(*bytes);
  }

  const FontDecoder* font_for(const Dict* resources, const std::string& name) {
    if (resources == nullptr) return &default_font_;
    const Object* fonts = find(*resources, "Font");
    const Dict* fd = fonts ? doc_.resolve_dict(*fonts) : nullptr;
    const Object* f = fd ? find(*fd, name) : nullptr;
    if (f == nullptr) return &default_font_;
    const Dict* font = doc_.resolve_dict(*f);
    auto it = fonts_.find(font);
    if (it == fonts_.end()) {
      it = fonts_.emplace(font, FontDecoder::from_font(doc_, font)).first;
    }
    return it->second.get();
  }

  void run_form(const Dict* resources, const std::string& name, int depth) {
    if (resources == nullptr) return;
    const Object* xo = find(*resources, "XObject");
    const Dict* xd = xo ? doc_.resolve_dict(*xo) : nullptr;
    const Object* entry = xd ? find(*xd, name) : nullptr;
    if (entry == nullptr) return;
    if (auto r = entry->as_ref()) {
      if (!active_forms_.insert(r->num).second) return;
    }
    const Stream* s = doc_.resolve(*entry).stream();
    if (s != nullptr) {
      const Object* st = find(s->dict, "Subtype");
      if (st != nullptr && st->is_name("Form")) {
        const Dict* form_res = resources;
        if (const Object* r = find(s->dict, "Resources")) {
          if (const Dict* d = doc_.resolve_dict(*r)) form_res = d;
        }
        try {
          run(doc_.decode(*s), form_res, depth + 1);
        } catch (const MalformedPdf&) {
        }
      }
    }
    if (auto r = entry->as_ref()) active_forms_.erase(r->num);
  }

  static void skip_inline_image(Lexer& lex) {
    // Skip dictionary tokens up to "ID", then binary data up to "EI".
    while (true) {
      Token t = lex.next();
      if (t.kind == TokenKind::kEof) return;
      if (t.kind == TokenKind::kKeyword && t.text == "ID") break;
    }
    std::string_view d = lex.data();
    std::size_t pos = lex.position() + 1;
    while (pos + 2 <= d.size()) {
      if (d[pos] == 'E' && d[pos + 1] == 'I' && is_pdf_whitespace(d[pos - 1]) &&
          (pos + 2 == d.size() || is_pdf_whitespace(d[pos + 2]))) {
        lex.seek(pos + 2);
        return;
      }
      ++pos;
    }
    lex.seek(d.size());
  }

  const Document& doc_;
  FontDecoder default_font_;
  std::map<const Dict*, std::unique_ptr<FontDecoder>> fonts_;
  std::set<std::uint32_t> active_forms_;
  std::optional<double> last_tm_y_;
  std::string out_;
};

}  // namespace

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string extract_text(const Document& doc, const PageNode& page) {
  const Object* contents = page.dict ? find(*page.dict, "Contents") : nullptr;
  if (contents == nullptr) return {};

  std::string content;
  auto append_stream = [&](const Object& o) {
    if (const Stream* s = doc.resolve(o).stream()) {
      try {
        content += doc.decode(*s);
        content.push_back('\n');
      } catch (const MalformedPdf&) {
      }
    }
  };
  const Object& c = doc.resolve(*contents);
  if (const Array* parts = c.array()) {
    for (const Object& part : *parts) append_stream(part);
  } else {
    append_stream(*contents);
  }

  TextExtractor ex(doc);
  ex.run(content, doc.resolve_dict(page.resources), 0);
  return ex.take();
}

}  // namespace formdet::pdf
