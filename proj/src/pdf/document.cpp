#include "formdet/pdf/document.hpp"

#include <algorithm>
#include <cstring>

#include "formdet/errors.hpp"
#include "formdet/pdf/filters.hpp"
#include "formdet/pdf/parser.hpp"

namespace formdet::pdf {

namespace {

const Object kNullObject{};
constexpr int kMaxRefChain = 32;
constexpr std::size_t kMaxPageTreeDepth = 64;

bool is_regular(char c) { return !is_pdf_whitespace(c) && !is_pdf_delimiter(c); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Reads "num gen obj" at offset; returns the object number and position after
// the keyword.
std::optional<std::pair<std::uint32_t, std::size_t>> read_obj_header(
    std::string_view data, std::size_t offset) {
  Lexer lex(data, offset);
  Token num = lex.next();
  Token gen = lex.next();
  Token kw = lex.next();
  if (num.kind != TokenKind::kInteger || gen.kind != TokenKind::kInteger ||
      kw.kind != TokenKind::kKeyword || kw.text != "obj" || num.int_value < 0) {
    return std::nullopt;
  }
  return std::make_pair(static_cast<std::uint32_t>(num.int_value), lex.position());
}

int int_param(const Dict* d, std::string_view key, int fallback) {
  if (d == nullptr) return fallback;
  if (const Object* o = find(*d, key)) {
    if (auto v = o->as_int()) return static_cast<int>(*v);
  }
  return fallback;
}

}  // namespace

Document::Document(std::string bytes) : data_(std::move(bytes)) {
  if (data_.empty()) throw MalformedPdf("empty input");
  std::size_t header = data_.find("%PDF-");
  if (header == std::string::npos || header > 1024) {
    throw MalformedPdf("missing %PDF header");
  }
  header_offset_ = header;

  load_xref();

  if (find(trailer_, "Encrypt") != nullptr) {
    throw EncryptedPdf("document is encrypted");
  }

  // A readable catalog is required; if the xref led us astray, rebuild.
  if (resolve_dict(find(trailer_, "Root") ? *find(trailer_, "Root") : kNullObject) ==
          nullptr &&
      !reconstructed_) {
    reconstruct();
    if (find(trailer_, "Encrypt") != nullptr) {
      throw EncryptedPdf("document is encrypted");
    }
  }
  const Object* root = find(trailer_, "Root");
  if (root == nullptr || resolve_dict(*root) == nullptr) {
    throw MalformedPdf("no document catalog");
  }
  build_page_tree();
  allow_rescan_ = true;
}

void Document::load_xref() {
  std::size_t pos = data_.rfind("startxref");
  bool ok = false;
  if (pos != std::string::npos) {
    Lexer lex(data_, pos + 9);
    Token t = lex.next();
    if (t.kind == TokenKind::kInteger && t.int_value >= 0) {
      auto offset = static_cast<std::size_t>(t.int_value);
      for (std::size_t candidate : {offset, offset + header_offset_}) {
        if (candidate >= data_.size()) continue;
        try {
          xref_.clear();
          trailer_.clear();
          uses_xref_streams_ = false;
          parse_xref_chain(candidate);
          if (find(trailer_, "Root") != nullptr) {
            last_xref_offset_ = candidate;
            ok = true;
            break;
          }
        } catch (const MalformedPdf&) {
          // fall through to the next candidate / reconstruction
        }
        if (header_offset_ == 0) break;
      }
    }
  }
  if (!ok) reconstruct();
}

void Document::parse_xref_chain(std::size_t offset) {
  std::set<std::size_t> visited;
  std::optional<std::size_t> next = offset;
  bool first = true;
  while (next && visited.insert(*next).second) {
    if (*next >= data_.size()) throw MalformedPdf("xref offset out of range");
    Dict section_trailer;
    Lexer lex(data_, *next);
    Token t = lex.peek();
    std::optional<std::size_t> prev;
    if (t.kind == TokenKind::kKeyword && t.text == "xref") {
      prev = parse_classic_section(*next, section_trailer);
      // Hybrid-reference files carry compressed objects in /XRefStm.
      if (const Object* stm = find(section_trailer, "XRefStm")) {
        if (auto off = stm->as_int(); off && *off >= 0) {
          Dict ignored;
          try {
            parse_stream_section(static_cast<std::size_t>(*off), ignored);
          } catch (const MalformedPdf&) {
            ++warnings_;
          }
        }
      }
    } else {
      prev = parse_stream_section(*next, section_trailer);
      if (first) uses_xref_streams_ = true;
    }
    for (auto& [k, v] : section_trailer) {
      static constexpr std::string_view kSectionOnly[] = {
          "Prev", "XRefStm", "Type", "W", "Index", "Length", "Filter",
          "DecodeParms", "DL"};
      if (std::find(std::begin(kSectionOnly), std::end(kSectionOnly), k) !=
          std::end(kSectionOnly)) {
        continue;
      }
      trailer_.try_emplace(k, v);
    }
    first = false;
    next = prev;
  }
}

std::optional<std::size_t> Document::parse_classic_section(std::size_t offset,
                                                            Dict& trailer_out) {
  Lexer lex(data_, offset);
  lex.next();  // "xref"
  while (true) {
    Token t = lex.next();
    if (t.kind == TokenKind::kKeyword && t.text == "trailer") break;
    if (t.kind != TokenKind::kInteger) throw MalformedPdf("bad xref subsection");
    Token count = lex.next();
    if (count.kind != TokenKind::kInteger || count.int_value < 0) {
      throw MalformedPdf("bad xref subsection count");
    }
    auto start = static_cast<std::uint32_t>(t.int_value);
    for (std::int64_t i = 0; i < count.int_value; ++i) {
      Token off = lex.next();
      Token gen = lex.next();
      Token kind = lex.next();
      if (off.kind != TokenKind::kInteger || gen.kind != TokenKind::kInteger ||
          kind.kind != TokenKind::kKeyword) {
        throw MalformedPdf("bad xref entry");
      }
      auto num = static_cast<std::uint32_t>(start + i);
      XrefEntry e;
      e.gen = static_cast<std::uint16_t>(gen.int_value);
      if (kind.text == "n") {
        e.kind = XrefEntry::Kind::kOffset;
        e.offset = static_cast<std::uint64_t>(off.int_value);
        if (e.offset == 0) continue;  // bogus "in use at 0" entries
      } else {
        e.kind = XrefEntry::Kind::kFree;
      }
      xref_.try_emplace(num, e);
    }
  }
  Parser p(data_, lex.position());
  Object tr = p.parse_object();
  if (!tr.is_dict()) throw MalformedPdf("trailer is not a dictionary");
  trailer_out = *tr.dict();
  if (const Object* prev = find(trailer_out, "Prev")) {
    if (auto v = prev->as_int(); v && *v >= 0) return static_cast<std::size_t>(*v);
  }
  return std::nullopt;
}

std::optional<std::size_t> Document::parse_stream_section(std::size_t offset,
                                                           Dict& trailer_out) {
  auto header = read_obj_header(data_, offset);
  if (!header) throw MalformedPdf("xref offset does not point at an object");
  Object obj = load_at(offset, header->first);
  const Stream* s = obj.stream();
  if (s == nullptr) throw MalformedPdf("xref object is not a stream");
  const Dict& d = s->dict;
  const Object* type = find(d, "Type");
  if (type == nullptr || !type->is_name("XRef")) {
    throw MalformedPdf("xref stream lacks /Type /XRef");
  }
  std::string raw = decode(*s);

  int w[3] = {1, 0, 0};
  const Object* wobj = find(d, "W");
  if (wobj == nullptr || wobj->array() == nullptr || wobj->array()->size() < 3) {
    throw MalformedPdf("xref stream lacks /W");
  }
  for (int i = 0; i < 3; ++i) {
    auto v = (*wobj->array())[i].as_int();
    if (!v || *v < 0 || *v > 8) throw MalformedPdf("bad /W entry");
    w[i] = static_cast<int>(*v);
  }
  std::int64_t size = 0;
  if (const Object* so = find(d, "Size")) size = so->as_int().value_or(0);
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
  if (const Object* idx = find(d, "Index"); idx && idx->array()) {
    const Array& a = *idx->array();
    for (std::size_t i = 0; i + 1 < a.size(); i += 2) {
      ranges.emplace_back(a[i].as_int().value_or(0), a[i + 1].as_int().value_or(0));
    }
  } else {
    ranges.emplace_back(0, size);
  }

  const std::size_t row = static_cast<std::size_t>(w[0] + w[1] + w[2]);
  std::size_t pos = 0;
  auto field = [&](int width, std::uint64_t fallback) {
    if (width == 0) return fallback;
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v = (v << 8) | static_cast<std::uint8_t>(raw[pos++]);
    }
    return v;
  };
  for (auto [start, count] : ranges) {
    for (std::int64_t i = 0; i < count; ++i) {
      if (pos + row > raw.size()) break;
      std::uint64_t type_v = field(w[0], 1);
      std::uint64_t f2 = field(w[1], 0);
      std::uint64_t f3 = field(w[2], 0);
      auto num = static_cast<std::uint32_t>(start + i);
      XrefEntry e;
      if (type_v == 1) {
        e.kind = XrefEntry::Kind::kOffset;
        e.offset = f2;
        e.gen = static_cast<std::uint16_t>(f3);
      } else if (type_v == 2) {
        e.kind = XrefEntry::Kind::kCompressed;
        e.offset = f2;
        e.index = static_cast<std::uint32_t>(f3);
      } else {
        e.kind = XrefEntry::Kind::kFree;
      }
      xref_.try_emplace(num, e);
    }
  }
  trailer_out = d;
  if (const Object* prev = find(d, "Prev")) {
    if (auto v = prev->as_int(); v && *v >= 0) return static_cast<std::size_t>(*v);
  }
  return std::nullopt;
}

void Document::reconstruct() {
  reconstructed_ = true;
  last_xref_offset_.reset();
  cache_.clear();
  objstm_index_.clear();
  objstm_data_.clear();
  scan_objects();
  cache_.clear();
  objstm_index_.clear();
  objstm_data_.clear();
  recover_trailer();
}

void Document::scan_objects() const {
  xref_.clear();
  // Every "N G obj" in file order; later definitions win.
  std::vector<std::uint32_t> order;
  std::size_t pos = 0;
  while ((pos = data_.find("obj", pos)) != std::string::npos) {
    std::size_t kw = pos;
    pos += 3;
    if (pos < data_.size() && is_regular(data_[pos])) continue;
    std::size_t p = kw;
    auto skip_ws_back = [&] {
      std::size_t n = 0;
      while (p > 0 && is_pdf_whitespace(data_[p - 1])) {
        --p;
        ++n;
      }
      return n;
    };
    auto digits_back = [&] {
      std::size_t n = 0;
      while (p > 0 && is_digit(data_[p - 1])) {
        --p;
        ++n;
      }
      return n;
    };
    if (skip_ws_back() == 0 || digits_back() == 0) continue;
    if (skip_ws_back() == 0 || digits_back() == 0) continue;
    if (p > 0 && is_regular(data_[p - 1])) continue;
    auto header = read_obj_header(data_, p);
    if (!header) continue;
    XrefEntry e;
    e.kind = XrefEntry::Kind::kOffset;
    e.offset = p;
    xref_[header->first] = e;
  }

  // Register the members of object streams that have no direct definition.
  std::vector<std::uint32_t> direct;
  for (const auto& [num, e] : xref_) direct.push_back(num);
  for (std::uint32_t num : direct) {
    Object obj;
    try {
      obj = load(num);
    } catch (const MalformedPdf&) {
      continue;
    }
    const Stream* s = obj.stream();
    if (s == nullptr) continue;
    const Object* type = find(s->dict, "Type");
    if (type == nullptr || !type->is_name("ObjStm")) continue;
    try {
      std::string body = decode(*s);
      int n = int_param(&s->dict, "N", 0);
      Lexer lex(body);
      for (int i = 0; i < n; ++i) {
        Token onum = lex.next();
        Token ooff = lex.next();
        if (onum.kind != TokenKind::kInteger || ooff.kind != TokenKind::kInteger) break;
        auto member = static_cast<std::uint32_t>(onum.int_value);
        if (xref_.count(member) != 0) continue;
        XrefEntry e;
        e.kind = XrefEntry::Kind::kCompressed;
        e.offset = num;
        e.index = static_cast<std::uint32_t>(i);
        xref_[member] = e;
      }
    } catch (const MalformedPdf&) {
      ++warnings_;
    }
  }
}

void Document::recover_trailer() {
  // Trailer: merge every "trailer" dictionary, later ones winning.
  trailer_.clear();
  std::size_t pos = 0;
  while ((pos = data_.find("trailer", pos)) != std::string::npos) {
    pos += 7;
    try {
      Parser p(data_, pos);
      Object t = p.parse_object();
      if (const Dict* d = t.dict()) {
        for (const auto& [k, v] : *d) trailer_[k] = v;
      }
    } catch (const MalformedPdf&) {
      ++warnings_;
    }
  }
  // Xref-stream dictionaries act as trailers too.
  for (const auto& [num, e] : xref_) {
    if (e.kind != XrefEntry::Kind::kOffset) continue;
    try {
      const Object& o = get(Ref{num, e.gen});
      const Stream* s = o.stream();
      if (s == nullptr) continue;
      const Object* type = find(s->dict, "Type");
      if (type == nullptr || !type->is_name("XRef")) continue;
      for (const char* key : {"Root", "Info", "ID", "Encrypt"}) {
        if (const Object* v = find(s->dict, key); v && !find(trailer_, key)) {
          trailer_[key] = *v;
        }
      }
    } catch (const MalformedPdf&) {
      ++warnings_;
    }
  }
  trailer_.erase("Prev");
  trailer_.erase("XRefStm");

  const Object* root = find(trailer_, "Root");
  if (root == nullptr || resolve_dict(*root) == nullptr) {
    std::optional<Ref> catalog;
    for (const auto& [num, e] : xref_) {
      try {
        const Object& o = get(Ref{num, 0});
        const Dict* d = o.dict();
        if (d == nullptr) continue;
        const Object* type = find(*d, "Type");
        if (type != nullptr && type->is_name("Catalog") && find(*d, "Pages")) {
          catalog = Ref{num, e.gen};
        }
      } catch (const MalformedPdf&) {
        ++warnings_;
      }
    }
    if (catalog) trailer_["Root"] = *catalog;
  }
}

std::size_t Document::stream_length_hint(const Dict& dict) const {
  const Object* len = find(dict, "Length");
  if (len == nullptr) return 0;
  if (len->is_ref()) {
    auto r = *len->as_ref();
    if (loading_.count(r.num) != 0) return 0;
  }
  auto v = resolve(*len).as_int();
  return v && *v > 0 ? static_cast<std::size_t>(*v) : 0;
}

Object Document::load_at(std::size_t offset, std::uint32_t expect_num) const {
  auto header = read_obj_header(data_, offset);
  if (!header || header->first != expect_num) {
    throw MalformedPdf("object " + std::to_string(expect_num) +
                       " not found at recorded offset");
  }
  Parser p(data_, header->second);
  Token first = p.lexer().next();
  if (first.kind == TokenKind::kKeyword && first.text == "endobj") return Null{};
  Object obj = p.parse_from(std::move(first));

  Token after = p.lexer().next();
  if (after.kind == TokenKind::kKeyword && after.text == "stream" && obj.is_dict()) {
    std::size_t start = after.offset + 6;
    if (start < data_.size() && data_[start] == '\r') ++start;
    if (start < data_.size() && data_[start] == '\n') ++start;

    std::size_t len = stream_length_hint(*obj.dict());
    std::size_t end = std::string::npos;
    if (len > 0 && start + len <= data_.size()) {
      Lexer check(data_, start + len);
      Token t = check.next();
      if (t.kind == TokenKind::kKeyword && t.text.rfind("endstream", 0) == 0) {
        end = start + len;
      }
    }
    if (end == std::string::npos) {
      std::size_t es = data_.find("endstream", start);
      if (es == std::string::npos) es = data_.size();
      end = es;
      if (end > start && data_[end - 1] == '\n') --end;
      if (end > start && data_[end - 1] == '\r') --end;
      ++warnings_;
    }
    Stream s;
    s.dict = std::move(*obj.dict());
    s.data = data_.substr(start, end - start);
    return s;
  }
  return obj;
}

Object Document::load_compressed(std::uint32_t stream_num, std::uint32_t index,
                                 std::uint32_t expect_num) const {
  auto it = objstm_index_.find(stream_num);
  if (it == objstm_index_.end()) {
    const Object& so = get(Ref{stream_num, 0});
    const Stream* s = so.stream();
    if (s == nullptr) throw MalformedPdf("object stream missing");
    std::string body = decode(*s);
    int n = int_param(&s->dict, "N", 0);
    int first = int_param(&s->dict, "First", 0);
    std::vector<std::pair<std::uint32_t, std::size_t>> entries;
    Lexer lex(body);
    for (int i = 0; i < n; ++i) {
      Token onum = lex.next();
      Token ooff = lex.next();
      if (onum.kind != TokenKind::kInteger || ooff.kind != TokenKind::kInteger) break;
      entries.emplace_back(static_cast<std::uint32_t>(onum.int_value),
                           static_cast<std::size_t>(first + ooff.int_value));
    }
    objstm_data_[stream_num] = std::move(body);
    it = objstm_index_.emplace(stream_num, std::move(entries)).first;
  }
  const auto& entries = it->second;
  const std::string& body = objstm_data_[stream_num];
  std::optional<std::size_t> offset;
  if (index < entries.size() && entries[index].first == expect_num) {
    offset = entries[index].second;
  } else {
    for (const auto& [num, off] : entries) {
      if (num == expect_num) offset = off;
    }
  }
  if (!offset || *offset >= body.size()) {
    throw MalformedPdf("object " + std::to_string(expect_num) +
                       " missing from object stream");
  }
  Parser p(body, *offset);
  return p.parse_object();
}

Object Document::load(std::uint32_t num) const {
  auto it = xref_.find(num);
  if (it == xref_.end()) return Null{};
  const XrefEntry e = it->second;
  switch (e.kind) {
    case XrefEntry::Kind::kFree:
      return Null{};
    case XrefEntry::Kind::kOffset:
      if (e.offset >= data_.size()) throw MalformedPdf("object offset past end");
      return load_at(static_cast<std::size_t>(e.offset), num);
    case XrefEntry::Kind::kCompressed:
      return load_compressed(static_cast<std::uint32_t>(e.offset), e.index, num);
  }
  return Null{};
}

const Object& Document::get(Ref ref) const {
  if (auto it = cache_.find(ref.num); it != cache_.end()) return it->second;
  if (loading_.count(ref.num) != 0) return kNullObject;  // reference cycle
  loading_.insert(ref.num);
  Object obj;
  try {
    obj = load(ref.num);
  } catch (const MalformedPdf&) {
    ++warnings_;
    // The xref table is probably off; a one-time rescan usually fixes it.
    if (allow_rescan_ && !reconstructed_) {
      reconstructed_ = true;
      scan_objects();
      try {
        obj = load(ref.num);
      } catch (const MalformedPdf&) {
        obj = Null{};
      }
    }
  }
  loading_.erase(ref.num);
  return cache_.emplace(ref.num, std::move(obj)).first->second;
}

const Object& Document::resolve(const Object& obj) const {
  const Object* cur = &obj;
  for (int i = 0; i < kMaxRefChain && cur->is_ref(); ++i) {
    cur = &get(*cur->as_ref());
  }
  return cur->is_ref() ? kNullObject : *cur;
}

const Dict* Document::resolve_dict(const Object& obj) const {
  return resolve(obj).dict();
}

const Array* Document::resolve_array(const Object& obj) const {
  return resolve(obj).array();
}

std::optional<double> Document::resolve_number(const Object& obj) const {
  return resolve(obj).as_number();
}

const Dict& Document::catalog() const {
  const Object* root = find(trailer_, "Root");
  const Dict* d = root ? resolve_dict(*root) : nullptr;
  if (d == nullptr) throw MalformedPdf("no document catalog");
  return *d;
}

std::optional<Ref> Document::catalog_ref() const {
  const Object* root = find(trailer_, "Root");
  return root ? root->as_ref() : std::nullopt;
}

std::string Document::decode(const Stream& stream) const {
  std::vector<std::string> filters;
  std::vector<const Dict*> parms;
  if (const Object* f = find(stream.dict, "Filter")) {
    const Object& fr = resolve(*f);
    if (const auto* n = fr.as_name()) {
      filters.push_back(*n);
    } else if (const Array* a = fr.array()) {
      for (const Object& o : *a) {
        if (const auto* n = resolve(o).as_name()) filters.push_back(*n);
      }
    }
  }
  if (const Object* p = find(stream.dict, "DecodeParms")) {
    const Object& pr = resolve(*p);
    if (const Dict* d = pr.dict()) {
      parms.push_back(d);
    } else if (const Array* a = pr.array()) {
      for (const Object& o : *a) parms.push_back(resolve_dict(o));
    }
  }
  parms.resize(filters.size(), nullptr);

  std::string data = stream.data;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const std::string& f = filters[i];
    const Dict* parm = parms[i];
    if (f == "FlateDecode" || f == "Fl") {
      data = flate_decode(data);
    } else if (f == "LZWDecode" || f == "LZW") {
      data = lzw_decode(data, int_param(parm, "EarlyChange", 1) != 0);
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      data = ascii_hex_decode(data);
      continue;
    } else if (f == "ASCII85Decode" || f == "A85") {
      data = ascii85_decode(data);
      continue;
    } else if (f == "RunLengthDecode" || f == "RL") {
      data = run_length_decode(data);
      continue;
    } else {
      throw MalformedPdf("unsupported stream filter /" + f);
    }
    int predictor = int_param(parm, "Predictor", 1);
    if (predictor > 1) {
      data = unpredict(data, predictor, int_param(parm, "Colors", 1),
                       int_param(parm, "BitsPerComponent", 8),
                       int_param(parm, "Columns", 1));
    }
  }
  return data;
}

void Document::build_page_tree() {
  const Dict& cat = catalog();
  const Object* pages_ref = find(cat, "Pages");
  if (pages_ref == nullptr) throw MalformedPdf("catalog has no /Pages");

  std::set<std::uint32_t> visited;
  struct Inherited {
    Object media_box, crop_box, rotate, resources;
  };
  auto walk = [&](auto&& self, const Object& node_ref, Inherited inh,
                  std::size_t depth) -> void {
    if (depth > kMaxPageTreeDepth) throw MalformedPdf("page tree too deep");
    auto ref = node_ref.as_ref();
    if (ref && !visited.insert(ref->num).second) {
      ++warnings_;
      return;  // cycle or shared node
    }
    const Dict* node = resolve_dict(node_ref);
    if (node == nullptr) {
      ++warnings_;
      return;
    }
    if (const Object* o = find(*node, "MediaBox")) inh.media_box = *o;
    if (const Object* o = find(*node, "CropBox")) inh.crop_box = *o;
    if (const Object* o = find(*node, "Rotate")) inh.rotate = *o;
    if (const Object* o = find(*node, "Resources")) inh.resources = *o;

    const Object* type = find(*node, "Type");
    const Object* kids = find(*node, "Kids");
    bool is_leaf = (type != nullptr && type->is_name("Page")) || kids == nullptr;
    if (is_leaf) {
      if (!ref) {
        ++warnings_;
        return;
      }
      PageNode page;
      page.ref = *ref;
      page.dict = node;
      page.media_box = inh.media_box;
      page.crop_box = inh.crop_box;
      page.rotate = inh.rotate;
      page.resources = inh.resources;
      pages_.push_back(std::move(page));
      return;
    }
    const Array* arr = resolve_array(*kids);
    if (arr == nullptr) {
      ++warnings_;
      return;
    }
    for (const Object& kid : *arr) self(self, kid, inh, depth + 1);
  };
  walk(walk, *pages_ref, Inherited{}, 0);
  if (pages_.empty()) throw MalformedPdf("page tree has no readable pages");
}

std::uint32_t Document::next_object_number() const {
  std::uint32_t n = 1;
  if (!xref_.empty()) n = xref_.rbegin()->first + 1;
  if (const Object* s = find(trailer_, "Size")) {
    if (auto v = s->as_int(); v && *v > 0) {
      n = std::max(n, static_cast<std::uint32_t>(*v));
    }
  }
  return n;
}

}  // namespace formdet::pdf
