#include "formdet/pdf/writer.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "formdet/errors.hpp"
#include "formdet/pdf/parser.hpp"

namespace formdet::pdf {

namespace {

void write_name(const std::string& name, std::string& out) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  out.push_back('/');
  for (char c : name) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x21 || u > 0x7e || c == '#' || is_pdf_delimiter(c)) {
      out.push_back('#');
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xf]);
    } else {
      out.push_back(c);
    }
  }
}

void write_string(const String& s, std::string& out) {
  bool printable = !s.hex;
  for (char c : s.bytes) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u > 0x7e) {
      printable = false;
      break;
    }
  }
  if (!printable) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    out.push_back('<');
    for (char c : s.bytes) {
      auto u = static_cast<unsigned char>(c);
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xf]);
    }
    out.push_back('>');
    return;
  }
  out.push_back('(');
  for (char c : s.bytes) {
    if (c == '(' || c == ')' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back(')');
}

struct XrefRow {
  std::uint32_t num;
  int type;  // 0 free, 1 offset, 2 compressed
  std::uint64_t field2;
  std::uint32_t field3;
};

void put_be(std::string& out, std::uint64_t v, int width) {
  for (int i = width - 1; i >= 0; --i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

// Groups sorted object numbers into (first, count) runs.
std::vector<std::pair<std::uint32_t, std::uint32_t>> runs_of(
    const std::vector<XrefRow>& rows) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
  for (const auto& r : rows) {
    if (!runs.empty() && runs.back().first + runs.back().second == r.num) {
      ++runs.back().second;
    } else {
      runs.emplace_back(r.num, 1);
    }
  }
  return runs;
}

}  // namespace

std::string format_real(double v) {
  if (!std::isfinite(v)) return "0";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0" || s.empty()) s = "0";
  return s;
}

void serialize(const Object& obj, std::string& out) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Null>) {
          out += "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          out += v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out += std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          out += format_real(v);
        } else if constexpr (std::is_same_v<T, Name>) {
          write_name(v.value, out);
        } else if constexpr (std::is_same_v<T, String>) {
          write_string(v, out);
        } else if constexpr (std::is_same_v<T, Ref>) {
          out += std::to_string(v.num) + " " + std::to_string(v.gen) + " R";
        } else if constexpr (std::is_same_v<T, Array>) {
          out.push_back('[');
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i != 0) out.push_back(' ');
            serialize(v[i], out);
          }
          out.push_back(']');
        } else if constexpr (std::is_same_v<T, Dict>) {
          out += "<<";
          for (const auto& [k, val] : v) {
            write_name(k, out);
            out.push_back(' ');
            serialize(val, out);
          }
          out += ">>";
        } else if constexpr (std::is_same_v<T, Stream>) {
          Dict d = v.dict;
          d["Length"] = static_cast<std::int64_t>(v.data.size());
          serialize(Object(std::move(d)), out);
          out += "\nstream\n";
          out += v.data;
          out += "\nendstream";
        }
      },
      obj.value());
}

std::string serialize(const Object& obj) {
  std::string out;
  serialize(obj, out);
  return out;
}

IncrementalWriter::IncrementalWriter(const Document& doc)
    : doc_(doc), next_num_(doc.next_object_number()) {}

Ref IncrementalWriter::add(Object obj) {
  Ref r{next_num_++, 0};
  objects_[r.num] = {0, std::move(obj)};
  return r;
}

void IncrementalWriter::replace(Ref ref, Object obj) {
  objects_[ref.num] = {ref.gen, std::move(obj)};
}

std::string IncrementalWriter::finish() {
  std::string out = doc_.bytes();
  if (out.empty() || out.back() != '\n') out.push_back('\n');

  std::map<std::uint32_t, XrefRow> rows;
  const bool complete = doc_.reconstructed() || !doc_.last_xref_offset();
  bool has_compressed = false;
  for (const auto& [num, e] : doc_.xref()) {
    if (e.kind == XrefEntry::Kind::kCompressed) has_compressed = true;
    if (!complete) continue;
    switch (e.kind) {
      case XrefEntry::Kind::kOffset:
        rows[num] = {num, 1, e.offset, e.gen};
        break;
      case XrefEntry::Kind::kCompressed:
        rows[num] = {num, 2, e.offset, e.index};
        break;
      case XrefEntry::Kind::kFree:
        break;
    }
  }
  if (complete) rows[0] = {0, 0, 0, 65535};

  for (const auto& [num, entry] : objects_) {
    rows[num] = {num, 1, out.size(), entry.first};
    out += std::to_string(num) + " " + std::to_string(entry.first) + " obj\n";
    serialize(entry.second, out);
    out += "\nendobj\n";
  }

  Dict trailer;
  for (const char* key : {"Root", "Info", "ID"}) {
    if (const Object* v = find(doc_.trailer(), key)) trailer[key] = *v;
  }
  if (!complete) {
    trailer["Prev"] = static_cast<std::int64_t>(*doc_.last_xref_offset());
  }

  const bool as_stream = doc_.uses_xref_streams() || has_compressed;
  std::uint32_t size = next_num_;
  if (!rows.empty()) size = std::max(size, rows.rbegin()->first + 1);

  const std::size_t xref_offset = out.size();
  if (as_stream) {
    const std::uint32_t self = size;
    rows[self] = {self, 1, xref_offset, 0};
    size = self + 1;
    std::vector<XrefRow> list;
    for (const auto& [n, r] : rows) list.push_back(r);
    std::string data;
    Array index;
    for (auto [first, count] : runs_of(list)) {
      index.emplace_back(static_cast<std::int64_t>(first));
      index.emplace_back(static_cast<std::int64_t>(count));
    }
    for (const auto& r : list) {
      put_be(data, static_cast<std::uint64_t>(r.type), 1);
      put_be(data, r.field2, 5);
      put_be(data, r.field3, 4);
    }
    trailer["Type"] = Name{"XRef"};
    trailer["Size"] = static_cast<std::int64_t>(size);
    trailer["W"] = Array{Object(1), Object(5), Object(4)};
    trailer["Index"] = std::move(index);
    Stream xs{std::move(trailer), std::move(data)};
    out += std::to_string(self) + " 0 obj\n";
    serialize(Object(std::move(xs)), out);
    out += "\nendobj\n";
  } else {
    std::vector<XrefRow> list;
    for (const auto& [n, r] : rows) list.push_back(r);
    out += "xref\n";
    std::size_t i = 0;
    for (auto [first, count] : runs_of(list)) {
      out += std::to_string(first) + " " + std::to_string(count) + "\n";
      for (std::uint32_t k = 0; k < count; ++k, ++i) {
        char line[32];
        std::snprintf(line, sizeof(line), "%010llu %05u %c \n",
                      static_cast<unsigned long long>(list[i].field2),
                      list[i].type == 0 ? 65535u : list[i].field3,
                      list[i].type == 0 ? 'f' : 'n');
        out += line;
      }
    }
    trailer["Size"] = static_cast<std::int64_t>(size);
    out += "trailer\n";
    serialize(Object(std::move(trailer)), out);
    out += "\n";
  }
  out += "startxref\n" + std::to_string(xref_offset) + "\n%%EOF\n";
  return out;
}

}  // namespace formdet::pdf
