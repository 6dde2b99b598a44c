#include "pdf_fixtures.hpp"

#include <zlib.h>

#include <cstdio>
#include <map>
#include <stdexcept>

namespace fixtures {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string ref(int n) { return std::to_string(n) + " 0 R"; }

std::string literal(const std::string& s) {
  std::string out = "(";
  for (char c : s) {
    if (c == '(' || c == ')' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + ")";
}

std::string deflate(const std::string& in) {
  uLongf len = compressBound(static_cast<uLong>(in.size()));
  std::string out(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &len,
                reinterpret_cast<const Bytef*>(in.data()), static_cast<uLong>(in.size()), 9) != Z_OK) {
    throw std::runtime_error("compress2 failed");
  }
  out.resize(len);
  return out;
}

struct Obj {
  std::string body;     // dictionary or other direct object
  std::string stream;   // stream payload when is_stream
  bool is_stream = false;
};

class Assembler {
 public:
  int reserve() {
    objs_.emplace_back();
    return static_cast<int>(objs_.size());
  }
  void set(int n, std::string body) { objs_[n - 1].body = std::move(body); }
  void set_stream(int n, std::string dict_entries, std::string data) {
    objs_[n - 1].is_stream = true;
    objs_[n - 1].body = std::move(dict_entries);
    objs_[n - 1].stream = std::move(data);
  }
  int add(std::string body) {
    int n = reserve();
    set(n, std::move(body));
    return n;
  }
  int add_stream(std::string dict_entries, std::string data) {
    int n = reserve();
    set_stream(n, std::move(dict_entries), std::move(data));
    return n;
  }

  std::string classic(const std::string& trailer_extra) const {
    std::string out = "%PDF-1.7\n%\xE2\xE3\xCF\xD3\n";
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < objs_.size(); ++i) {
      offsets.push_back(out.size());
      out += std::to_string(i + 1) + " 0 obj\n" + render(objs_[i]) + "\nendobj\n";
    }
    std::size_t xref = out.size();
    out += "xref\n0 " + std::to_string(objs_.size() + 1) + "\n0000000000 65535 f \n";
    for (std::size_t off : offsets) {
      char line[32];
      std::snprintf(line, sizeof line, "%010zu 00000 n \n", off);
      out += line;
    }
    out += "trailer\n<< /Size " + std::to_string(objs_.size() + 1) + " /Root 1 0 R" +
           trailer_extra + " >>\nstartxref\n" + std::to_string(xref) + "\n%%EOF\n";
    return out;
  }

  // Non-stream objects go into one compressed object stream.
  std::string with_xref_stream(const std::string& trailer_extra) const {
    std::string out = "%PDF-1.7\n%\xE2\xE3\xCF\xD3\n";
    const int objstm_num = static_cast<int>(objs_.size()) + 1;
    const int xref_num = objstm_num + 1;
    std::map<int, std::pair<int, int>> entries;  // num -> (type, field2/field3 packed below)
    std::map<int, std::size_t> offsets;
    std::map<int, int> index_in_stm;

    std::string header, bodies;
    int count = 0;
    for (std::size_t i = 0; i < objs_.size(); ++i) {
      if (objs_[i].is_stream) continue;
      header += std::to_string(i + 1) + " " + std::to_string(bodies.size()) + " ";
      bodies += objs_[i].body + "\n";
      index_in_stm[static_cast<int>(i + 1)] = count++;
    }
    for (std::size_t i = 0; i < objs_.size(); ++i) {
      if (!objs_[i].is_stream) continue;
      offsets[static_cast<int>(i + 1)] = out.size();
      out += std::to_string(i + 1) + " 0 obj\n" + render(objs_[i]) + "\nendobj\n";
    }
    std::string stm_data = deflate(header + bodies);
    offsets[objstm_num] = out.size();
    out += std::to_string(objstm_num) + " 0 obj\n<< /Type /ObjStm /N " + std::to_string(count) +
           " /First " + std::to_string(header.size()) + " /Filter /FlateDecode /Length " +
           std::to_string(stm_data.size()) + " >>\nstream\n" + stm_data + "\nendstream\nendobj\n";

    const std::size_t xref_off = out.size();
    offsets[xref_num] = xref_off;
    std::string rows;
    auto put = [&](int type, std::uint32_t f2, std::uint16_t f3) {
      rows.push_back(static_cast<char>(type));
      for (int s = 24; s >= 0; s -= 8) rows.push_back(static_cast<char>((f2 >> s) & 0xff));
      rows.push_back(static_cast<char>(f3 >> 8));
      rows.push_back(static_cast<char>(f3 & 0xff));
    };
    put(0, 0, 65535);
    for (int n = 1; n <= xref_num; ++n) {
      if (auto it = index_in_stm.find(n); it != index_in_stm.end()) {
        put(2, static_cast<std::uint32_t>(objstm_num), static_cast<std::uint16_t>(it->second));
      } else {
        put(1, static_cast<std::uint32_t>(offsets.at(n)), 0);
      }
    }
    out += std::to_string(xref_num) + " 0 obj\n<< /Type /XRef /Size " + std::to_string(xref_num + 1) +
           " /W [1 4 2] /Root 1 0 R" + trailer_extra + " /Length " + std::to_string(rows.size()) +
           " >>\nstream\n" + rows + "\nendstream\nendobj\nstartxref\n" + std::to_string(xref_off) +
           "\n%%EOF\n";
    return out;
  }

 private:
  static std::string render(const Obj& o) {
    if (!o.is_stream) return o.body;
    return "<< " + o.body + " /Length " + std::to_string(o.stream.size()) + " >>\nstream\n" +
           o.stream + "\nendstream";
  }

  std::vector<Obj> objs_;
};

std::string rect(double x0, double y0, double x1, double y1) {
  return "[" + num(x0) + " " + num(y0) + " " + num(x1) + " " + num(y1) + "]";
}

std::string page_content(const Page& p) {
  std::string c;
  if (p.image_only) {
    c += "q 200 0 0 200 100 300 cm /Im1 Do Q\n";
    return c;
  }
  if (!p.text.empty()) {
    c += "BT /F1 12 Tf 14 TL 72 720 Td\n";
    std::size_t start = 0;
    bool first = true;
    while (start <= p.text.size()) {
      std::size_t end = p.text.find('\n', start);
      if (end == std::string::npos) end = p.text.size();
      c += (first ? "" : "T* ") + literal(p.text.substr(start, end - start)) + " Tj\n";
      first = false;
      start = end + 1;
    }
    c += "ET\n";
  }
  c += "0.9 g 36 36 m 576 36 l S\n";
  return c;
}

}  // namespace

std::string build(const Spec& spec) {
  Assembler a;
  const int catalog = a.reserve();
  const int pages_root = a.reserve();
  const int font = a.add("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>");
  const int image = a.add_stream("/Type /XObject /Subtype /Image /Width 2 /Height 2 /ColorSpace /DeviceRGB /BitsPerComponent 8",
                                 std::string("\x10\x20\x30\x40\x50\x60\x70\x80\x90\xa0\xb0\xc0", 12));

  std::vector<int> page_nums;
  for (std::size_t i = 0; i < spec.pages.size(); ++i) page_nums.push_back(a.reserve());

  std::map<int, std::vector<int>> annots;
  std::vector<int> field_nums;
  for (const Field& f : spec.fields) {
    int n = a.reserve();
    std::string d = "<< /Type /Annot /Subtype /Widget /FT /" + f.ft + " /Rect " +
                    rect(f.x0, f.y0, f.x1, f.y1) + " /F " + std::to_string(f.annot_flags) +
                    " /P " + ref(page_nums.at(static_cast<std::size_t>(f.page)));
    if (!f.name.empty()) d += " /T " + literal(f.name);
    if (f.ff != 0) d += " /Ff " + std::to_string(f.ff);
    if (f.ft == "Btn" && !(f.ff & kFlagPushbutton)) d += " /AS /Off /V /Off";
    d += " >>";
    a.set(n, d);
    if (f.listed_in_annots) annots[f.page].push_back(n);
    if (f.listed_in_fields) field_nums.push_back(n);
  }
  for (const RadioGroup& g : spec.radios) {
    int parent = a.reserve();
    std::string kids;
    for (const auto& k : g.kids) {
      int kid = a.add("<< /Type /Annot /Subtype /Widget /Parent " + ref(parent) + " /Rect " +
                      rect(k[0], k[1], k[2], k[3]) + " /F 4 /AS /Off /P " +
                      ref(page_nums.at(static_cast<std::size_t>(g.page))) + " >>");
      annots[g.page].push_back(kid);
      kids += ref(kid) + " ";
    }
    a.set(parent, "<< /FT /Btn /Ff " + std::to_string(kFlagRadio | (1 << 14)) + " /T " +
                      literal(g.name) + " /V /Off /Kids [" + kids + "] >>");
    field_nums.push_back(parent);
  }

  for (std::size_t i = 0; i < spec.pages.size(); ++i) {
    const Page& p = spec.pages[i];
    std::string content = page_content(p);
    int contents = spec.compress_content ? a.add_stream("/Filter /FlateDecode", deflate(content))
                                         : a.add_stream("", content);
    std::string d = "<< /Type /Page /Parent " + ref(pages_root);
    if (!p.inherit_media) {
      if (p.media_box) {
        const auto& m = *p.media_box;
        d += " /MediaBox " + rect(m[0], m[1], m[2], m[3]);
      } else {
        d += " /MediaBox " + rect(0, 0, p.width, p.height);
      }
    }
    if (p.rotate != 0) d += " /Rotate " + std::to_string(p.rotate);
    d += " /Resources << /Font << /F1 " + ref(font) + " >> /XObject << /Im1 " + ref(image) +
         " >> >> /Contents " + ref(contents);
    if (auto it = annots.find(static_cast<int>(i)); it != annots.end()) {
      d += " /Annots [";
      for (int n : it->second) d += ref(n) + " ";
      d += "]";
    }
    d += " >>";
    a.set(page_nums[i], d);
  }

  std::string kids;
  for (int n : page_nums) kids += ref(n) + " ";
  std::string root = "<< /Type /Pages /Kids [" + kids + "] /Count " + std::to_string(page_nums.size());
  if (spec.root_media_box) {
    const auto& m = *spec.root_media_box;
    root += " /MediaBox " + rect(m[0], m[1], m[2], m[3]);
  }
  a.set(pages_root, root + " >>");

  std::string cat = "<< /Type /Catalog /Pages " + ref(pages_root);
  if (spec.acroform || spec.xfa || !spec.fields.empty() || !spec.radios.empty()) {
    std::string fields;
    for (int n : field_nums) fields += ref(n) + " ";
    cat += " /AcroForm << /Fields [" + fields + "]";
    if (spec.xfa) {
      int xfa = a.add_stream("", "<xdp:xdp xmlns:xdp=\"http://ns.adobe.com/xdp/\"><template/></xdp:xdp>");
      cat += " /XFA " + ref(xfa);
    }
    cat += " >>";
  }
  a.set(catalog, cat + " >>");

  std::string trailer_extra = " /ID [<0123456789abcdef0123456789abcdef> <0123456789abcdef0123456789abcdef>]";
  if (spec.encrypt) {
    int enc = a.add("<< /Filter /Standard /V 1 /R 2 /O <" + std::string(64, 'a') + "> /U <" +
                    std::string(64, 'b') + "> /P -4 >>");
    trailer_extra += " /Encrypt " + ref(enc);
  }
  return spec.xref_stream ? a.with_xref_stream(trailer_extra) : a.classic(trailer_extra);
}

namespace {

Field make(const char* ft, int ff, int page, double x0, double y0, double x1, double y1,
           std::string name) {
  Field f;
  f.ft = ft;
  f.ff = ff;
  f.page = page;
  f.x0 = x0;
  f.y0 = y0;
  f.x1 = x1;
  f.y1 = y1;
  f.name = std::move(name);
  return f;
}

}  // namespace

Field text(int page, double x0, double y0, double x1, double y1, std::string name) {
  return make("Tx", 0, page, x0, y0, x1, y1, std::move(name));
}
Field checkbox(int page, double x0, double y0, double x1, double y1, std::string name) {
  return make("Btn", 0, page, x0, y0, x1, y1, std::move(name));
}
Field pushbutton(int page, double x0, double y0, double x1, double y1, std::string name) {
  return make("Btn", kFlagPushbutton, page, x0, y0, x1, y1, std::move(name));
}
Field signature(int page, double x0, double y0, double x1, double y1, std::string name) {
  return make("Sig", 0, page, x0, y0, x1, y1, std::move(name));
}
Field choice(int page, double x0, double y0, double x1, double y1, std::string name) {
  return make("Ch", 0, page, x0, y0, x1, y1, std::move(name));
}

std::string flat_pdf(int pages, const std::string& text) {
  Spec s;
  s.pages.clear();
  for (int i = 0; i < pages; ++i) {
    Page p;
    p.text = text + (pages > 1 ? " page " + std::to_string(i) : "");
    s.pages.push_back(p);
  }
  return build(s);
}

std::string text_and_checkbox_pdf() {
  Spec s;
  s.pages[0].text = "Name";
  s.fields.push_back(text(0, 100, 700, 300, 720, "name"));
  s.fields.push_back(checkbox(0, 100, 650, 112, 662, "agree"));
  return build(s);
}

std::vector<std::pair<std::string, std::string>> pipeline_corpus() {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("flat_a.pdf", flat_pdf(1, "Invoice"));
  out.emplace_back("flat_b.pdf", flat_pdf(2, "Letter"));

  Spec buttons;
  buttons.fields.push_back(pushbutton(0, 50, 50, 150, 80, "print"));
  buttons.fields.push_back(pushbutton(0, 200, 50, 300, 80, "reset"));
  out.emplace_back("buttons.pdf", build(buttons));

  Spec xfa;
  xfa.xfa = true;
  xfa.pages[0].text = "Please wait...";
  out.emplace_back("dynamic.pdf", build(xfa));

  out.emplace_back("good_a.pdf", text_and_checkbox_pdf());

  Spec good;
  good.pages.push_back(Page{});
  good.pages[1].rotate = 90;
  good.xref_stream = true;
  good.fields.push_back(text(0, 72, 600, 300, 620, "applicant"));
  good.fields.push_back(signature(1, 72, 100, 272, 140, "sign"));
  good.radios.push_back({"married", 1, {{72, 300, 84, 312}, {120, 300, 132, 312}}});
  out.emplace_back("good_b.pdf", build(good));
  return out;
}

}  // namespace fixtures
