#include "formdet/pdf_model.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <tuple>

#include "formdet/errors.hpp"
#include "formdet/pdf/document.hpp"
#include "formdet/pdf/text.hpp"

namespace formdet {

namespace {

using pdf::Dict;
using pdf::Object;
using pdf::Ref;

constexpr int kMaxParentChain = 32;
constexpr int kMaxFieldDepth = 64;
constexpr std::int64_t kAnnotHidden = 1 << 1;
constexpr std::int64_t kAnnotNoView = 1 << 5;
constexpr std::int64_t kFlagRadio = 1 << 15;
constexpr std::int64_t kFlagPushbutton = 1 << 16;

const Dict* acroform_dict(const pdf::Document& doc) {
  const Object* af = pdf::find(doc.catalog(), "AcroForm");
  return af ? doc.resolve_dict(*af) : nullptr;
}

// Inheritable field attribute lookup through the /Parent chain.
const Object* inherited(const pdf::Document& doc, const Dict* node,
                        std::string_view key) {
  for (int i = 0; node != nullptr && i < kMaxParentChain; ++i) {
    if (const Object* v = pdf::find(*node, key)) return &doc.resolve(*v);
    const Object* parent = pdf::find(*node, "Parent");
    node = parent ? doc.resolve_dict(*parent) : nullptr;
  }
  return nullptr;
}

std::optional<std::string> qualified_name(const pdf::Document& doc,
                                          const Dict* node) {
  std::vector<std::string> parts;
  for (int i = 0; node != nullptr && i < kMaxParentChain; ++i) {
    if (const Object* t = pdf::find(*node, "T")) {
      if (const auto* s = doc.resolve(*t).as_string()) parts.push_back(*s);
    }
    const Object* parent = pdf::find(*node, "Parent");
    node = parent ? doc.resolve_dict(*parent) : nullptr;
  }
  if (parts.empty()) return std::nullopt;
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty()) out.push_back('.');
    out += *it;
  }
  return out;
}

std::optional<PdfRect> read_rect(const pdf::Document& doc, const Object& o) {
  const pdf::Array* a = doc.resolve_array(o);
  if (a == nullptr || a->size() < 4) return std::nullopt;
  double v[4];
  for (int i = 0; i < 4; ++i) {
    auto n = doc.resolve_number((*a)[i]);
    if (!n || !std::isfinite(*n)) return std::nullopt;
    v[i] = *n;
  }
  return PdfRect{v[0], v[1], v[2], v[3]}.normalized();
}

bool is_widget(const pdf::Document& doc, const Dict& d) {
  const Object* st = pdf::find(d, "Subtype");
  return st != nullptr && doc.resolve(*st).is_name("Widget");
}

struct WidgetSite {
  int page = -1;
  std::size_t annot_pos = 0;
};

}  // namespace

std::string_view to_string(FormStandard s) {
  switch (s) {
    case FormStandard::kNone: return "None";
    case FormStandard::kAcroForm: return "AcroForm";
    case FormStandard::kXfa: return "Xfa";
    case FormStandard::kHybrid: return "Hybrid";
  }
  return "None";
}

std::string_view to_string(WidgetType t) {
  switch (t) {
    case WidgetType::kPushButton: return "PushButton";
    case WidgetType::kCheckBox: return "CheckBox";
    case WidgetType::kRadioButton: return "RadioButton";
    case WidgetType::kText: return "Text";
    case WidgetType::kChoice: return "Choice";
    case WidgetType::kSignature: return "Signature";
  }
  return "Text";
}

std::optional<FormStandard> form_standard_from_string(std::string_view s) {
  for (auto v : {FormStandard::kNone, FormStandard::kAcroForm, FormStandard::kXfa,
                 FormStandard::kHybrid}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<WidgetType> widget_type_from_string(std::string_view s) {
  for (auto v : {WidgetType::kPushButton, WidgetType::kCheckBox,
                 WidgetType::kRadioButton, WidgetType::kText, WidgetType::kChoice,
                 WidgetType::kSignature}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

DocumentHandle::DocumentHandle(DocumentHandle&&) noexcept = default;
DocumentHandle& DocumentHandle::operator=(DocumentHandle&&) noexcept = default;
DocumentHandle::~DocumentHandle() = default;

std::string compute_doc_id(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < 16 && i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

DocumentHandle open_document(std::string bytes,
                             std::optional<std::string> source_uri) {
  if (bytes.empty()) throw MalformedPdf("empty byte sequence");
  DocumentHandle h;
  h.doc_id_ = compute_doc_id(bytes);
  h.source_uri_ = std::move(source_uri);
  h.pdf_ = std::make_unique<pdf::Document>(std::move(bytes));
  h.page_count_ = static_cast<int>(h.pdf_->pages().size());
  return h;
}

DocumentHandle open_document_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return open_document(std::move(bytes), path.string());
}

FormStandard detect_form_standard(const DocumentHandle& doc) {
  const pdf::Document& d = doc.pdf();
  const Dict* af = acroform_dict(d);
  if (af == nullptr) return FormStandard::kNone;
  bool has_fields = false;
  if (const Object* f = pdf::find(*af, "Fields")) {
    const pdf::Array* arr = d.resolve_array(*f);
    has_fields = arr != nullptr && !arr->empty();
  }
  bool has_xfa = false;
  if (const Object* x = pdf::find(*af, "XFA")) has_xfa = !d.resolve(*x).is_null();
  if (has_fields && has_xfa) return FormStandard::kHybrid;
  if (has_fields) return FormStandard::kAcroForm;
  if (has_xfa) return FormStandard::kXfa;
  return FormStandard::kNone;
}

const std::vector<RawWidget>& cached_widgets(const DocumentHandle& doc,
                                             std::size_t* skipped_out) {
  if (doc.widgets_) {
    if (skipped_out) *skipped_out = doc.skipped_widgets_;
    return *doc.widgets_;
  }
  const pdf::Document& d = doc.pdf();
  const auto& pages = d.pages();
  std::size_t skipped = 0;

  // Where each annotation object sits on the pages.
  std::map<std::uint32_t, WidgetSite> sites;
  std::map<std::uint32_t, int> page_of_ref;
  struct Candidate {
    std::optional<Ref> ref;
    const Dict* dict;
    WidgetSite site;
  };
  std::vector<Candidate> candidates;
  std::set<std::uint32_t> seen;
  for (std::size_t p = 0; p < pages.size(); ++p) {
    page_of_ref[pages[p].ref.num] = static_cast<int>(p);
    const Object* annots = pdf::find(*pages[p].dict, "Annots");
    const pdf::Array* arr = annots ? d.resolve_array(*annots) : nullptr;
    if (arr == nullptr) continue;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const Object& a = (*arr)[i];
      const Dict* ad = d.resolve_dict(a);
      if (ad == nullptr || !is_widget(d, *ad)) continue;
      WidgetSite site{static_cast<int>(p), i};
      if (auto r = a.as_ref()) {
        sites.try_emplace(r->num, site);
        if (seen.insert(r->num).second) candidates.push_back({r, ad, site});
      } else {
        candidates.push_back({std::nullopt, ad, site});
      }
    }
  }

  // Terminal widgets of the field tree that no page lists in /Annots.
  if (const Dict* af = acroform_dict(d)) {
    if (const Object* fields = pdf::find(*af, "Fields")) {
      const pdf::Array* arr = d.resolve_array(*fields);
      if (arr == nullptr) throw MalformedPdf("/AcroForm /Fields is not an array");
      std::set<std::uint32_t> visiting;
      auto walk = [&](auto&& self, const Object& node, int depth) -> void {
        if (depth > kMaxFieldDepth) throw MalformedPdf("field tree too deep");
        auto ref = node.as_ref();
        if (ref && !visiting.insert(ref->num).second) {
          throw MalformedPdf("cycle in field tree");
        }
        const Dict* nd = d.resolve_dict(node);
        if (nd != nullptr) {
          const Object* kids = pdf::find(*nd, "Kids");
          const pdf::Array* ka = kids ? d.resolve_array(*kids) : nullptr;
          if (ka != nullptr && !ka->empty()) {
            for (const Object& k : *ka) self(self, k, depth + 1);
          } else if (ref && (is_widget(d, *nd) || pdf::find(*nd, "Rect"))) {
            if (seen.insert(ref->num).second) {
              WidgetSite site;
              if (auto it = sites.find(ref->num); it != sites.end()) site = it->second;
              candidates.push_back({ref, nd, site});
            }
          }
        }
        if (ref) visiting.erase(ref->num);
      };
      for (const Object& f : *arr) walk(walk, f, 0);
    }
  }

  struct Keyed {
    int page;
    std::uint64_t order;
    std::size_t pos;
    RawWidget w;
  };
  std::vector<Keyed> out;
  std::uint64_t inline_order = 0;
  for (const auto& c : candidates) {
    int page = c.site.page;
    if (page < 0) {
      if (const Object* p = pdf::find(*c.dict, "P")) {
        if (auto pr = p->as_ref()) {
          if (auto it = page_of_ref.find(pr->num); it != page_of_ref.end()) {
            page = it->second;
          }
        }
      }
    }
    if (page < 0) {
      ++skipped;
      continue;
    }
    const Object* ft = inherited(d, c.dict, "FT");
    const std::string* ft_name = ft ? ft->as_name() : nullptr;
    const Object* rect_obj = pdf::find(*c.dict, "Rect");
    std::optional<PdfRect> rect = rect_obj ? read_rect(d, *rect_obj) : std::nullopt;
    if (ft_name == nullptr || !rect) {
      ++skipped;
      continue;
    }
    std::int64_t ff = 0;
    if (const Object* f = inherited(d, c.dict, "Ff")) ff = f->as_int().value_or(0);

    RawWidget w;
    w.page_index = page;
    w.rect = *rect;
    if (*ft_name == "Btn") {
      if (ff & kFlagPushbutton) {
        w.field_type = WidgetType::kPushButton;
      } else if (ff & kFlagRadio) {
        w.field_type = WidgetType::kRadioButton;
      } else {
        w.field_type = WidgetType::kCheckBox;
      }
    } else if (*ft_name == "Tx") {
      w.field_type = WidgetType::kText;
    } else if (*ft_name == "Ch") {
      w.field_type = WidgetType::kChoice;
    } else if (*ft_name == "Sig") {
      w.field_type = WidgetType::kSignature;
    } else {
      ++skipped;
      continue;
    }
    std::int64_t flags = 0;
    if (const Object* f = pdf::find(*c.dict, "F")) flags = d.resolve(*f).as_int().value_or(0);
    w.hidden = (flags & (kAnnotHidden | kAnnotNoView)) != 0;
    w.field_name = qualified_name(d, c.dict);

    std::uint64_t order = c.ref ? c.ref->num : (std::uint64_t{1} << 40) + inline_order++;
    out.push_back({page, order, c.site.annot_pos, std::move(w)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.page, a.order, a.pos) < std::tie(b.page, b.order, b.pos);
  });

  std::vector<RawWidget> widgets;
  widgets.reserve(out.size());
  for (auto& k : out) widgets.push_back(std::move(k.w));
  doc.widgets_ = std::move(widgets);
  doc.skipped_widgets_ = skipped;
  if (skipped_out) *skipped_out = skipped;
  return *doc.widgets_;
}

std::vector<RawWidget> enumerate_widgets(const DocumentHandle& doc,
                                         std::size_t* skipped) {
  return cached_widgets(doc, skipped);
}

PageGeometry page_geometry(const DocumentHandle& doc, int page) {
  if (page < 0 || page >= doc.page_count()) {
    throw PageOutOfRange("page " + std::to_string(page) + " out of range [0, " +
                         std::to_string(doc.page_count()) + ")");
  }
  const pdf::Document& d = doc.pdf();
  const pdf::PageNode& node = d.pages()[static_cast<std::size_t>(page)];

  PageGeometry g;
  auto box = read_rect(d, node.media_box);
  // A page without any /MediaBox in its ancestry is treated as US Letter.
  g.media_box = box.value_or(PdfRect{0, 0, 612, 792});
  if (!(g.media_box.width() > 0) || !(g.media_box.height() > 0)) {
    throw MalformedPdf("page " + std::to_string(page) + " has an empty media box");
  }

  std::int64_t rot = d.resolve(node.rotate).as_int().value_or(0);
  if (rot % 90 != 0) {
    throw MalformedPdf("page " + std::to_string(page) +
                       " has /Rotate not a multiple of 90");
  }
  rot %= 360;
  if (rot < 0) rot += 360;
  g.rotation = static_cast<int>(rot);
  return g;
}

std::string extract_page_text(const DocumentHandle& doc, int page) {
  if (page < 0 || page >= doc.page_count()) {
    throw PageOutOfRange("page " + std::to_string(page) + " out of range");
  }
  return pdf::extract_text(doc.pdf(), doc.pdf().pages()[static_cast<std::size_t>(page)]);
}

std::vector<std::string> existing_field_names(const DocumentHandle& doc) {
  std::vector<std::string> names;
  for (const auto& w : enumerate_widgets(doc)) {
    if (w.field_name) names.push_back(*w.field_name);
  }
  return names;
}

}  // namespace formdet
