#include "formdet/form_preparer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "formdet/errors.hpp"
#include "formdet/pdf/document.hpp"
#include "formdet/pdf/writer.hpp"
#include "formdet/pdf_model.hpp"

namespace formdet {

using pdf::Array;
using pdf::Dict;
using pdf::Name;
using pdf::Object;
using pdf::Ref;

std::string_view to_string(OverlapPolicy p) {
  return p == OverlapPolicy::kKeepAll ? "KeepAll" : "KeepHigherScore";
}

std::string_view to_string(ExistingFormPolicy p) {
  return p == ExistingFormPolicy::kAppend ? "Append" : "Refuse";
}

std::optional<OverlapPolicy> overlap_policy_from_string(std::string_view s) {
  if (s == "KeepHigherScore") return OverlapPolicy::kKeepHigherScore;
  if (s == "KeepAll") return OverlapPolicy::kKeepAll;
  return std::nullopt;
}

std::optional<ExistingFormPolicy> existing_form_policy_from_string(std::string_view s) {
  if (s == "Refuse") return ExistingFormPolicy::kRefuse;
  if (s == "Append") return ExistingFormPolicy::kAppend;
  return std::nullopt;
}

void PrepareConfig::validate() const {
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    throw ConfigError("score_threshold must be in [0, 1]");
  }
  if (!(overlap_iou > 0.0 && overlap_iou <= 1.0)) {
    throw ConfigError("overlap_iou must be in (0, 1]");
  }
  render.validate();
}

std::vector<PreparedField> name_fields(std::vector<PreparedField> drafts,
                                       const std::set<std::string>& reserved) {
  std::stable_sort(drafts.begin(), drafts.end(),
                   [](const PreparedField& a, const PreparedField& b) {
                     if (a.page_index != b.page_index) return a.page_index < b.page_index;
                     if (a.rect.y1 != b.rect.y1) return a.rect.y1 > b.rect.y1;
                     return a.rect.x0 < b.rect.x0;
                   });
  std::set<std::string> used = reserved;
  std::map<std::pair<int, FieldClass>, int> counters;
  for (auto& f : drafts) {
    int& k = counters[{f.page_index, f.field_class}];
    std::string name;
    do {
      name = std::string(class_word(f.field_class)) + "_" + std::to_string(f.page_index) + "_" +
             std::to_string(k++);
    } while (used.count(name));
    used.insert(name);
    f.name = std::move(name);
  }
  return drafts;
}

namespace {

Object num(double v) {
  double r = std::round(v);
  if (r == v && std::fabs(v) < 1e15) return Object(static_cast<std::int64_t>(r));
  return Object(v);
}

Object rect_array(const PdfRect& r) { return Array{num(r.x0), num(r.y0), num(r.x1), num(r.y1)}; }

Object pdf_string(std::string s) { return pdf::String{std::move(s), false}; }

std::string real(double v) { return pdf::format_real(v); }

// Form XObject with a 1 pt black border inset by half the line width.
Object border_stream(double w, double h, const std::string& extra, const Dict& resources) {
  std::string content = "q 0 G 1 w 0.5 0.5 " + real(std::max(0.0, w - 1)) + " " +
                        real(std::max(0.0, h - 1)) + " re S Q\n" + extra;
  Dict d;
  d["Type"] = Name{"XObject"};
  d["Subtype"] = Name{"Form"};
  d["BBox"] = Array{num(0), num(0), num(w), num(h)};
  d["Resources"] = resources;
  return pdf::Stream{std::move(d), std::move(content)};
}

std::string check_mark(double w, double h) {
  auto px = [&](double fx) { return real(w * fx); };
  auto py = [&](double fy) { return real(h * fy); };
  return "q 0 G " + real(std::max(0.5, std::min(w, h) / 10)) + " w 1 J 1 j " + px(0.2) + " " +
         py(0.5) + " m " + px(0.42) + " " + py(0.25) + " l " + px(0.8) + " " + py(0.78) +
         " l S Q\n";
}

struct Candidate {
  std::size_t order;
  FieldClass cls;
  PixelBox box;
  double score;
  int page;
};

}  // namespace

PrepareResult prepare_form(std::string flat_pdf, const std::vector<Detection>& detections,
                           const std::vector<ManifestRow>& rows, const PrepareConfig& cfg) {
  cfg.validate();
  PrepareResult result;
  DocumentHandle doc = open_document(flat_pdf);
  const pdf::Document& pd = doc.pdf();

  std::map<int, const ManifestRow*> row_by_page;
  for (const auto& r : rows) {
    if (r.doc_id != doc.doc_id()) {
      throw GeometryMismatch("manifest row for " + r.doc_id + " does not describe document " +
                             doc.doc_id());
    }
    if (r.page_index < 0 || r.page_index >= doc.page_count()) {
      throw GeometryMismatch("manifest row names page " + std::to_string(r.page_index) +
                             " of a " + std::to_string(doc.page_count()) + "-page document");
    }
    row_by_page[r.page_index] = &r;
  }

  struct PageFrame {
    PageGeometry geom;
    double scale;
    ImageSize size;
  };
  std::map<int, PageFrame> frames;
  auto frame_for = [&](int page) -> const PageFrame& {
    auto it = frames.find(page);
    if (it != frames.end()) return it->second;
    if (page < 0 || page >= doc.page_count()) {
      throw GeometryMismatch("detection references page " + std::to_string(page) +
                             " of a " + std::to_string(doc.page_count()) + "-page document");
    }
    PageFrame f;
    f.geom = page_geometry(doc, page);
    auto row = row_by_page.find(page);
    if (row != row_by_page.end()) {
      f.scale = row->second->scale;
      if (!(f.scale > 0)) throw GeometryMismatch("manifest scale must be positive");
      f.size = rendered_size(f.geom, f.scale);
      if (std::abs(f.size.width - row->second->width_px) > 1 ||
          std::abs(f.size.height - row->second->height_px) > 1) {
        throw GeometryMismatch(
            "page " + std::to_string(page) + ": manifest size " +
            std::to_string(row->second->width_px) + "x" + std::to_string(row->second->height_px) +
            " disagrees with the PDF (" + std::to_string(f.size.width) + "x" +
            std::to_string(f.size.height) + ")");
      }
      f.size = {row->second->width_px, row->second->height_px};
    } else {
      f.scale = compute_render_scale(f.geom, cfg.render);
      f.size = rendered_size(f.geom, f.scale);
    }
    return frames.emplace(page, f).first->second;
  };

  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& d = detections[i];
    if (d.image.doc_id != doc.doc_id()) continue;
    if (d.score < cfg.score_threshold) {
      ++result.below_threshold;
      continue;
    }
    cands.push_back({i, d.field_class, d.box, d.score, d.image.page_index});
  }

  if (cfg.overlap_policy == OverlapPolicy::kKeepHigherScore) {
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cands[a].score > cands[b].score;
    });
    std::vector<char> keep(cands.size(), 0);
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
      bool clash = false;
      for (std::size_t k : kept) {
        if (cands[k].page == cands[i].page && cands[k].cls == cands[i].cls &&
            iou(cands[k].box, cands[i].box) >= cfg.overlap_iou) {
          clash = true;
          break;
        }
      }
      if (clash) {
        ++result.overlap_dropped;
      } else {
        keep[i] = 1;
        kept.push_back(i);
      }
    }
    std::vector<Candidate> survivors;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (keep[i]) survivors.push_back(cands[i]);
    }
    cands = std::move(survivors);
  }

  std::vector<PreparedField> drafts;
  for (const Candidate& c : cands) {
    const PageFrame& f = frame_for(c.page);
    double x0 = std::clamp(c.box.x, 0.0, double(f.size.width));
    double y0 = std::clamp(c.box.y, 0.0, double(f.size.height));
    double x1 = std::clamp(c.box.x + c.box.w, 0.0, double(f.size.width));
    double y1 = std::clamp(c.box.y + c.box.h, 0.0, double(f.size.height));
    PdfRect r = intersect(pixels_to_pdf_rect({x0, y0, x1 - x0, y1 - y0}, f.geom, f.scale),
                          f.geom.media_box);
    if (!(r.width() > 0) || !(r.height() > 0)) {
      ++result.degenerate;
      continue;
    }
    drafts.push_back({c.cls, r, "", c.page});
  }
  if (drafts.empty()) {
    result.bytes = std::move(flat_pdf);
    return result;
  }

  const bool has_form = !enumerate_widgets(doc).empty() ||
                        detect_form_standard(doc) != FormStandard::kNone;
  if (has_form && cfg.existing_form_policy == ExistingFormPolicy::kRefuse) {
    throw ExistingForm("document " + doc.doc_id() + " already carries form fields");
  }
  std::set<std::string> reserved;
  for (auto& n : existing_field_names(doc)) reserved.insert(std::move(n));
  result.fields = name_fields(std::move(drafts), reserved);

  auto catalog_ref = pd.catalog_ref();
  if (!catalog_ref) throw MalformedPdf("document catalog is not an indirect object");

  pdf::IncrementalWriter w(pd);
  Dict helv{{"Type", Name{"Font"}},
            {"Subtype", Name{"Type1"}},
            {"BaseFont", Name{"Helvetica"}},
            {"Encoding", Name{"WinAnsiEncoding"}}};
  Dict zadb{{"Type", Name{"Font"}}, {"Subtype", Name{"Type1"}}, {"BaseFont", Name{"ZapfDingbats"}}};
  Ref helv_ref = w.add(helv);
  Ref zadb_ref = w.add(zadb);
  const Dict empty_resources;

  std::map<int, std::vector<Ref>> page_widgets;
  std::vector<Ref> field_refs;
  for (const PreparedField& f : result.fields) {
    const pdf::PageNode& node = pd.pages()[static_cast<std::size_t>(f.page_index)];
    const int rotation = page_geometry(doc, f.page_index).rotation;
    const double w_pt = f.rect.width();
    const double h_pt = f.rect.height();
    const bool swap = rotation == 90 || rotation == 270;
    const double bw = swap ? h_pt : w_pt;
    const double bh = swap ? w_pt : h_pt;

    Dict mk{{"BC", Array{num(0), num(0), num(0)}}};
    if (rotation != 0) mk["R"] = num(rotation);

    Dict widget{{"Type", Name{"Annot"}},
                {"Subtype", Name{"Widget"}},
                {"T", pdf_string(f.name)},
                {"Rect", rect_array(f.rect)},
                {"F", num(4)},
                {"P", node.ref},
                {"BS", Dict{{"W", num(1)}, {"S", Name{"S"}}}}};
    switch (f.field_class) {
      case FieldClass::kTextInput: {
        widget["FT"] = Name{"Tx"};
        widget["DA"] = pdf_string("/Helv 0 Tf 0 g");
        widget["MK"] = mk;
        widget["AP"] = Dict{{"N", w.add(border_stream(bw, bh, "", empty_resources))}};
        break;
      }
      case FieldClass::kChoiceButton: {
        widget["FT"] = Name{"Btn"};
        widget["V"] = Name{"Off"};
        widget["AS"] = Name{"Off"};
        widget["DA"] = pdf_string("/ZaDb 0 Tf 0 g");
        mk["CA"] = pdf_string("4");
        widget["MK"] = mk;
        Ref on = w.add(border_stream(bw, bh, check_mark(bw, bh), empty_resources));
        Ref off = w.add(border_stream(bw, bh, "", empty_resources));
        widget["AP"] = Dict{{"N", Dict{{"Yes", on}, {"Off", off}}}};
        break;
      }
      case FieldClass::kSignature: {
        widget["FT"] = Name{"Sig"};
        widget["MK"] = mk;
        widget["AP"] = Dict{{"N", w.add(border_stream(bw, bh, "", empty_resources))}};
        break;
      }
    }
    Ref ref = w.add(std::move(widget));
    page_widgets[f.page_index].push_back(ref);
    field_refs.push_back(ref);
  }

  for (const auto& [page, refs] : page_widgets) {
    const pdf::PageNode& node = pd.pages()[static_cast<std::size_t>(page)];
    Dict page_dict = *node.dict;
    Array annots;
    if (const Object* a = pdf::find(page_dict, "Annots")) {
      if (const Array* existing = pd.resolve_array(*a)) annots = *existing;
    }
    annots.insert(annots.end(), refs.begin(), refs.end());
    page_dict["Annots"] = std::move(annots);
    w.replace(node.ref, std::move(page_dict));
  }

  Dict catalog = pd.catalog();
  Dict acroform;
  std::optional<Ref> acroform_ref;
  if (const Object* af = pdf::find(catalog, "AcroForm")) {
    acroform_ref = af->as_ref();
    if (const Dict* existing = pd.resolve_dict(*af)) acroform = *existing;
  }
  Array fields;
  if (const Object* f = pdf::find(acroform, "Fields")) {
    if (const Array* existing = pd.resolve_array(*f)) fields = *existing;
  }
  fields.insert(fields.end(), field_refs.begin(), field_refs.end());
  acroform["Fields"] = std::move(fields);
  acroform["NeedAppearances"] = true;
  acroform.erase("XFA");
  if (!pdf::find(acroform, "DA")) acroform["DA"] = pdf_string("/Helv 0 Tf 0 g");
  Dict dr;
  if (const Object* existing = pdf::find(acroform, "DR")) {
    if (const Dict* d = pd.resolve_dict(*existing)) dr = *d;
  }
  Dict fonts;
  if (const Object* existing = pdf::find(dr, "Font")) {
    if (const Dict* d = pd.resolve_dict(*existing)) fonts = *d;
  }
  fonts.try_emplace("Helv", helv_ref);
  fonts.try_emplace("ZaDb", zadb_ref);
  dr["Font"] = std::move(fonts);
  acroform["DR"] = std::move(dr);

  if (acroform_ref) {
    w.replace(*acroform_ref, std::move(acroform));
  } else {
    catalog["AcroForm"] = w.add(std::move(acroform));
    w.replace(*catalog_ref, std::move(catalog));
  }

  result.bytes = w.finish();
  return result;
}

RoundtripReport verify_roundtrip(std::string_view prepared,
                                 const std::vector<PreparedField>& expected) {
  RoundtripReport rep;
  rep.expected = expected.size();
  CleaningConfig cfg;
  cfg.enabled = false;
  DocumentRecord rec = mine_bytes(std::string(prepared), cfg);
  if (rec.rejection_reason == RejectionReason::kParseError) {
    rep.error = rec.error.value_or("parse error");
  }

  std::vector<const FieldAnnotation*> found;
  for (const auto& p : rec.pages) {
    for (const auto& a : p.annotations) found.push_back(&a);
  }
  std::vector<char> used(found.size(), 0);
  auto deviation = [](const PdfRect& a, const PdfRect& b) {
    return std::max({std::fabs(a.x0 - b.x0), std::fabs(a.y0 - b.y0), std::fabs(a.x1 - b.x1),
                     std::fabs(a.y1 - b.y1)});
  };

  for (const PreparedField& e : expected) {
    std::optional<std::size_t> best;
    double best_dev = 0;
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (used[i] || found[i]->page_index != e.page_index) continue;
      double dev = deviation(found[i]->rect, e.rect);
      if (dev > kRoundtripTolerancePt) continue;
      bool better = !best || (found[i]->field_class == e.field_class &&
                              found[*best]->field_class != e.field_class) ||
                    ((found[i]->field_class == e.field_class) ==
                         (found[*best]->field_class == e.field_class) &&
                     dev < best_dev);
      if (better) {
        best = i;
        best_dev = dev;
      }
    }
    if (!best) {
      rep.missing.push_back(e);
      continue;
    }
    used[*best] = 1;
    rep.max_deviation_pt = std::max(rep.max_deviation_pt, best_dev);
    if (found[*best]->field_class != e.field_class) {
      rep.class_mismatches.push_back({e, found[*best]->field_class});
    } else {
      ++rep.recovered;
    }
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (!used[i]) rep.extras.push_back(*found[i]);
  }
  rep.passed = !rep.error && rep.missing.empty() && rep.class_mismatches.empty();
  return rep;
}

}  // namespace formdet
