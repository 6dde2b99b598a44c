#include "formdet/field_miner.hpp"

#include <algorithm>

#include "formdet/errors.hpp"

namespace formdet {

std::string_view to_string(RejectionReason r) {
  switch (r) {
    case RejectionReason::kNoFormObjects: return "NoFormObjects";
    case RejectionReason::kNoFields: return "NoFields";
    case RejectionReason::kButtonOnly: return "ButtonOnly";
    case RejectionReason::kXfaDynamicOnly: return "XfaDynamicOnly";
    case RejectionReason::kAllFieldsCleaned: return "AllFieldsCleaned";
    case RejectionReason::kParseError: return "ParseError";
  }
  return "ParseError";
}

std::optional<RejectionReason> rejection_reason_from_string(std::string_view s) {
  for (auto r : {RejectionReason::kNoFormObjects, RejectionReason::kNoFields,
                 RejectionReason::kButtonOnly, RejectionReason::kXfaDynamicOnly,
                 RejectionReason::kAllFieldsCleaned, RejectionReason::kParseError}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

void CleaningConfig::validate() const {
  auto ratio_ok = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!(min_field_size_pt > 0.0)) {
    throw ConfigError("min_field_size_pt must be positive");
  }
  if (!ratio_ok(dedup_iou_threshold)) {
    throw ConfigError("dedup_iou_threshold must be in (0, 1]");
  }
  if (!ratio_ok(min_onpage_fraction)) {
    throw ConfigError("min_onpage_fraction must be in (0, 1]");
  }
}

CleaningCounters& CleaningCounters::operator+=(const CleaningCounters& o) {
  offpage += o.offpage;
  too_small += o.too_small;
  duplicate += o.duplicate;
  return *this;
}

WidgetCounters& WidgetCounters::operator+=(const WidgetCounters& o) {
  widgets += o.widgets;
  unresolved += o.unresolved;
  unclassified += o.unclassified;
  hidden += o.hidden;
  cleaning += o.cleaning;
  kept += o.kept;
  return *this;
}

std::size_t DocumentRecord::annotation_count() const {
  std::size_t n = 0;
  for (const auto& p : pages) n += p.annotations.size();
  return n;
}

bool stage1_has_form(const DocumentHandle& doc) {
  return detect_form_standard(doc) != FormStandard::kNone;
}

std::optional<FieldClass> classify_widget(const RawWidget& w, ChoicePolicy choice) {
  switch (w.field_type) {
    case WidgetType::kCheckBox:
    case WidgetType::kRadioButton:
      return FieldClass::kChoiceButton;
    case WidgetType::kText:
      return FieldClass::kTextInput;
    case WidgetType::kSignature:
      return FieldClass::kSignature;
    case WidgetType::kChoice:
      if (choice == ChoicePolicy::kDrop) return std::nullopt;
      return FieldClass::kTextInput;
    case WidgetType::kPushButton:
      return std::nullopt;
  }
  return std::nullopt;
}

bool stage2_has_fillable(const std::vector<RawWidget>& widgets, ChoicePolicy choice) {
  return std::any_of(widgets.begin(), widgets.end(), [&](const RawWidget& w) {
    return classify_widget(w, choice).has_value();
  });
}

std::vector<PageField> clean_page_fields(const std::vector<PageField>& fields,
                                         const PageGeometry& geom,
                                         const CleaningConfig& cfg,
                                         CleaningCounters* counters) {
  CleaningCounters local;
  std::vector<PageField> out;
  out.reserve(fields.size());
  const PdfRect& media = geom.media_box;

  for (const PageField& f : fields) {
    PdfRect r = f.rect.normalized();
    PdfRect clipped = intersect(r, media);
    if (!cfg.enabled) {
      if (clipped.area() <= 0.0) {
        ++local.offpage;
        continue;
      }
      out.push_back({f.field_class, clipped, f.source_type});
      continue;
    }

    double area = r.area();
    double onpage = clipped.area();
    if (area <= 0.0) {
      ++local.too_small;
      continue;
    }
    if (onpage < cfg.min_onpage_fraction * area) {
      ++local.offpage;
      continue;
    }
    if (std::min(clipped.width(), clipped.height()) < cfg.min_field_size_pt) {
      ++local.too_small;
      continue;
    }
    bool duplicate = false;
    for (const PageField& kept : out) {
      if (kept.field_class == f.field_class &&
          iou(kept.rect, clipped) >= cfg.dedup_iou_threshold) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      ++local.duplicate;
      continue;
    }
    out.push_back({f.field_class, clipped, f.source_type});
  }
  if (counters) *counters += local;
  return out;
}

namespace {

DocumentRecord mine_impl(const DocumentHandle& doc, const CleaningConfig& cfg) {
  DocumentRecord rec;
  rec.doc_id = doc.doc_id();
  rec.source_uri = doc.source_uri();
  rec.page_count = doc.page_count();
  rec.form_standard = detect_form_standard(doc);

  for (int p = 0; p < doc.page_count(); ++p) {
    rec.pages.push_back({p, page_geometry(doc, p), {}});
  }
  if (rec.form_standard == FormStandard::kNone) {
    rec.rejection_reason = RejectionReason::kNoFormObjects;
    return rec;
  }

  std::size_t skipped = 0;
  std::vector<RawWidget> widgets = enumerate_widgets(doc, &skipped);
  rec.counters.widgets = widgets.size();
  rec.counters.unresolved = skipped;

  bool xfa = rec.form_standard == FormStandard::kXfa ||
             rec.form_standard == FormStandard::kHybrid;
  if (widgets.empty()) {
    rec.rejection_reason =
        xfa ? RejectionReason::kXfaDynamicOnly : RejectionReason::kNoFields;
    return rec;
  }
  if (!stage2_has_fillable(widgets, cfg.choice_policy)) {
    rec.counters.unclassified = widgets.size();
    rec.rejection_reason = RejectionReason::kButtonOnly;
    return rec;
  }

  std::vector<std::vector<PageField>> per_page(rec.pages.size());
  for (const RawWidget& w : widgets) {
    auto cls = classify_widget(w, cfg.choice_policy);
    if (!cls) {
      ++rec.counters.unclassified;
      continue;
    }
    if (cfg.enabled && cfg.drop_hidden && w.hidden) {
      ++rec.counters.hidden;
      continue;
    }
    per_page[static_cast<std::size_t>(w.page_index)].push_back({*cls, w.rect, w.field_type});
  }

  for (auto& page : rec.pages) {
    auto cleaned = clean_page_fields(per_page[static_cast<std::size_t>(page.page_index)],
                                     page.geometry, cfg, &rec.counters.cleaning);
    for (const PageField& f : cleaned) {
      page.annotations.push_back(
          {rec.doc_id, page.page_index, f.field_class, f.rect, f.source_type});
    }
    rec.counters.kept += cleaned.size();
  }
  if (rec.counters.kept == 0) rec.rejection_reason = RejectionReason::kAllFieldsCleaned;
  return rec;
}

DocumentRecord parse_error_record(std::string doc_id,
                                  std::optional<std::string> source_uri,
                                  std::string message, bool encrypted) {
  DocumentRecord rec;
  rec.doc_id = std::move(doc_id);
  rec.source_uri = std::move(source_uri);
  rec.rejection_reason = RejectionReason::kParseError;
  rec.error = std::move(message);
  rec.encrypted = encrypted;
  return rec;
}

}  // namespace

DocumentRecord mine_document(const DocumentHandle& doc, const CleaningConfig& cfg) {
  try {
    return mine_impl(doc, cfg);
  } catch (const MalformedPdf& e) {
    return parse_error_record(doc.doc_id(), doc.source_uri(), e.what(), false);
  }
}

DocumentRecord mine_bytes(std::string bytes, const CleaningConfig& cfg,
                          std::optional<std::string> source_uri) {
  std::string id = compute_doc_id(bytes);
  try {
    DocumentHandle doc = open_document(std::move(bytes), source_uri);
    return mine_document(doc, cfg);
  } catch (const EncryptedPdf& e) {
    return parse_error_record(id, std::move(source_uri), e.what(), true);
  } catch (const MalformedPdf& e) {
    return parse_error_record(id, std::move(source_uri), e.what(), false);
  }
}

void MiningStats::add(const DocumentRecord& r) {
  ++documents;
  widgets += r.counters;
  if (r.rejection_reason != RejectionReason::kParseError) {
    ++form_standards[static_cast<std::size_t>(r.form_standard)];
  }
  if (!r.rejection_reason) {
    ++accepted;
    for (const auto& p : r.pages) {
      ++pages;
      if (!p.annotations.empty()) ++pages_with_fields;
      for (const auto& a : p.annotations) {
        ++annotations[static_cast<std::size_t>(class_code(a.field_class))];
      }
    }
    return;
  }
  switch (*r.rejection_reason) {
    case RejectionReason::kNoFormObjects: ++no_form_objects; break;
    case RejectionReason::kNoFields: ++no_fields; break;
    case RejectionReason::kButtonOnly: ++button_only; break;
    case RejectionReason::kXfaDynamicOnly: ++xfa_dynamic_only; break;
    case RejectionReason::kAllFieldsCleaned: ++all_fields_cleaned; break;
    case RejectionReason::kParseError:
      ++parse_error;
      if (r.encrypted) ++encrypted;
      break;
  }
}

MiningStats& MiningStats::operator+=(const MiningStats& o) {
  documents += o.documents;
  accepted += o.accepted;
  no_form_objects += o.no_form_objects;
  no_fields += o.no_fields;
  button_only += o.button_only;
  xfa_dynamic_only += o.xfa_dynamic_only;
  all_fields_cleaned += o.all_fields_cleaned;
  parse_error += o.parse_error;
  encrypted += o.encrypted;
  for (std::size_t i = 0; i < form_standards.size(); ++i) form_standards[i] += o.form_standards[i];
  pages += o.pages;
  pages_with_fields += o.pages_with_fields;
  for (std::size_t i = 0; i < annotations.size(); ++i) annotations[i] += o.annotations[i];
  widgets += o.widgets;
  return *this;
}

}  // namespace formdet
