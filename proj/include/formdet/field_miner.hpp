#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "formdet/geometry.hpp"
#include "formdet/pdf_model.hpp"

namespace formdet {

// Where document-level filtering stopped. kParseError covers documents that
// could not be opened or walked (including encrypted ones).
enum class RejectionReason {
  kNoFormObjects,
  kNoFields,
  kButtonOnly,
  kXfaDynamicOnly,
  kAllFieldsCleaned,
  kParseError,
};

std::string_view to_string(RejectionReason r);
std::optional<RejectionReason> rejection_reason_from_string(std::string_view s);

enum class ChoicePolicy { kAsTextInput, kDrop };

struct CleaningConfig {
  // false disables every filter except the minimal clip needed for valid labels.
  bool enabled = true;
  double min_field_size_pt = 4.0;
  double dedup_iou_threshold = 0.85;
  double min_onpage_fraction = 0.5;
  bool drop_hidden = true;
  ChoicePolicy choice_policy = ChoicePolicy::kAsTextInput;

  // Throws ConfigError.
  void validate() const;
  bool operator==(const CleaningConfig&) const = default;
};

// One candidate field on a page, before or after cleaning.
struct PageField {
  FieldClass field_class = FieldClass::kTextInput;
  PdfRect rect;
  WidgetType source_type = WidgetType::kText;

  bool operator==(const PageField&) const = default;
};

struct FieldAnnotation {
  std::string doc_id;
  int page_index = 0;
  FieldClass field_class = FieldClass::kTextInput;
  PdfRect rect;
  WidgetType source_type = WidgetType::kText;

  bool operator==(const FieldAnnotation&) const = default;
};

struct CleaningCounters {
  std::uint64_t offpage = 0;
  std::uint64_t too_small = 0;
  std::uint64_t duplicate = 0;

  CleaningCounters& operator+=(const CleaningCounters& o);
  bool operator==(const CleaningCounters&) const = default;
};

// Widget-level tallies for one document.
struct WidgetCounters {
  std::uint64_t widgets = 0;
  std::uint64_t unresolved = 0;     // skipped by the parser
  std::uint64_t unclassified = 0;   // push buttons, dropped choice widgets
  std::uint64_t hidden = 0;
  CleaningCounters cleaning;
  std::uint64_t kept = 0;

  WidgetCounters& operator+=(const WidgetCounters& o);
  bool operator==(const WidgetCounters&) const = default;
};

struct PageRecord {
  int page_index = 0;
  PageGeometry geometry;
  std::vector<FieldAnnotation> annotations;

  bool operator==(const PageRecord&) const = default;
};

struct DocumentRecord {
  std::string doc_id;
  std::optional<std::string> source_uri;
  FormStandard form_standard = FormStandard::kNone;
  int page_count = 0;
  std::vector<PageRecord> pages;
  std::optional<RejectionReason> rejection_reason;
  // Set with kParseError.
  std::optional<std::string> error;
  bool encrypted = false;
  WidgetCounters counters;

  bool accepted() const { return !rejection_reason.has_value(); }
  std::size_t annotation_count() const;
  bool operator==(const DocumentRecord&) const = default;
};

bool stage1_has_form(const DocumentHandle& doc);

std::optional<FieldClass> classify_widget(
    const RawWidget& w, ChoicePolicy choice = ChoicePolicy::kAsTextInput);

bool stage2_has_fillable(const std::vector<RawWidget>& widgets,
                         ChoicePolicy choice = ChoicePolicy::kAsTextInput);

// Off-page filter and clip, minimum size, then same-class near-duplicate
// suppression in input order. Output keeps input order.
std::vector<PageField> clean_page_fields(const std::vector<PageField>& fields,
                                         const PageGeometry& geom,
                                         const CleaningConfig& cfg,
                                         CleaningCounters* counters = nullptr);

// Never throws for document-content problems: MalformedPdf raised while
// walking the document becomes a kParseError record.
DocumentRecord mine_document(const DocumentHandle& doc, const CleaningConfig& cfg);

// Opens and mines; open failures (malformed, encrypted) become kParseError
// records keyed by the content hash.
DocumentRecord mine_bytes(std::string bytes, const CleaningConfig& cfg,
                          std::optional<std::string> source_uri = std::nullopt);

// Corpus-level counts mirroring the filtering stages.
struct MiningStats {
  std::uint64_t documents = 0;
  std::uint64_t accepted = 0;
  std::uint64_t no_form_objects = 0;
  std::uint64_t no_fields = 0;
  std::uint64_t button_only = 0;
  std::uint64_t xfa_dynamic_only = 0;
  std::uint64_t all_fields_cleaned = 0;
  std::uint64_t parse_error = 0;
  std::uint64_t encrypted = 0;  // subset of parse_error
  std::array<std::uint64_t, 4> form_standards{};  // indexed by FormStandard
  std::uint64_t pages = 0;                // in accepted documents
  std::uint64_t pages_with_fields = 0;    // in accepted documents
  std::array<std::uint64_t, kNumFieldClasses> annotations{};
  WidgetCounters widgets;

  void add(const DocumentRecord& r);
  MiningStats& operator+=(const MiningStats& o);
  bool operator==(const MiningStats&) const = default;
};

}  // namespace formdet
