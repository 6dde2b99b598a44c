#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "formdet/dataset.hpp"
#include "formdet/eval.hpp"
#include "formdet/field_miner.hpp"
#include "formdet/geometry.hpp"
#include "formdet/transform.hpp"

namespace formdet {

enum class OverlapPolicy { kKeepHigherScore, kKeepAll };
enum class ExistingFormPolicy { kRefuse, kAppend };

std::string_view to_string(OverlapPolicy p);
std::string_view to_string(ExistingFormPolicy p);
std::optional<OverlapPolicy> overlap_policy_from_string(std::string_view s);
std::optional<ExistingFormPolicy> existing_form_policy_from_string(std::string_view s);

struct PrepareConfig {
  double score_threshold = 0.5;
  OverlapPolicy overlap_policy = OverlapPolicy::kKeepHigherScore;
  // Same-class detections at or above this IoU compete under KeepHigherScore.
  double overlap_iou = 0.5;
  ExistingFormPolicy existing_form_policy = ExistingFormPolicy::kRefuse;
  // Used for pages without a manifest row.
  RenderConfig render;

  // Throws ConfigError.
  void validate() const;
};

struct PreparedField {
  FieldClass field_class = FieldClass::kTextInput;
  PdfRect rect;
  std::string name;
  int page_index = 0;

  bool operator==(const PreparedField&) const = default;
};

// Assigns `{class_word}_{page}_{k}` with k counting per page in reading order
// (top edge descending, then left edge ascending, in user space). Names in
// `reserved` are skipped. Returns the fields in naming order.
std::vector<PreparedField> name_fields(std::vector<PreparedField> drafts,
                                       const std::set<std::string>& reserved = {});

struct PrepareResult {
  std::string bytes;
  std::vector<PreparedField> fields;
  std::size_t below_threshold = 0;
  std::size_t overlap_dropped = 0;
  std::size_t degenerate = 0;
};

// Detections for other documents are ignored. `rows` are this document's
// manifest rows; pages without one use cfg.render. When nothing survives the
// threshold the input bytes are returned unchanged.
// Throws ExistingForm, GeometryMismatch, MalformedPdf, EncryptedPdf.
PrepareResult prepare_form(std::string flat_pdf, const std::vector<Detection>& detections,
                           const std::vector<ManifestRow>& rows, const PrepareConfig& cfg);

struct ClassMismatch {
  PreparedField expected;
  FieldClass found = FieldClass::kTextInput;
};

struct RoundtripReport {
  bool passed = false;
  std::size_t expected = 0;
  std::size_t recovered = 0;
  double max_deviation_pt = 0;
  std::vector<PreparedField> missing;
  std::vector<ClassMismatch> class_mismatches;
  std::vector<FieldAnnotation> extras;
  std::optional<std::string> error;  // set when the output cannot be mined
};

inline constexpr double kRoundtripTolerancePt = 0.5;

// Mines `prepared` with cleaning disabled and pairs each expected field with
// an unused annotation on the same page whose corners lie within tolerance.
RoundtripReport verify_roundtrip(std::string_view prepared,
                                 const std::vector<PreparedField>& expected);

}  // namespace formdet
