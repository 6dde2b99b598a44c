#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "formdet/dataset.hpp"
#include "formdet/geometry.hpp"

namespace formdet {

struct ImageKey {
  std::string doc_id;
  int page_index = 0;

  auto operator<=>(const ImageKey&) const = default;
  bool operator==(const ImageKey&) const = default;
};

struct Detection {
  ImageKey image;
  FieldClass field_class = FieldClass::kTextInput;
  PixelBox box;
  double score = 0;
};

struct GroundTruth {
  ImageKey image;
  FieldClass field_class = FieldClass::kTextInput;
  PixelBox box;
};

inline constexpr int kNumIouThresholds = 10;

// 0.50, 0.55, ..., 0.95.
double iou_threshold(int index);

struct ScoredBox {
  PixelBox box;
  double score = 0;
};

struct MatchPair {
  std::size_t det;                 // index into the detections argument
  std::optional<std::size_t> gt;   // index into the ground-truth argument
};

// Detections of one image and class, processed by descending score (ties by
// input order); each takes the unmatched ground truth with the highest
// IoU >= threshold (ties to the lower index). Pairs come back in processing
// order.
std::vector<MatchPair> match_detections(const std::vector<ScoredBox>& dets,
                                        const std::vector<PixelBox>& gts,
                                        double iou_threshold);

struct RankedMatch {
  double score = 0;
  bool true_positive = false;
};

// 101-point interpolated AP on a 0-100 scale over matches already in rank
// order. nullopt when there is neither ground truth nor a detection.
std::optional<double> average_precision(const std::vector<RankedMatch>& ranked,
                                        std::size_t total_gt);

struct ClassResult {
  FieldClass field_class = FieldClass::kTextInput;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
  std::array<double, kNumIouThresholds> ap{};
  std::array<std::size_t, kNumIouThresholds> true_positives{};
  double ap50_95 = 0;
};

struct EvalReport {
  std::string slice = "All";
  std::optional<std::string> slice_key;  // "language" or "domain"
  std::size_t images = 0;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
  // Classes with ground truth or detections, in class-code order.
  std::vector<ClassResult> classes;
  // Mean AP50-95 over classes with ground truth; nullopt when none has any.
  std::optional<double> map50_95;

  bool no_evaluable_classes() const { return !map50_95.has_value(); }
  const ClassResult* find(FieldClass c) const;
};

// Detections on images absent from `images` are ignored; ground truth on such
// images is an error (ConfigError). Detection order is the tie-break order.
EvalReport map_50_95(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                     const std::vector<ImageKey>& images);

struct EvalOptions {
  bool include_empty_pages = false;
};

enum class SliceKey { kLanguage, kDomain };
// Throws UnknownSliceKey.
SliceKey slice_key_from_string(std::string_view s);
std::string_view to_string(SliceKey k);

// Ground truth from manifest labels in pixel space.
std::vector<GroundTruth> ground_truth_from_manifest(const DatasetManifest& manifest);

// "All" over every evaluated page, plus one report per tag value (sorted).
// Without a slice key only "All" is produced. Detections must name manifest
// pages (MalformedDetections otherwise).
std::vector<EvalReport> sliced_report(const std::vector<Detection>& dets,
                                      const DatasetManifest& manifest,
                                      std::optional<SliceKey> slice_key,
                                      const EvalOptions& options = {});

// Detections file: NDJSON {doc_id, page_index, class, box: [x, y, w, h], score}.
// Throws MalformedDetections.
std::vector<Detection> parse_detections(std::string_view ndjson);
std::vector<Detection> read_detections(const std::filesystem::path& path);
std::string detections_to_ndjson(const std::vector<Detection>& dets);

std::string report_to_json(const std::vector<EvalReport>& reports);
// Aligned plain-text table: slice, page share, per-class AP, mAP.
std::string report_to_table(const std::vector<EvalReport>& reports);

}  // namespace formdet
