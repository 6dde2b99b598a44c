#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "formdet/field_miner.hpp"
#include "formdet/geometry.hpp"
#include "formdet/render.hpp"
#include "formdet/transform.hpp"

namespace formdet {

// One label line: class and box centre/size normalized to the image.
struct NormalizedLabel {
  FieldClass field_class = FieldClass::kTextInput;
  double cx = 0, cy = 0, w = 0, h = 0;

  bool operator==(const NormalizedLabel&) const = default;
};

NormalizedLabel to_normalized_label(const LabeledBox& b, int width_px, int height_px);

// "class cx cy w h" with six decimals. Edges are snapped to a 1e-6 grid so
// that the printed centre and size describe a box inside [0, 1].
std::string format_label_line(const NormalizedLabel& label);
// Throws ConfigError on malformed lines.
NormalizedLabel parse_label_line(std::string_view line);

// Pixel box described by a normalized label in a width x height image.
PixelBox label_to_pixels(const NormalizedLabel& label, int width_px, int height_px);

enum class Split { kTrain, kVal, kTest };
std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

struct SplitAssignment {
  std::map<std::string, Split> by_doc;
  std::uint64_t seed = 0;

  bool operator==(const SplitAssignment&) const = default;
};

struct DocPages {
  std::string doc_id;
  int page_count = 0;
};

// Seeded shuffle, then whole documents go to val until its page total
// reaches the target, then to test likewise; the rest are train.
// Throws InsufficientPages.
SplitAssignment split_documents(std::vector<DocPages> docs, std::uint64_t seed,
                                std::uint64_t val_pages_target,
                                std::uint64_t test_pages_target);

struct ManifestRow {
  std::string doc_id;
  int page_index = 0;
  Split split = Split::kTrain;
  std::string image_path;  // relative to the dataset root
  int width_px = 0;
  int height_px = 0;
  double scale = 0;
  std::optional<std::string> language;
  std::optional<std::string> domain;
  std::vector<NormalizedLabel> labels;

  bool operator==(const ManifestRow&) const = default;
};

using DatasetManifest = std::vector<ManifestRow>;

// NDJSON, one row per line, rows in the order given.
std::string manifest_to_ndjson(const DatasetManifest& manifest);
// Throws ConfigError on malformed rows.
DatasetManifest manifest_from_ndjson(std::string_view text);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Populates language/domain from an NDJSON tag file. Returns warnings for
// unknown keys and for tags naming pages absent from the manifest.
// Throws MalformedTagFile.
std::vector<std::string> attach_tags(DatasetManifest& manifest, std::string_view tag_ndjson);

struct EmitOptions {
  std::filesystem::path out_dir;
  bool include_empty_pages = false;
  int workers = 1;
};

struct EmitResult {
  DatasetManifest manifest;
  std::uint64_t render_failures = 0;
  std::uint64_t degenerate_boxes = 0;
  std::vector<std::string> failures;  // "doc_id:page: message"
};

// Writes images/{split}/{doc_id}_{page}.png and labels/{split}/{doc_id}_{page}.txt
// under out_dir for every accepted page and returns the manifest rows ordered
// by (doc_id, page_index). Rejected records are ignored. Throws IoError, and
// ConfigError when an accepted document has no split.
EmitResult emit_dataset(const std::vector<DocumentRecord>& records,
                        const SplitAssignment& split, const RenderConfig& render,
                        PageRenderer& renderer, const EmitOptions& options);

// Label file text for one page: one format_label_line per label.
std::string labels_file_text(const std::vector<NormalizedLabel>& labels);

std::string image_rel_path(Split s, std::string_view doc_id, int page);
std::string label_rel_path(Split s, std::string_view doc_id, int page);

}  // namespace formdet
