#include "formdet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "formdet/errors.hpp"
#include "formdet/parallel.hpp"

namespace formdet {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kGrid = 1e6;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

NormalizedLabel to_normalized_label(const LabeledBox& b, int width_px, int height_px) {
  const double W = width_px;
  const double H = height_px;
  return {b.field_class, (b.box.x + b.box.w / 2) / W, (b.box.y + b.box.h / 2) / H,
          b.box.w / W, b.box.h / H};
}

std::string format_label_line(const NormalizedLabel& label) {
  auto snap = [](double c, double half, long long& lo, long long& hi) {
    lo = std::llround(std::clamp(c - half, 0.0, 1.0) * kGrid);
    hi = std::llround(std::clamp(c + half, 0.0, 1.0) * kGrid);
    if ((lo + hi) % 2 != 0) --hi;
    if (hi <= lo) throw DegenerateRect("label narrower than the serialization grid");
  };
  long long x0, x1, y0, y1;
  snap(label.cx, label.w / 2, x0, x1);
  snap(label.cy, label.h / 2, y0, y1);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", class_code(label.field_class),
                static_cast<double>((x0 + x1) / 2) / kGrid,
                static_cast<double>((y0 + y1) / 2) / kGrid,
                static_cast<double>(x1 - x0) / kGrid, static_cast<double>(y1 - y0) / kGrid);
  return buf;
}

NormalizedLabel parse_label_line(std::string_view line) {
  line = trim(line);
  std::istringstream in{std::string(line)};
  long long code = -1;
  NormalizedLabel out;
  std::string extra;
  if (!(in >> code >> out.cx >> out.cy >> out.w >> out.h) || (in >> extra)) {
    throw ConfigError("malformed label line: " + std::string(line));
  }
  if (!field_class_from_code(code, out.field_class)) {
    throw ConfigError("unknown class code in label line: " + std::string(line));
  }
  return out;
}

PixelBox label_to_pixels(const NormalizedLabel& l, int width_px, int height_px) {
  const double W = width_px;
  const double H = height_px;
  return {(l.cx - l.w / 2) * W, (l.cy - l.h / 2) * H, l.w * W, l.h * H};
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> split_from_string(std::string_view s) {
  for (auto v : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

SplitAssignment split_documents(std::vector<DocPages> docs, std::uint64_t seed,
                                std::uint64_t val_pages_target,
                                std::uint64_t test_pages_target) {
  std::uint64_t total = 0;
  for (const auto& d : docs) total += static_cast<std::uint64_t>(std::max(0, d.page_count));
  if (val_pages_target + test_pages_target > total) {
    throw InsufficientPages("split targets " + std::to_string(val_pages_target) + " + " +
                            std::to_string(test_pages_target) + " exceed " +
                            std::to_string(total) + " available pages");
  }
  std::sort(docs.begin(), docs.end(),
            [](const DocPages& a, const DocPages& b) { return a.doc_id < b.doc_id; });
  std::mt19937_64 rng(seed);
  for (std::size_t i = docs.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(docs[i - 1], docs[j]);
  }

  SplitAssignment out;
  out.seed = seed;
  std::uint64_t val = 0, test = 0;
  for (const auto& d : docs) {
    Split s = Split::kTrain;
    if (val < val_pages_target) {
      s = Split::kVal;
      val += static_cast<std::uint64_t>(std::max(0, d.page_count));
    } else if (test < test_pages_target) {
      s = Split::kTest;
      test += static_cast<std::uint64_t>(std::max(0, d.page_count));
    }
    out.by_doc[d.doc_id] = s;
  }
  return out;
}

namespace {

ojson row_to_json(const ManifestRow& r) {
  ojson j;
  j["doc_id"] = r.doc_id;
  j["page_index"] = r.page_index;
  j["split"] = std::string(to_string(r.split));
  j["image_path"] = r.image_path;
  j["width_px"] = r.width_px;
  j["height_px"] = r.height_px;
  j["scale"] = r.scale;
  j["language"] = r.language ? ojson(*r.language) : ojson(nullptr);
  j["domain"] = r.domain ? ojson(*r.domain) : ojson(nullptr);
  ojson labels = ojson::array();
  for (const auto& l : r.labels) {
    labels.push_back(ojson::array({class_code(l.field_class), l.cx, l.cy, l.w, l.h}));
  }
  j["labels"] = std::move(labels);
  return j;
}

std::optional<std::string> optional_string(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

ManifestRow row_from_json(const ojson& j) {
  ManifestRow r;
  r.doc_id = j.at("doc_id").get<std::string>();
  r.page_index = j.at("page_index").get<int>();
  auto split = split_from_string(j.at("split").get<std::string>());
  if (!split) throw ConfigError("unknown split in manifest row");
  r.split = *split;
  r.image_path = j.at("image_path").get<std::string>();
  r.width_px = j.at("width_px").get<int>();
  r.height_px = j.at("height_px").get<int>();
  r.scale = j.at("scale").get<double>();
  r.language = optional_string(j, "language");
  r.domain = optional_string(j, "domain");
  for (const auto& l : j.at("labels")) {
    if (!l.is_array() || l.size() != 5) throw ConfigError("manifest label must have 5 values");
    NormalizedLabel nl;
    if (!field_class_from_code(l[0].get<long long>(), nl.field_class)) {
      throw ConfigError("unknown class code in manifest");
    }
    nl.cx = l[1].get<double>();
    nl.cy = l[2].get<double>();
    nl.w = l[3].get<double>();
    nl.h = l[4].get<double>();
    r.labels.push_back(nl);
  }
  return r;
}

}  // namespace

std::string manifest_to_ndjson(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& r : manifest) {
    out += row_to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

DatasetManifest manifest_from_ndjson(std::string_view text) {
  DatasetManifest out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(row_from_json(ojson::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_ndjson(ss.str());
}

std::vector<std::string> attach_tags(DatasetManifest& manifest, std::string_view tag_ndjson) {
  std::map<std::pair<std::string, int>, ManifestRow*> index;
  for (auto& r : manifest) index[{r.doc_id, r.page_index}] = &r;

  std::vector<std::string> warnings;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < tag_ndjson.size()) {
    std::size_t end = tag_ndjson.find('\n', pos);
    if (end == std::string_view::npos) end = tag_ndjson.size();
    std::string_view line = trim(tag_ndjson.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "tag line " + std::to_string(line_no);

    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedTagFile(where + ": " + e.what());
    }
    if (!j.is_object()) throw MalformedTagFile(where + ": not an object");
    auto doc = j.find("doc_id");
    auto page = j.find("page_index");
    if (doc == j.end() || !doc->is_string()) throw MalformedTagFile(where + ": missing doc_id");
    if (page == j.end() || !page->is_number_integer()) {
      throw MalformedTagFile(where + ": missing integer page_index");
    }
    std::optional<std::string> language, domain;
    for (const auto& [key, value] : j.items()) {
      if (key == "doc_id" || key == "page_index") continue;
      if (key == "language" || key == "domain") {
        if (value.is_null()) continue;
        if (!value.is_string()) throw MalformedTagFile(where + ": " + key + " must be a string");
        (key == "language" ? language : domain) = value.get<std::string>();
        continue;
      }
      warnings.push_back(where + ": unknown key '" + key + "'");
    }
    std::string id = doc->get<std::string>();
    int p = page->get<int>();
    auto it = index.find({id, p});
    if (it == index.end()) {
      warnings.push_back(where + ": no manifest page " + id + ":" + std::to_string(p));
      continue;
    }
    if (language) it->second->language = language;
    if (domain) it->second->domain = domain;
  }
  return warnings;
}

std::string image_rel_path(Split s, std::string_view doc_id, int page) {
  return "images/" + std::string(to_string(s)) + "/" + std::string(doc_id) + "_" +
         std::to_string(page) + ".png";
}

std::string label_rel_path(Split s, std::string_view doc_id, int page) {
  return "labels/" + std::string(to_string(s)) + "/" + std::string(doc_id) + "_" +
         std::to_string(page) + ".txt";
}

std::string labels_file_text(const std::vector<NormalizedLabel>& labels) {
  std::string out;
  for (const auto& l : labels) {
    out += format_label_line(l);
    out.push_back('\n');
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("error writing " + path.string());
}

struct PageJob {
  const DocumentRecord* doc;
  const PageRecord* page;
  Split split;
};

struct PageOutcome {
  std::optional<ManifestRow> row;
  std::uint64_t degenerate = 0;
  std::optional<std::string> failure;
};

}  // namespace

EmitResult emit_dataset(const std::vector<DocumentRecord>& records,
                        const SplitAssignment& split, const RenderConfig& render,
                        PageRenderer& renderer, const EmitOptions& options) {
  render.validate();
  std::vector<const DocumentRecord*> docs;
  for (const auto& r : records) {
    if (r.accepted()) docs.push_back(&r);
  }
  std::sort(docs.begin(), docs.end(), [](const DocumentRecord* a, const DocumentRecord* b) {
    return a->doc_id < b->doc_id;
  });

  std::vector<PageJob> jobs;
  for (const DocumentRecord* d : docs) {
    auto it = split.by_doc.find(d->doc_id);
    if (it == split.by_doc.end()) throw ConfigError("no split assigned to " + d->doc_id);
    std::vector<const PageRecord*> pages;
    for (const auto& p : d->pages) pages.push_back(&p);
    std::sort(pages.begin(), pages.end(), [](const PageRecord* a, const PageRecord* b) {
      return a->page_index < b->page_index;
    });
    for (const PageRecord* p : pages) {
      if (p->annotations.empty() && !options.include_empty_pages) continue;
      jobs.push_back({d, p, it->second});
    }
  }

  if (!jobs.empty()) {
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      std::error_code ec;
      std::filesystem::create_directories(options.out_dir / "images" / std::string(to_string(s)), ec);
      std::filesystem::create_directories(options.out_dir / "labels" / std::string(to_string(s)), ec);
      if (ec) throw IoError("cannot create dataset directories under " + options.out_dir.string());
    }
  }

  std::vector<PageOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    const PageJob& job = jobs[i];
    PageOutcome& out = outcomes[i];
    const PageGeometry& geom = job.page->geometry;
    const double scale = compute_render_scale(geom, render);
    const ImageSize size = rendered_size(geom, scale);
    const std::string tag = job.doc->doc_id + ":" + std::to_string(job.page->page_index);

    ManifestRow row;
    row.doc_id = job.doc->doc_id;
    row.page_index = job.page->page_index;
    row.split = job.split;
    row.image_path = image_rel_path(job.split, row.doc_id, row.page_index);
    row.width_px = size.width;
    row.height_px = size.height;
    row.scale = scale;

    std::string label_text;
    for (const FieldAnnotation& a : job.page->annotations) {
      try {
        PixelBox box = pdf_rect_to_pixels(a.rect, geom, scale);
        std::string line =
            format_label_line(to_normalized_label({a.field_class, box}, size.width, size.height));
        row.labels.push_back(parse_label_line(line));
        label_text += line;
        label_text.push_back('\n');
      } catch (const DegenerateRect&) {
        ++out.degenerate;
      }
    }
    if (row.labels.empty() && !options.include_empty_pages) return;

    RasterImage img;
    try {
      img = renderer.render({row.doc_id, job.doc->source_uri, row.page_index, geom, scale,
                             size.width, size.height});
      if (img.width != size.width || img.height != size.height) {
        throw RenderFailure("renderer returned wrong image size");
      }
    } catch (const RenderFailure& e) {
      out.failure = tag + ": " + e.what();
      return;
    }
    write_png(options.out_dir / row.image_path, img);
    write_text(options.out_dir / label_rel_path(job.split, row.doc_id, row.page_index), label_text);
    out.row = std::move(row);
  });

  EmitResult result;
  for (auto& o : outcomes) {
    result.degenerate_boxes += o.degenerate;
    if (o.failure) {
      ++result.render_failures;
      result.failures.push_back(std::move(*o.failure));
    }
    if (o.row) result.manifest.push_back(std::move(*o.row));
  }
  return result;
}

}  // namespace formdet
