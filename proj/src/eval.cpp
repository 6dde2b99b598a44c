#include "formdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "formdet/errors.hpp"

namespace formdet {

using ojson = nlohmann::ordered_json;

double iou_threshold(int index) { return (50 + 5 * index) / 100.0; }

std::vector<MatchPair> match_detections(const std::vector<ScoredBox>& dets,
                                        const std::vector<PixelBox>& gts,
                                        double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<bool> taken(gts.size(), false);
  std::vector<MatchPair> out;
  out.reserve(dets.size());
  for (std::size_t d : order) {
    std::optional<std::size_t> best;
    double best_iou = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      double v = iou(dets[d].box, gts[g]);
      if (v >= iou_threshold && (!best || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best) taken[*best] = true;
    out.push_back({d, best});
  }
  return out;
}

std::optional<double> average_precision(const std::vector<RankedMatch>& ranked,
                                        std::size_t total_gt) {
  if (total_gt == 0) {
    if (ranked.empty()) return std::nullopt;
    return 0.0;
  }
  const std::size_t n = ranked.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked[i].true_positive) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
  }
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0;
  for (int k = 0; k <= 100; ++k) {
    double r = k / 100.0;
    auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0 * 100.0;
}

const ClassResult* EvalReport::find(FieldClass c) const {
  for (const auto& r : classes) {
    if (r.field_class == c) return &r;
  }
  return nullptr;
}

EvalReport map_50_95(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                     const std::vector<ImageKey>& images) {
  std::map<ImageKey, std::size_t> image_index;
  for (const auto& k : images) image_index.emplace(k, image_index.size());
  const std::size_t num_images = image_index.size();

  EvalReport report;
  report.images = num_images;

  // [class][image] -> indices into dets / gts
  std::vector<std::vector<std::vector<std::size_t>>> det_by(
      kNumFieldClasses, std::vector<std::vector<std::size_t>>(num_images));
  std::vector<std::vector<std::vector<PixelBox>>> gt_by(
      kNumFieldClasses, std::vector<std::vector<PixelBox>>(num_images));
  std::array<std::size_t, kNumFieldClasses> gt_count{}, det_count{};

  for (const auto& g : gts) {
    auto it = image_index.find(g.image);
    if (it == image_index.end()) {
      throw ConfigError("ground truth on image outside the evaluated set: " + g.image.doc_id +
                        ":" + std::to_string(g.image.page_index));
    }
    const auto c = static_cast<std::size_t>(class_code(g.field_class));
    gt_by[c][it->second].push_back(g.box);
    ++gt_count[c];
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    auto it = image_index.find(dets[i].image);
    if (it == image_index.end()) continue;
    const auto c = static_cast<std::size_t>(class_code(dets[i].field_class));
    det_by[c][it->second].push_back(i);
    ++det_count[c];
  }

  double map_sum = 0;
  std::size_t map_n = 0;
  for (FieldClass cls : kAllFieldClasses) {
    const auto c = static_cast<std::size_t>(class_code(cls));
    report.num_gt += gt_count[c];
    report.num_det += det_count[c];
    if (gt_count[c] == 0 && det_count[c] == 0) continue;

    // Global rank order for this class.
    std::vector<std::size_t> ranked;
    for (const auto& per_image : det_by[c]) ranked.insert(ranked.end(), per_image.begin(), per_image.end());
    std::sort(ranked.begin(), ranked.end());
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      return dets[a].score > dets[b].score;
    });

    ClassResult cr;
    cr.field_class = cls;
    cr.num_gt = gt_count[c];
    cr.num_det = det_count[c];
    std::vector<char> is_tp(dets.size(), 0);
    double ap_sum = 0;
    for (int t = 0; t < kNumIouThresholds; ++t) {
      const double thr = iou_threshold(t);
      for (std::size_t img = 0; img < num_images; ++img) {
        const auto& idx = det_by[c][img];
        if (idx.empty()) continue;
        std::vector<ScoredBox> local;
        local.reserve(idx.size());
        for (std::size_t i : idx) local.push_back({dets[i].box, dets[i].score});
        for (const auto& m : match_detections(local, gt_by[c][img], thr)) {
          is_tp[idx[m.det]] = m.gt.has_value() ? 1 : 0;
        }
      }
      std::vector<RankedMatch> rm;
      rm.reserve(ranked.size());
      std::size_t tps = 0;
      for (std::size_t i : ranked) {
        rm.push_back({dets[i].score, is_tp[i] != 0});
        tps += is_tp[i] != 0;
      }
      cr.true_positives[static_cast<std::size_t>(t)] = tps;
      cr.ap[static_cast<std::size_t>(t)] = average_precision(rm, cr.num_gt).value_or(0.0);
      ap_sum += cr.ap[static_cast<std::size_t>(t)];
    }
    cr.ap50_95 = ap_sum / kNumIouThresholds;
    if (cr.num_gt > 0) {
      map_sum += cr.ap50_95;
      ++map_n;
    }
    report.classes.push_back(cr);
  }
  if (map_n > 0) report.map50_95 = map_sum / static_cast<double>(map_n);
  return report;
}

SliceKey slice_key_from_string(std::string_view s) {
  if (s == "language") return SliceKey::kLanguage;
  if (s == "domain") return SliceKey::kDomain;
  throw UnknownSliceKey("unknown slice key '" + std::string(s) +
                        "' (expected language or domain)");
}

std::string_view to_string(SliceKey k) {
  return k == SliceKey::kLanguage ? "language" : "domain";
}

std::vector<GroundTruth> ground_truth_from_manifest(const DatasetManifest& manifest) {
  std::vector<GroundTruth> out;
  for (const auto& row : manifest) {
    for (const auto& l : row.labels) {
      out.push_back({{row.doc_id, row.page_index}, l.field_class,
                     label_to_pixels(l, row.width_px, row.height_px)});
    }
  }
  return out;
}

std::vector<EvalReport> sliced_report(const std::vector<Detection>& dets,
                                      const DatasetManifest& manifest,
                                      std::optional<SliceKey> slice_key,
                                      const EvalOptions& options) {
  std::map<ImageKey, const ManifestRow*> rows;
  for (const auto& r : manifest) rows[{r.doc_id, r.page_index}] = &r;
  for (const auto& d : dets) {
    if (!rows.count(d.image)) {
      throw MalformedDetections("detection for page not in manifest: " + d.image.doc_id + ":" +
                                std::to_string(d.image.page_index));
    }
  }

  DatasetManifest evaluated;
  for (const auto& [key, row] : rows) {
    if (row->labels.empty() && !options.include_empty_pages) continue;
    evaluated.push_back(*row);
  }

  auto run = [&](const std::vector<const ManifestRow*>& subset) {
    std::vector<ImageKey> images;
    DatasetManifest sub;
    for (const ManifestRow* r : subset) {
      images.push_back({r->doc_id, r->page_index});
      sub.push_back(*r);
    }
    std::vector<ImageKey> sorted = images;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Detection> kept;
    for (const auto& d : dets) {
      if (std::binary_search(sorted.begin(), sorted.end(), d.image)) kept.push_back(d);
    }
    return map_50_95(kept, ground_truth_from_manifest(sub), images);
  };

  std::vector<const ManifestRow*> all;
  for (const auto& r : evaluated) all.push_back(&r);
  std::vector<EvalReport> out;
  out.push_back(run(all));
  if (!slice_key) return out;
  out.front().slice_key = std::string(to_string(*slice_key));

  std::map<std::string, std::vector<const ManifestRow*>> groups;
  for (const ManifestRow* r : all) {
    const auto& tag = *slice_key == SliceKey::kLanguage ? r->language : r->domain;
    if (tag) groups[*tag].push_back(r);
  }
  for (const auto& [value, subset] : groups) {
    EvalReport rep = run(subset);
    rep.slice = value;
    rep.slice_key = std::string(to_string(*slice_key));
    out.push_back(std::move(rep));
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double finite_number(const ojson& v, const std::string& where, const char* what) {
  if (!v.is_number()) throw MalformedDetections(where + ": " + what + " must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw MalformedDetections(where + ": " + what + " is not finite");
  return d;
}

}  // namespace

std::vector<Detection> parse_detections(std::string_view ndjson) {
  std::vector<Detection> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < ndjson.size()) {
    std::size_t end = ndjson.find('\n', pos);
    if (end == std::string_view::npos) end = ndjson.size();
    std::string_view line = trim(ndjson.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "detections line " + std::to_string(line_no);

    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedDetections(where + ": " + e.what());
    }
    if (!j.is_object()) throw MalformedDetections(where + ": not an object");
    Detection d;
    auto doc = j.find("doc_id");
    if (doc == j.end() || !doc->is_string()) throw MalformedDetections(where + ": missing doc_id");
    d.image.doc_id = doc->get<std::string>();
    auto page = j.find("page_index");
    if (page == j.end() || !page->is_number_integer() || page->get<long long>() < 0) {
      throw MalformedDetections(where + ": page_index must be a non-negative integer");
    }
    d.image.page_index = page->get<int>();
    auto cls = j.find("class");
    if (cls == j.end() || !cls->is_number_integer() ||
        !field_class_from_code(cls->get<long long>(), d.field_class)) {
      throw MalformedDetections(where + ": class must be 0, 1 or 2");
    }
    auto box = j.find("box");
    if (box == j.end() || !box->is_array() || box->size() != 4) {
      throw MalformedDetections(where + ": box must be [x, y, w, h]");
    }
    d.box = {finite_number((*box)[0], where, "box x"), finite_number((*box)[1], where, "box y"),
             finite_number((*box)[2], where, "box w"), finite_number((*box)[3], where, "box h")};
    if (!(d.box.w > 0) || !(d.box.h > 0)) {
      throw MalformedDetections(where + ": box width and height must be positive");
    }
    auto score = j.find("score");
    if (score == j.end()) throw MalformedDetections(where + ": missing score");
    d.score = finite_number(*score, where, "score");
    if (d.score < 0 || d.score > 1) throw MalformedDetections(where + ": score outside [0, 1]");
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open detections " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_detections(ss.str());
}

std::string detections_to_ndjson(const std::vector<Detection>& dets) {
  std::string out;
  for (const auto& d : dets) {
    ojson j;
    j["doc_id"] = d.image.doc_id;
    j["page_index"] = d.image.page_index;
    j["class"] = class_code(d.field_class);
    j["box"] = ojson::array({d.box.x, d.box.y, d.box.w, d.box.h});
    j["score"] = d.score;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

namespace {

std::string threshold_label(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", iou_threshold(t));
  return buf;
}

}  // namespace

std::string report_to_json(const std::vector<EvalReport>& reports) {
  ojson arr = ojson::array();
  for (const auto& r : reports) {
    ojson j;
    j["slice"] = r.slice;
    j["slice_key"] = r.slice_key ? ojson(*r.slice_key) : ojson(nullptr);
    j["images"] = r.images;
    j["num_gt"] = r.num_gt;
    j["num_det"] = r.num_det;
    j["map50_95"] = r.map50_95 ? ojson(*r.map50_95) : ojson(nullptr);
    j["no_evaluable_classes"] = r.no_evaluable_classes();
    ojson classes = ojson::array();
    for (const auto& c : r.classes) {
      ojson cj;
      cj["class"] = class_code(c.field_class);
      cj["name"] = std::string(class_display_name(c.field_class));
      cj["num_gt"] = c.num_gt;
      cj["num_det"] = c.num_det;
      cj["ap50_95"] = c.ap50_95;
      ojson ap;
      ojson tp;
      for (int t = 0; t < kNumIouThresholds; ++t) {
        ap[threshold_label(t)] = c.ap[static_cast<std::size_t>(t)];
        tp[threshold_label(t)] = c.true_positives[static_cast<std::size_t>(t)];
      }
      cj["ap"] = std::move(ap);
      cj["true_positives"] = std::move(tp);
      classes.push_back(std::move(cj));
    }
    j["classes"] = std::move(classes);
    arr.push_back(std::move(j));
  }
  ojson root;
  root["reports"] = std::move(arr);
  return root.dump(2) + "\n";
}

std::string report_to_table(const std::vector<EvalReport>& reports) {
  const FieldClass columns[] = {FieldClass::kTextInput, FieldClass::kChoiceButton,
                                FieldClass::kSignature};
  const char* headers[] = {"Text", "Choice", "Sig."};
  const double all_images = reports.empty() ? 0.0 : static_cast<double>(reports.front().images);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Slice", "% Pages", headers[0], headers[1], headers[2], "All"});
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::string name = r.slice;
    if (i > 0 && r.slice_key) name = "  " + *r.slice_key + "=" + r.slice;
    std::vector<std::string> row{name, all_images > 0 ? fmt(100.0 * r.images / all_images) : "-"};
    for (FieldClass c : columns) {
      const ClassResult* cr = r.find(c);
      row.push_back(cr ? fmt(cr->ap50_95) : "-");
    }
    row.push_back(r.map50_95 ? fmt(*r.map50_95) : "n/a");
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const std::string& cell = rows[r][c];
      std::string pad(width[c] - cell.size(), ' ');
      if (c == 0) {
        out += cell + pad;
      } else {
        out += "  " + pad + cell;
      }
    }
    out.push_back('\n');
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

}  // namespace formdet
