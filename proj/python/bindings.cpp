#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "formdet/dataset.hpp"
#include "formdet/errors.hpp"
#include "formdet/eval.hpp"
#include "formdet/field_miner.hpp"
#include "formdet/form_preparer.hpp"
#include "formdet/pipeline.hpp"
#include "formdet/records_io.hpp"
#include "formdet/transform.hpp"

namespace py = pybind11;
using namespace formdet;

namespace {

PdfRect rect_of(const std::array<double, 4>& r) { return {r[0], r[1], r[2], r[3]}; }
std::array<double, 4> tuple_of(const PdfRect& r) { return {r.x0, r.y0, r.x1, r.y1}; }
std::array<double, 4> tuple_of(const PixelBox& b) { return {b.x, b.y, b.w, b.h}; }

FieldClass class_of(int code) {
  FieldClass c{};
  if (!field_class_from_code(code, c)) throw py::value_error("class code must be 0, 1 or 2");
  return c;
}

PageGeometry geometry_of(const std::array<double, 4>& media_box, int rotation) {
  PageGeometry g{rect_of(media_box), ((rotation % 360) + 360) % 360};
  if (g.rotation % 90 != 0) throw py::value_error("rotation must be a multiple of 90");
  return g;
}

CleaningConfig cleaning_of(bool enabled, double min_field_size_pt, double dedup_iou_threshold,
                           double min_onpage_fraction, bool drop_hidden, bool drop_choice) {
  CleaningConfig cfg;
  cfg.enabled = enabled;
  cfg.min_field_size_pt = min_field_size_pt;
  cfg.dedup_iou_threshold = dedup_iou_threshold;
  cfg.min_onpage_fraction = min_onpage_fraction;
  cfg.drop_hidden = drop_hidden;
  cfg.choice_policy = drop_choice ? ChoicePolicy::kDrop : ChoicePolicy::kAsTextInput;
  cfg.validate();
  return cfg;
}

std::optional<SliceKey> slice_of(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return slice_key_from_string(*s);
}

py::dict field_dict(const PreparedField& f) {
  py::dict d;
  d["class"] = class_code(f.field_class);
  d["rect"] = tuple_of(f.rect);
  d["name"] = f.name;
  d["page_index"] = f.page_index;
  return d;
}

PreparedField field_from(const py::dict& d) {
  PreparedField f;
  f.field_class = class_of(d["class"].cast<int>());
  f.rect = rect_of(d["rect"].cast<std::array<double, 4>>());
  f.name = d.contains("name") ? d["name"].cast<std::string>() : "";
  f.page_index = d["page_index"].cast<int>();
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Form field mining, dataset building, evaluation and form preparation";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<MalformedPdf>(m, "MalformedPdf", base.ptr());
  py::register_exception<EncryptedPdf>(m, "EncryptedPdf", base.ptr());
  py::register_exception<PageOutOfRange>(m, "PageOutOfRange", base.ptr());
  py::register_exception<DegenerateRect>(m, "DegenerateRect", base.ptr());
  py::register_exception<InsufficientPages>(m, "InsufficientPages", base.ptr());
  py::register_exception<MalformedTagFile>(m, "MalformedTagFile", base.ptr());
  py::register_exception<MalformedDetections>(m, "MalformedDetections", base.ptr());
  py::register_exception<UnknownSliceKey>(m, "UnknownSliceKey", base.ptr());
  py::register_exception<ExistingForm>(m, "ExistingForm", base.ptr());
  py::register_exception<GeometryMismatch>(m, "GeometryMismatch", base.ptr());
  py::register_exception<RenderFailure>(m, "RenderFailure", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.attr("CLASS_NAMES") = py::make_tuple("ChoiceButton", "TextInput", "Signature");
  m.attr("DEFAULT_TARGET_PX") = RenderConfig{}.target_long_side_px;

  m.def("doc_id", [](py::bytes data) { return compute_doc_id(std::string(data)); },
        py::arg("pdf"));

  m.def(
      "inspect",
      [](py::bytes data) {
        auto doc = open_document(std::string(data));
        py::dict d;
        d["doc_id"] = doc.doc_id();
        d["page_count"] = doc.page_count();
        d["form_standard"] = std::string(to_string(detect_form_standard(doc)));
        py::list pages;
        for (int p = 0; p < doc.page_count(); ++p) {
          PageGeometry g = page_geometry(doc, p);
          py::dict pd;
          pd["media_box"] = tuple_of(g.media_box);
          pd["rotation"] = g.rotation;
          pages.append(pd);
        }
        d["pages"] = pages;
        py::list widgets;
        for (const auto& w : enumerate_widgets(doc)) {
          py::dict wd;
          wd["page_index"] = w.page_index;
          wd["field_type"] = std::string(to_string(w.field_type));
          wd["rect"] = tuple_of(w.rect);
          wd["hidden"] = w.hidden;
          wd["field_name"] = w.field_name;
          widgets.append(wd);
        }
        d["widgets"] = widgets;
        return d;
      },
      py::arg("pdf"), "Document id, form standard, page geometry and widget annotations.");

  m.def(
      "page_text",
      [](py::bytes data, int page) { return extract_page_text(open_document(std::string(data)), page); },
      py::arg("pdf"), py::arg("page"));

  m.def(
      "mine",
      [](py::bytes data, bool clean, double min_field_size_pt, double dedup_iou_threshold,
         double min_onpage_fraction, bool drop_hidden, bool drop_choice) {
        CleaningConfig cfg = cleaning_of(clean, min_field_size_pt, dedup_iou_threshold,
                                         min_onpage_fraction, drop_hidden, drop_choice);
        std::string bytes(data);
        py::gil_scoped_release release;
        return record_to_json(mine_bytes(std::move(bytes), cfg));
      },
      py::arg("pdf"), py::arg("clean") = true, py::arg("min_field_size_pt") = 4.0,
      py::arg("dedup_iou_threshold") = 0.85, py::arg("min_onpage_fraction") = 0.5,
      py::arg("drop_hidden") = true, py::arg("drop_choice") = false,
      "Mines one PDF and returns its document record as JSON text.");

  m.def(
      "run_mine",
      [](const std::string& config_json) {
        RunConfig cfg = run_config_from_json(config_json);
        cfg.validate();
        py::gil_scoped_release release;
        return stats_to_json(cmd_mine(cfg).stats);
      },
      py::arg("config_json"), "Runs the mine step for a RunConfig; returns stats JSON.");

  m.def(
      "run_build",
      [](const std::filesystem::path& records, const std::string& config_json,
         std::optional<std::filesystem::path> tags, std::optional<std::string> renderer) {
        RunConfig cfg = run_config_from_json(config_json);
        cfg.validate();
        std::unique_ptr<PageRenderer> r;
        if (renderer) {
          r = std::make_unique<ExternalRenderer>(*renderer);
        } else {
          r = renderer_from_environment();
        }
        py::gil_scoped_release release;
        BuildOutput out = cmd_build(records, cfg, *r, tags);
        return std::make_tuple(out.emit.manifest.size(), out.emit.render_failures,
                               out.emit.degenerate_boxes);
      },
      py::arg("records"), py::arg("config_json"), py::arg("tags") = py::none(),
      py::arg("renderer") = py::none(),
      "Builds the dataset; returns (pages, render_failures, degenerate_boxes).");

  m.def(
      "stats",
      [](const std::filesystem::path& records) { return stats_to_json(cmd_stats(records)); },
      py::arg("records"));

  m.def(
      "evaluate",
      [](const std::string& manifest_ndjson, const std::string& detections_ndjson,
         std::optional<std::string> slice, bool include_empty_pages) {
        DatasetManifest manifest = manifest_from_ndjson(manifest_ndjson);
        std::vector<Detection> dets = parse_detections(detections_ndjson);
        EvalOptions opts;
        opts.include_empty_pages = include_empty_pages;
        auto key = slice_of(slice);
        py::gil_scoped_release release;
        return report_to_json(sliced_report(dets, manifest, key, opts));
      },
      py::arg("manifest_ndjson"), py::arg("detections_ndjson"), py::arg("slice") = py::none(),
      py::arg("include_empty_pages") = false,
      "Sliced mAP50-95 report as JSON text, from manifest and detections NDJSON text.");

  m.def(
      "evaluate_files",
      [](const std::filesystem::path& manifest, const std::filesystem::path& detections,
         std::optional<std::string> slice, const std::filesystem::path& out_dir,
         bool include_empty_pages) {
        EvalOptions opts;
        opts.include_empty_pages = include_empty_pages;
        auto key = slice_of(slice);
        py::gil_scoped_release release;
        return report_to_json(cmd_eval(manifest, detections, key, out_dir, opts));
      },
      py::arg("manifest"), py::arg("detections"), py::arg("slice") = py::none(),
      py::arg("out_dir") = std::filesystem::path("."), py::arg("include_empty_pages") = false,
      "Like the eval command: writes report.json and report.txt, returns the JSON.");

  m.def(
      "map_50_95",
      [](const std::vector<std::tuple<std::string, int, int, std::array<double, 4>, double>>& dets,
         const std::vector<std::tuple<std::string, int, int, std::array<double, 4>>>& gts,
         const std::vector<std::pair<std::string, int>>& images) {
        std::vector<Detection> d;
        for (const auto& [doc, page, c, b, score] : dets) {
          d.push_back({{doc, page}, class_of(c), {b[0], b[1], b[2], b[3]}, score});
        }
        std::vector<GroundTruth> g;
        for (const auto& [doc, page, c, b] : gts) g.push_back({{doc, page}, class_of(c), {b[0], b[1], b[2], b[3]}});
        std::vector<ImageKey> keys;
        for (const auto& [doc, page] : images) keys.push_back({doc, page});
        return report_to_json({map_50_95(d, g, keys)});
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("images"),
      "Detections (doc, page, class, [x, y, w, h], score) against ground truth "
      "(doc, page, class, [x, y, w, h]); returns report JSON.");

  m.def(
      "prepare",
      [](py::bytes data, const std::string& detections_ndjson, std::optional<std::string> manifest_ndjson,
         double score_threshold, const std::string& overlap, const std::string& existing,
         int target_px) {
        PrepareConfig cfg;
        cfg.score_threshold = score_threshold;
        auto op = overlap_policy_from_string(overlap);
        auto ex = existing_form_policy_from_string(existing);
        if (!op) throw py::value_error("overlap must be KeepHigherScore or KeepAll");
        if (!ex) throw py::value_error("existing must be Refuse or Append");
        cfg.overlap_policy = *op;
        cfg.existing_form_policy = *ex;
        cfg.render.target_long_side_px = target_px;
        cfg.validate();
        std::string pdf(data);
        std::vector<Detection> dets = parse_detections(detections_ndjson);
        std::vector<ManifestRow> rows;
        if (manifest_ndjson) {
          std::string id = compute_doc_id(pdf);
          for (auto& r : manifest_from_ndjson(*manifest_ndjson)) {
            if (r.doc_id == id) rows.push_back(std::move(r));
          }
        }
        PrepareResult res = prepare_form(std::move(pdf), dets, rows, cfg);
        py::list fields;
        for (const auto& f : res.fields) fields.append(field_dict(f));
        return py::make_tuple(py::bytes(res.bytes), fields);
      },
      py::arg("pdf"), py::arg("detections_ndjson"), py::arg("manifest_ndjson") = py::none(),
      py::arg("score_threshold") = 0.5, py::arg("overlap") = "KeepHigherScore",
      py::arg("existing") = "Refuse", py::arg("target_px") = RenderConfig{}.target_long_side_px,
      "Inserts fillable fields; returns (pdf bytes, list of field dicts).");

  m.def(
      "verify_roundtrip",
      [](py::bytes data, const std::vector<py::dict>& expected) {
        std::vector<PreparedField> fields;
        for (const auto& d : expected) fields.push_back(field_from(d));
        RoundtripReport rep = verify_roundtrip(std::string(data), fields);
        py::dict d;
        d["passed"] = rep.passed;
        d["expected"] = rep.expected;
        d["recovered"] = rep.recovered;
        d["max_deviation_pt"] = rep.max_deviation_pt;
        d["missing"] = rep.missing.size();
        d["class_mismatches"] = rep.class_mismatches.size();
        d["extras"] = rep.extras.size();
        d["error"] = rep.error;
        return d;
      },
      py::arg("pdf"), py::arg("expected"));

  m.def(
      "render_scale",
      [](std::array<double, 4> media_box, int rotation, int target_px) {
        RenderConfig cfg{target_px};
        cfg.validate();
        PageGeometry g = geometry_of(media_box, rotation);
        double s = compute_render_scale(g, cfg);
        ImageSize sz = rendered_size(g, s);
        return std::make_tuple(s, sz.width, sz.height);
      },
      py::arg("media_box"), py::arg("rotation") = 0,
      py::arg("target_px") = RenderConfig{}.target_long_side_px,
      "Returns (scale, width_px, height_px).");

  m.def(
      "pdf_rect_to_pixels",
      [](std::array<double, 4> rect, std::array<double, 4> media_box, int rotation, double scale) {
        return tuple_of(pdf_rect_to_pixels(rect_of(rect), geometry_of(media_box, rotation), scale));
      },
      py::arg("rect"), py::arg("media_box"), py::arg("rotation"), py::arg("scale"));

  m.def(
      "pixels_to_pdf_rect",
      [](std::array<double, 4> box, std::array<double, 4> media_box, int rotation, double scale) {
        return tuple_of(
            pixels_to_pdf_rect({box[0], box[1], box[2], box[3]}, geometry_of(media_box, rotation), scale));
      },
      py::arg("box"), py::arg("media_box"), py::arg("rotation"), py::arg("scale"));

  m.def(
      "label_line",
      [](int c, std::array<double, 4> box, int width_px, int height_px) {
        return format_label_line(
            to_normalized_label({class_of(c), {box[0], box[1], box[2], box[3]}}, width_px, height_px));
      },
      py::arg("class_code"), py::arg("box"), py::arg("width_px"), py::arg("height_px"));

  m.def(
      "split_documents",
      [](const std::vector<std::pair<std::string, int>>& docs, std::uint64_t seed,
         std::uint64_t val_pages, std::uint64_t test_pages) {
        std::vector<DocPages> in;
        for (const auto& [id, n] : docs) in.push_back({id, n});
        std::map<std::string, std::string> out;
        for (const auto& [id, s] : split_documents(in, seed, val_pages, test_pages).by_doc) {
          out[id] = std::string(to_string(s));
        }
        return out;
      },
      py::arg("docs"), py::arg("seed"), py::arg("val_pages"), py::arg("test_pages"));
}
