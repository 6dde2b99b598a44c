#include "formdet/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

#include "formdet/errors.hpp"
#include "formdet/parallel.hpp"
#include "formdet/pdf_model.hpp"
#include "formdet/records_io.hpp"

namespace formdet {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::string>{}(path.string()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("error writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void RunConfig::validate() const {
  cleaning.validate();
  render.validate();
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

namespace {

ojson cleaning_json(const CleaningConfig& c) { return ojson::parse(cleaning_config_to_json(c)); }

template <class T>
void take(const ojson& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void reject_unknown(const ojson& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  ojson j;
  j["inputs"] = cfg.inputs;
  j["input_lists"] = cfg.input_lists;
  j["output_dir"] = cfg.output_dir;
  j["cleaning"] = cleaning_json(cfg.cleaning);
  j["render"] = {{"target_long_side_px", cfg.render.target_long_side_px}};
  j["split"] = {{"seed", cfg.split_seed}, {"val_pages", cfg.val_pages}, {"test_pages", cfg.test_pages}};
  j["include_empty_pages"] = cfg.include_empty_pages;
  j["workers"] = cfg.workers;
  j["resume"] = cfg.resume;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text) {
  RunConfig cfg;
  try {
    ojson j = ojson::parse(text);
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    reject_unknown(j, {"inputs", "input_lists", "output_dir", "cleaning", "render", "split",
                       "include_empty_pages", "workers", "resume"},
                   "run config");
    take(j, "inputs", cfg.inputs);
    take(j, "input_lists", cfg.input_lists);
    take(j, "output_dir", cfg.output_dir);
    if (auto it = j.find("cleaning"); it != j.end()) {
      reject_unknown(*it, {"enabled", "min_field_size_pt", "dedup_iou_threshold",
                           "min_onpage_fraction", "drop_hidden", "choice_policy"},
                     "cleaning");
      take(*it, "enabled", cfg.cleaning.enabled);
      take(*it, "min_field_size_pt", cfg.cleaning.min_field_size_pt);
      take(*it, "dedup_iou_threshold", cfg.cleaning.dedup_iou_threshold);
      take(*it, "min_onpage_fraction", cfg.cleaning.min_onpage_fraction);
      take(*it, "drop_hidden", cfg.cleaning.drop_hidden);
      if (auto cp = it->find("choice_policy"); cp != it->end()) {
        std::string v = cp->get<std::string>();
        if (v == "drop") {
          cfg.cleaning.choice_policy = ChoicePolicy::kDrop;
        } else if (v == "text_input") {
          cfg.cleaning.choice_policy = ChoicePolicy::kAsTextInput;
        } else {
          throw ConfigError("choice_policy must be text_input or drop");
        }
      }
    }
    if (auto it = j.find("render"); it != j.end()) {
      reject_unknown(*it, {"target_long_side_px"}, "render");
      take(*it, "target_long_side_px", cfg.render.target_long_side_px);
    }
    if (auto it = j.find("split"); it != j.end()) {
      reject_unknown(*it, {"seed", "val_pages", "test_pages"}, "split");
      take(*it, "seed", cfg.split_seed);
      take(*it, "val_pages", cfg.val_pages);
      take(*it, "test_pages", cfg.test_pages);
    }
    take(j, "include_empty_pages", cfg.include_empty_pages);
    take(j, "workers", cfg.workers);
    take(j, "resume", cfg.resume);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(read_file(path)); }

std::string mining_config_hash(const CleaningConfig& cfg) {
  return compute_doc_id("formdet-mine-v1\n" + cleaning_config_to_json(cfg));
}

namespace {

bool has_pdf_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".pdf";
}

}  // namespace

std::vector<fs::path> collect_inputs(const RunConfig& cfg) {
  std::set<fs::path> paths;
  auto add = [&](const fs::path& p) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      for (fs::recursive_directory_iterator it(p, fs::directory_options::skip_permission_denied, ec), end;
           it != end; it.increment(ec)) {
        if (ec) break;
        if (it->is_regular_file(ec) && has_pdf_extension(it->path())) paths.insert(it->path());
      }
    } else if (fs::exists(p, ec)) {
      paths.insert(p);
    } else {
      throw IoError("input does not exist: " + p.string());
    }
  };
  for (const auto& in : cfg.inputs) add(in);
  for (const auto& list : cfg.input_lists) {
    std::istringstream lines(read_file(list));
    std::string line;
    while (std::getline(lines, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      std::size_t start = line.find_first_not_of(' ');
      if (start == std::string::npos || line[start] == '#') continue;
      std::string entry = line.substr(start);
      if (entry.rfind("file://", 0) == 0) entry = entry.substr(7);
      add(entry);
    }
  }
  return {paths.begin(), paths.end()};
}

MineOutput cmd_mine(const RunConfig& cfg, const LogFn& log) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("output directory is required");
  const fs::path out_dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const auto inputs = collect_inputs(cfg);
  const fs::path marker_dir = out_dir / ".markers" / mining_config_hash(cfg.cleaning);
  if (cfg.resume) fs::create_directories(marker_dir, ec);

  struct Slot {
    std::optional<DocumentRecord> record;
    bool resumed = false;
    std::optional<std::string> io_error;
  };
  std::vector<Slot> slots(inputs.size());
  parallel_for(inputs.size(), cfg.workers, [&](std::size_t i) {
    const fs::path& path = inputs[i];
    std::string bytes;
    try {
      bytes = read_file(path);
    } catch (const IoError& e) {
      slots[i].io_error = e.what();
      return;
    }
    const std::string id = compute_doc_id(bytes);
    const fs::path marker = marker_dir / (id + ".json");
    if (cfg.resume && fs::exists(marker)) {
      try {
        DocumentRecord r = record_from_json(read_file(marker));
        if (r.doc_id == id) {
          r.source_uri = path.string();
          slots[i].record = std::move(r);
          slots[i].resumed = true;
          return;
        }
      } catch (const Error&) {
        // stale or partial marker: mine again
      }
    }
    slots[i].record = mine_bytes(std::move(bytes), cfg.cleaning, path.string());
    if (cfg.resume) write_file_atomic(marker, record_to_json(*slots[i].record));
  });

  MineOutput out;
  std::map<std::string, DocumentRecord> by_id;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].io_error) {
      ++out.io_errors;
      if (log) log("warning: " + *slots[i].io_error);
      continue;
    }
    if (slots[i].resumed) ++out.resumed;
    DocumentRecord& r = *slots[i].record;
    if (by_id.count(r.doc_id)) {
      ++out.duplicates;
      if (log) log("duplicate content skipped: " + inputs[i].string());
      continue;
    }
    by_id.emplace(r.doc_id, std::move(r));
  }
  for (auto& [id, r] : by_id) {
    out.stats.add(r);
    out.records.push_back(std::move(r));
  }

  write_file_atomic(out_dir / "records.jsonl", records_to_ndjson(out.records));
  write_file_atomic(out_dir / "stats.json", stats_to_json(out.stats));
  write_file_atomic(out_dir / "run_config.json", run_config_to_json(cfg));
  return out;
}

namespace {

std::string splits_json(const SplitAssignment& split, const RunConfig& cfg) {
  ojson j;
  j["seed"] = split.seed;
  j["val_pages_target"] = cfg.val_pages;
  j["test_pages_target"] = cfg.test_pages;
  ojson assignment;
  for (const auto& [doc, s] : split.by_doc) assignment[doc] = std::string(to_string(s));
  j["assignment"] = std::move(assignment);
  return j.dump(2) + "\n";
}

std::string data_yaml(const fs::path& root) {
  std::string out = "path: " + fs::absolute(root).lexically_normal().string() + "\n";
  out += "train: images/train\nval: images/val\ntest: images/test\n";
  out += "nc: " + std::to_string(kNumFieldClasses) + "\nnames:\n";
  const char* names[] = {"ChoiceButton", "TextInput", "Signature"};
  for (FieldClass c : kAllFieldClasses) {
    out += "  " + std::to_string(class_code(c)) + ": " + names[class_code(c)] + "\n";
  }
  return out;
}

}  // namespace

BuildOutput cmd_build(const fs::path& records_path, const RunConfig& cfg, PageRenderer& renderer,
                      const std::optional<fs::path>& tags_path, const LogFn& log) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("output directory is required");
  const fs::path out_dir = cfg.output_dir;
  std::vector<DocumentRecord> records = read_records(records_path);

  std::vector<DocPages> docs;
  for (const auto& r : records) {
    if (!r.accepted()) continue;
    int pages = 0;
    for (const auto& p : r.pages) {
      if (cfg.include_empty_pages || !p.annotations.empty()) ++pages;
    }
    docs.push_back({r.doc_id, pages});
  }

  BuildOutput out;
  out.split = split_documents(docs, cfg.split_seed, cfg.val_pages, cfg.test_pages);
  EmitOptions opts;
  opts.out_dir = out_dir;
  opts.include_empty_pages = cfg.include_empty_pages;
  opts.workers = cfg.workers;
  out.emit = emit_dataset(records, out.split, cfg.render, renderer, opts);
  for (const auto& f : out.emit.failures) {
    if (log) log("render failure: " + f);
  }

  if (tags_path) {
    out.tag_warnings = attach_tags(out.emit.manifest, read_file(*tags_path));
    for (const auto& w : out.tag_warnings) {
      if (log) log("tag warning: " + w);
    }
  }

  write_file_atomic(out_dir / "manifest.jsonl", manifest_to_ndjson(out.emit.manifest));
  write_file_atomic(out_dir / "splits.json", splits_json(out.split, cfg));
  write_file_atomic(out_dir / "data.yaml", data_yaml(out_dir));
  ojson stats;
  std::map<std::string, std::uint64_t> pages_per_split{{"train", 0}, {"val", 0}, {"test", 0}};
  for (const auto& row : out.emit.manifest) ++pages_per_split[std::string(to_string(row.split))];
  stats["pages"] = out.emit.manifest.size();
  stats["pages_per_split"] = pages_per_split;
  stats["render_failures"] = out.emit.render_failures;
  stats["degenerate_boxes"] = out.emit.degenerate_boxes;
  stats["tag_warnings"] = out.tag_warnings.size();
  write_file_atomic(out_dir / "build_stats.json", stats.dump(2) + "\n");
  write_file_atomic(out_dir / "run_config.json", run_config_to_json(cfg));
  return out;
}

std::vector<EvalReport> cmd_eval(const fs::path& manifest_path, const fs::path& detections_path,
                                 std::optional<SliceKey> slice_key, const fs::path& out_dir,
                                 const EvalOptions& options) {
  DatasetManifest manifest = read_manifest(manifest_path);
  std::vector<Detection> dets = read_detections(detections_path);
  std::vector<EvalReport> reports = sliced_report(dets, manifest, slice_key, options);
  write_file_atomic(out_dir / "report.json", report_to_json(reports));
  write_file_atomic(out_dir / "report.txt", report_to_table(reports));
  return reports;
}

PrepareResult cmd_prepare(const fs::path& pdf_path, const fs::path& detections_path,
                          const std::optional<fs::path>& manifest_path, const PrepareConfig& cfg,
                          const fs::path& out_path) {
  std::string bytes = read_file(pdf_path);
  const std::string id = compute_doc_id(bytes);
  std::vector<Detection> dets = read_detections(detections_path);
  std::vector<ManifestRow> rows;
  if (manifest_path) {
    for (auto& r : read_manifest(*manifest_path)) {
      if (r.doc_id == id) rows.push_back(std::move(r));
    }
  }
  PrepareResult res = prepare_form(std::move(bytes), dets, rows, cfg);
  write_file_atomic(out_path, res.bytes);
  return res;
}

MiningStats cmd_stats(const fs::path& records_path) {
  MiningStats s;
  for (const auto& r : read_records(records_path)) s.add(r);
  return s;
}

}  // namespace formdet
