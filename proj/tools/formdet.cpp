#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "formdet/errors.hpp"
#include "formdet/pipeline.hpp"
#include "formdet/records_io.hpp"
#include "formdet/render.hpp"

namespace {

using namespace formdet;

void log_line(const std::string& s) { std::cerr << s << "\n"; }

struct RunFlags {
  std::string config_path;
  std::vector<std::string> inputs;
  std::vector<std::string> input_lists;
  std::string out;
  double min_field_size = 0;
  double dedup_iou = 0;
  double min_onpage = 0;
  bool keep_hidden = false;
  bool no_clean = false;
  bool drop_choice = false;
  int target_px = 0;
  std::uint64_t seed = 0;
  std::uint64_t val_pages = 0;
  std::uint64_t test_pages = 0;
  bool include_empty = false;
  int workers = 0;
  bool resume = false;
};

struct RunOptions {
  CLI::Option* config = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* min_field_size = nullptr;
  CLI::Option* dedup_iou = nullptr;
  CLI::Option* min_onpage = nullptr;
  CLI::Option* keep_hidden = nullptr;
  CLI::Option* no_clean = nullptr;
  CLI::Option* drop_choice = nullptr;
  CLI::Option* target_px = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* val_pages = nullptr;
  CLI::Option* test_pages = nullptr;
  CLI::Option* include_empty = nullptr;
  CLI::Option* workers = nullptr;
  CLI::Option* resume = nullptr;
  CLI::Option* inputs = nullptr;
  CLI::Option* input_lists = nullptr;
};

void add_common(CLI::App* app, RunFlags& f, RunOptions& o) {
  o.config = app->add_option("--config", f.config_path, "Run config JSON (flags override it)")
                 ->check(CLI::ExistingFile);
  o.out = app->add_option("-o,--out", f.out, "Output directory");
  o.workers = app->add_option("-j,--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
}

void add_cleaning(CLI::App* app, RunFlags& f, RunOptions& o) {
  o.inputs = app->add_option("inputs", f.inputs, "PDF files or directories");
  o.input_lists = app->add_option("--input-list", f.input_lists, "File listing PDF paths, one per line");
  o.min_field_size = app->add_option("--min-field-size", f.min_field_size, "Minimum field dimension (pt)");
  o.dedup_iou = app->add_option("--dedup-iou", f.dedup_iou, "Same-class near-duplicate IoU");
  o.min_onpage = app->add_option("--min-onpage", f.min_onpage, "Minimum on-page area fraction");
  o.keep_hidden = app->add_flag("--keep-hidden", f.keep_hidden, "Keep Hidden/NoView widgets");
  o.no_clean = app->add_flag("--no-clean", f.no_clean, "Disable field cleaning (unfiltered data)");
  o.drop_choice = app->add_flag("--drop-choice", f.drop_choice, "Drop /Ch widgets instead of mapping to text");
  o.resume = app->add_flag("--resume", f.resume, "Reuse per-document completion markers");
}

void add_build(CLI::App* app, RunFlags& f, RunOptions& o) {
  o.target_px = app->add_option("--target-px", f.target_px, "Rendered long side in pixels");
  o.seed = app->add_option("--seed", f.seed, "Split seed");
  o.val_pages = app->add_option("--val-pages", f.val_pages, "Validation page target");
  o.test_pages = app->add_option("--test-pages", f.test_pages, "Test page target");
  o.include_empty = app->add_flag("--include-empty", f.include_empty, "Emit pages without fields");
}

bool given(CLI::Option* o) { return o != nullptr && o->count() > 0; }

RunConfig resolve_config(const RunFlags& f, const RunOptions& o) {
  RunConfig cfg;
  if (given(o.config)) cfg = load_run_config(f.config_path);
  if (given(o.inputs)) cfg.inputs = f.inputs;
  if (given(o.input_lists)) cfg.input_lists = f.input_lists;
  if (given(o.out)) cfg.output_dir = f.out;
  if (given(o.min_field_size)) cfg.cleaning.min_field_size_pt = f.min_field_size;
  if (given(o.dedup_iou)) cfg.cleaning.dedup_iou_threshold = f.dedup_iou;
  if (given(o.min_onpage)) cfg.cleaning.min_onpage_fraction = f.min_onpage;
  if (given(o.keep_hidden)) cfg.cleaning.drop_hidden = false;
  if (given(o.no_clean)) cfg.cleaning.enabled = false;
  if (given(o.drop_choice)) cfg.cleaning.choice_policy = ChoicePolicy::kDrop;
  if (given(o.target_px)) cfg.render.target_long_side_px = f.target_px;
  if (given(o.seed)) cfg.split_seed = f.seed;
  if (given(o.val_pages)) cfg.val_pages = f.val_pages;
  if (given(o.test_pages)) cfg.test_pages = f.test_pages;
  if (given(o.include_empty)) cfg.include_empty_pages = true;
  if (given(o.workers)) cfg.workers = f.workers;
  if (given(o.resume)) cfg.resume = true;
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("an output directory is required (-o)");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Form field dataset and evaluation toolkit"};
  app.require_subcommand(1);

  RunFlags mine_flags;
  RunOptions mine_opts;
  auto* mine = app.add_subcommand("mine", "Mine and clean form-field annotations from PDFs");
  add_common(mine, mine_flags, mine_opts);
  add_cleaning(mine, mine_flags, mine_opts);

  RunFlags build_flags;
  RunOptions build_opts;
  std::string build_records, build_tags, build_renderer;
  auto* build = app.add_subcommand("build", "Render pages and write the detection dataset");
  add_common(build, build_flags, build_opts);
  add_build(build, build_flags, build_opts);
  build->add_option("--records", build_records, "records.jsonl from mine")
      ->required()
      ->check(CLI::ExistingFile);
  build->add_option("--tags", build_tags, "NDJSON tag file {doc_id, page_index, language, domain}")
      ->check(CLI::ExistingFile);
  build->add_option("--renderer", build_renderer,
                    std::string("Renderer executable (default: $") + kRendererEnvVar + ")");

  std::string eval_manifest, eval_dets, eval_slice, eval_out;
  bool eval_include_empty = false;
  auto* eval = app.add_subcommand("eval", "Compute mAP50-95, optionally sliced by tag");
  eval->add_option("--manifest", eval_manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  eval->add_option("--detections", eval_dets, "Detections NDJSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--slice", eval_slice, "language or domain");
  eval->add_option("-o,--out", eval_out, "Report directory")->required();
  eval->add_flag("--include-empty", eval_include_empty, "Evaluate pages without ground truth");

  std::string prep_pdf, prep_dets, prep_manifest, prep_out, prep_overlap = "KeepHigherScore",
                                                            prep_existing = "Refuse";
  double prep_threshold = 0.5;
  int prep_target = 1216;
  bool prep_verify = false;
  auto* prepare = app.add_subcommand("prepare", "Insert fillable fields into a flat PDF");
  prepare->add_option("pdf", prep_pdf, "Flat PDF")->required()->check(CLI::ExistingFile);
  prepare->add_option("--detections", prep_dets, "Detections NDJSON")->required()->check(CLI::ExistingFile);
  prepare->add_option("--manifest", prep_manifest, "manifest.jsonl with this document's rows")
      ->check(CLI::ExistingFile);
  prepare->add_option("-o,--out", prep_out, "Output PDF")->required();
  prepare->add_option("--threshold", prep_threshold, "Score threshold")->check(CLI::Range(0.0, 1.0));
  prepare->add_option("--overlap", prep_overlap, "KeepHigherScore or KeepAll")
      ->check(CLI::IsMember({"KeepHigherScore", "KeepAll"}));
  prepare->add_option("--existing", prep_existing, "Refuse or Append")
      ->check(CLI::IsMember({"Refuse", "Append"}));
  prepare->add_option("--target-px", prep_target, "Long side used when no manifest row exists");
  prepare->add_flag("--verify", prep_verify, "Mine the output and check every field comes back");

  std::string stats_records;
  auto* stats = app.add_subcommand("stats", "Print stage counts for a records file");
  stats->add_option("records", stats_records, "records.jsonl")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mine) {
      RunConfig cfg = resolve_config(mine_flags, mine_opts);
      MineOutput out = cmd_mine(cfg, log_line);
      std::cout << stats_to_json(out.stats);
      if (out.resumed > 0) log_line("resumed " + std::to_string(out.resumed) + " documents");
      if (out.duplicates > 0) log_line("skipped " + std::to_string(out.duplicates) + " duplicates");
      return out.io_errors > 0 ? 1 : 0;
    }
    if (*build) {
      RunConfig cfg = resolve_config(build_flags, build_opts);
      std::unique_ptr<PageRenderer> renderer =
          build_renderer.empty() ? renderer_from_environment()
                                 : std::make_unique<ExternalRenderer>(build_renderer);
      std::optional<std::filesystem::path> tags;
      if (!build_tags.empty()) tags = build_tags;
      BuildOutput out = cmd_build(build_records, cfg, *renderer, tags, log_line);
      std::cout << "pages: " << out.emit.manifest.size()
                << "  render_failures: " << out.emit.render_failures
                << "  degenerate_boxes: " << out.emit.degenerate_boxes << "\n";
      return 0;
    }
    if (*eval) {
      std::optional<SliceKey> key;
      if (!eval_slice.empty()) key = slice_key_from_string(eval_slice);
      EvalOptions opts;
      opts.include_empty_pages = eval_include_empty;
      auto reports = cmd_eval(eval_manifest, eval_dets, key, eval_out, opts);
      std::cout << report_to_table(reports);
      return 0;
    }
    if (*prepare) {
      PrepareConfig cfg;
      cfg.score_threshold = prep_threshold;
      cfg.overlap_policy = *overlap_policy_from_string(prep_overlap);
      cfg.existing_form_policy = *existing_form_policy_from_string(prep_existing);
      cfg.render.target_long_side_px = prep_target;
      std::optional<std::filesystem::path> manifest;
      if (!prep_manifest.empty()) manifest = prep_manifest;
      PrepareResult res = cmd_prepare(prep_pdf, prep_dets, manifest, cfg, prep_out);
      std::cout << "fields: " << res.fields.size() << "  below_threshold: " << res.below_threshold
                << "  overlap_dropped: " << res.overlap_dropped << "\n";
      if (prep_verify) {
        RoundtripReport rep = verify_roundtrip(res.bytes, res.fields);
        std::cout << "verify: " << (rep.passed ? "pass" : "FAIL") << "  recovered "
                  << rep.recovered << "/" << rep.expected << "  missing " << rep.missing.size()
                  << "  class_mismatch " << rep.class_mismatches.size() << "\n";
        return rep.passed ? 0 : 1;
      }
      return 0;
    }
    if (*stats) {
      std::cout << stats_to_json(cmd_stats(stats_records));
      return 0;
    }
  } catch (const formdet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
