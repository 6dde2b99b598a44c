#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "formdet/errors.hpp"
#include "formdet/pipeline.hpp"
#include "formdet/records_io.hpp"
#include "json.hpp"
#include "pdf_fixtures.hpp"

using namespace formdet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("formdet_pl_" + std::to_string(std::random_device{}()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& bytes) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << bytes;
}

fs::path write_corpus(const fs::path& dir) {
  for (const auto& [name, bytes] : fixtures::pipeline_corpus()) write(dir / name, bytes);
  return dir;
}

RunConfig config_for(const fs::path& in, const fs::path& out) {
  RunConfig cfg;
  cfg.inputs = {in.string()};
  cfg.output_dir = out.string();
  cfg.val_pages = 1;
  cfg.test_pages = 1;
  cfg.split_seed = 3;
  return cfg;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(FORMDET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Mine, FixtureCorpusStageCounts) {
  TempDir tmp;
  auto cfg = config_for(write_corpus(tmp.path / "in"), tmp.path / "out");
  MineOutput out = cmd_mine(cfg);
  EXPECT_EQ(out.stats.documents, 6u);
  EXPECT_EQ(out.stats.no_form_objects, 2u);
  EXPECT_EQ(out.stats.button_only, 1u);
  EXPECT_EQ(out.stats.xfa_dynamic_only, 1u);
  EXPECT_EQ(out.stats.accepted, 2u);
  EXPECT_EQ(out.stats.no_fields + out.stats.all_fields_cleaned + out.stats.parse_error, 0u);
  EXPECT_EQ(out.records.size(), 6u);
  EXPECT_TRUE(std::is_sorted(out.records.begin(), out.records.end(),
                             [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; }));
  EXPECT_TRUE(fs::exists(tmp.path / "out" / "records.jsonl"));
  EXPECT_TRUE(fs::exists(tmp.path / "out" / "stats.json"));
  EXPECT_EQ(load_run_config(tmp.path / "out" / "run_config.json"), cfg);

  auto j = nlohmann::json::parse(read_file(tmp.path / "out" / "stats.json"));
  EXPECT_EQ(j["accepted"], 2);
  EXPECT_EQ(j["rejections"]["NoFormObjects"], 2);
  EXPECT_EQ(stats_from_json(read_file(tmp.path / "out" / "stats.json")), out.stats);
  EXPECT_EQ(cmd_stats(tmp.path / "out" / "records.jsonl"), out.stats);
  EXPECT_EQ(read_records(tmp.path / "out" / "records.jsonl"), out.records);
}

TEST(Mine, EmptyDirectory) {
  TempDir tmp;
  fs::create_directories(tmp.path / "in");
  MineOutput out = cmd_mine(config_for(tmp.path / "in", tmp.path / "out"));
  EXPECT_TRUE(out.records.empty());
  EXPECT_EQ(out.stats, MiningStats{});
  EXPECT_EQ(read_file(tmp.path / "out" / "records.jsonl"), "");
}

TEST(Mine, DuplicatesAndUnreadable) {
  TempDir tmp;
  write_corpus(tmp.path / "in");
  write(tmp.path / "in" / "copy.pdf", fixtures::text_and_checkbox_pdf());
  write(tmp.path / "in" / "junk.pdf", "not a pdf");
  MineOutput out = cmd_mine(config_for(tmp.path / "in", tmp.path / "out"));
  EXPECT_EQ(out.duplicates, 1u);
  EXPECT_EQ(out.stats.documents, 7u);
  EXPECT_EQ(out.stats.parse_error, 1u);
}

TEST(Mine, ResumeIsIdentical) {
  TempDir tmp;
  auto cfg = config_for(write_corpus(tmp.path / "in"), tmp.path / "out");
  cfg.resume = true;
  cfg.workers = 3;
  MineOutput first = cmd_mine(cfg);
  std::string records = read_file(tmp.path / "out" / "records.jsonl");
  std::string stats = read_file(tmp.path / "out" / "stats.json");
  MineOutput second = cmd_mine(cfg);
  EXPECT_EQ(first.resumed, 0u);
  EXPECT_EQ(second.resumed, 6u);
  EXPECT_EQ(read_file(tmp.path / "out" / "records.jsonl"), records);
  EXPECT_EQ(read_file(tmp.path / "out" / "stats.json"), stats);

  // A different cleaning config must not reuse the markers.
  cfg.cleaning.min_field_size_pt = 5;
  EXPECT_EQ(cmd_mine(cfg).resumed, 0u);
}

TEST(Mine, WorkerCountDoesNotChangeOutput) {
  TempDir tmp;
  auto cfg = config_for(write_corpus(tmp.path / "in"), tmp.path / "a");
  cmd_mine(cfg);
  cfg.output_dir = (tmp.path / "b").string();
  cfg.workers = 4;
  cmd_mine(cfg);
  EXPECT_EQ(read_file(tmp.path / "a" / "records.jsonl"), read_file(tmp.path / "b" / "records.jsonl"));
}

TEST(Inputs, ListsAndDirectories) {
  TempDir tmp;
  write_corpus(tmp.path / "in");
  write(tmp.path / "other" / "x.PDF.txt", "nope");
  write(tmp.path / "list.txt",
        "# comment\n" + (tmp.path / "in" / "flat_a.pdf").string() + "\n\nfile://" +
            (tmp.path / "in" / "good_a.pdf").string() + "\n");
  RunConfig cfg;
  cfg.input_lists = {(tmp.path / "list.txt").string()};
  cfg.inputs = {(tmp.path / "in" / "flat_a.pdf").string(), (tmp.path / "other").string()};
  auto paths = collect_inputs(cfg);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].filename(), "flat_a.pdf");
  EXPECT_EQ(paths[1].filename(), "good_a.pdf");
}

TEST(Config, RoundTripAndValidation) {
  RunConfig cfg;
  cfg.inputs = {"a", "b"};
  cfg.output_dir = "out";
  cfg.cleaning.enabled = false;
  cfg.cleaning.choice_policy = ChoicePolicy::kDrop;
  cfg.render.target_long_side_px = 640;
  cfg.split_seed = 99;
  cfg.workers = 8;
  cfg.resume = true;
  EXPECT_EQ(run_config_from_json(run_config_to_json(cfg)), cfg);
  EXPECT_THROW(run_config_from_json("{\"bogus\": 1}"), ConfigError);
  EXPECT_THROW(run_config_from_json("[1]"), ConfigError);
  RunConfig bad;
  bad.render.target_long_side_px = 10;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_NE(mining_config_hash({}), mining_config_hash(cfg.cleaning));
  EXPECT_EQ(mining_config_hash({}), mining_config_hash({}));
}

TEST(Build, DeterministicAcrossRuns) {
  TempDir tmp;
  auto cfg = config_for(write_corpus(tmp.path / "in"), tmp.path / "mined");
  cmd_mine(cfg);
  BlankRenderer renderer;
  std::string manifests[2];
  std::vector<std::string> labels[2];
  for (int run = 0; run < 2; ++run) {
    RunConfig b = cfg;
    b.output_dir = (tmp.path / ("ds" + std::to_string(run))).string();
    b.workers = run == 0 ? 1 : 3;
    BuildOutput out = cmd_build(tmp.path / "mined" / "records.jsonl", b, renderer);
    manifests[run] = read_file(fs::path(b.output_dir) / "manifest.jsonl");
    for (const auto& row : out.emit.manifest) {
      labels[run].push_back(read_file(fs::path(b.output_dir) / label_rel_path(row.split, row.doc_id, row.page_index)));
    }
    EXPECT_EQ(out.emit.manifest.size(), 3u);
    EXPECT_TRUE(fs::exists(fs::path(b.output_dir) / "data.yaml"));
    EXPECT_TRUE(fs::exists(fs::path(b.output_dir) / "splits.json"));
  }
  EXPECT_EQ(manifests[0], manifests[1]);
  EXPECT_EQ(labels[0], labels[1]);

  // Split integrity on the manifest itself.
  std::map<std::string, std::set<Split>> splits;
  for (const auto& row : manifest_from_ndjson(manifests[0])) splits[row.doc_id].insert(row.split);
  for (const auto& [doc, s] : splits) EXPECT_EQ(s.size(), 1u) << doc;
}

TEST(Build, TagsAttached) {
  TempDir tmp;
  auto cfg = config_for(write_corpus(tmp.path / "in"), tmp.path / "mined");
  cfg.val_pages = 0;
  cfg.test_pages = 0;
  MineOutput mined = cmd_mine(cfg);
  std::string good;
  for (const auto& r : mined.records) {
    if (r.accepted() && r.page_count == 1) good = r.doc_id;
  }
  ASSERT_FALSE(good.empty());
  write(tmp.path / "tags.jsonl", "{\"doc_id\":\"" + good + "\",\"page_index\":0,\"language\":\"en\"}\n"
                                 "{\"doc_id\":\"nope\",\"page_index\":0,\"language\":\"de\"}\n");
  BlankRenderer renderer;
  RunConfig b = cfg;
  b.output_dir = (tmp.path / "ds").string();
  auto out = cmd_build(tmp.path / "mined" / "records.jsonl", b, renderer, tmp.path / "tags.jsonl");
  EXPECT_EQ(out.tag_warnings.size(), 1u);
  int tagged = 0;
  for (const auto& row : read_manifest(tmp.path / "ds" / "manifest.jsonl")) {
    EXPECT_EQ(row.split, Split::kTrain);
    tagged += row.language == std::optional<std::string>("en");
  }
  EXPECT_EQ(tagged, 1);
}

TEST(Eval, WritesReports) {
  TempDir tmp;
  DatasetManifest m;
  ManifestRow r;
  r.doc_id = "d";
  r.width_px = 100;
  r.height_px = 100;
  r.language = "en";
  r.labels = {NormalizedLabel{FieldClass::kTextInput, 0.5, 0.5, 0.2, 0.2}};
  m.push_back(r);
  write(tmp.path / "manifest.jsonl", manifest_to_ndjson(m));
  write(tmp.path / "dets.jsonl",
        R"({"doc_id":"d","page_index":0,"class":1,"box":[40,40,20,20],"score":0.9})" "\n");
  auto reports = cmd_eval(tmp.path / "manifest.jsonl", tmp.path / "dets.jsonl", SliceKey::kLanguage,
                          tmp.path / "report");
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(*reports[0].map50_95, 100.0);
  EXPECT_TRUE(fs::exists(tmp.path / "report" / "report.json"));
  EXPECT_TRUE(fs::exists(tmp.path / "report" / "report.txt"));

  write(tmp.path / "bad.jsonl", "{\"doc_id\":1}\n");
  EXPECT_THROW(cmd_eval(tmp.path / "manifest.jsonl", tmp.path / "bad.jsonl", std::nullopt, tmp.path / "r2"),
               MalformedDetections);
}

TEST(Cli, EndToEnd) {
  TempDir tmp;
  fs::path in = write_corpus(tmp.path / "in");
  fs::path out = tmp.path / "mined";
  ASSERT_EQ(run_cli("mine " + in.string() + " -o " + out.string() + " -j 2"), 0);
  MiningStats s = cmd_stats(out / "records.jsonl");
  EXPECT_EQ(s.accepted, 2u);
  EXPECT_EQ(run_cli("stats " + (out / "records.jsonl").string()), 0);

  fs::path ds = tmp.path / "ds";
  ASSERT_EQ(run_cli("build --records " + (out / "records.jsonl").string() + " -o " + ds.string() +
                    " --val-pages 1 --test-pages 1 --seed 4"),
            0);
  DatasetManifest m = read_manifest(ds / "manifest.jsonl");
  ASSERT_EQ(m.size(), 3u);

  // Perfect detections from the manifest.
  std::string dets;
  for (const auto& g : ground_truth_from_manifest(m)) {
    dets += detections_to_ndjson({{g.image, g.field_class, g.box, 1.0}});
  }
  write(tmp.path / "dets.jsonl", dets);
  ASSERT_EQ(run_cli("eval --manifest " + (ds / "manifest.jsonl").string() + " --detections " +
                    (tmp.path / "dets.jsonl").string() + " -o " + (tmp.path / "rep").string()),
            0);
  auto rep = nlohmann::json::parse(read_file(tmp.path / "rep" / "report.json"));
  EXPECT_DOUBLE_EQ(rep["reports"][0]["map50_95"].get<double>(), 100.0);

  // Prepare the flat corpus member from one detection.
  std::string flat = (in / "flat_a.pdf").string();
  std::string id = compute_doc_id(read_file(flat));
  write(tmp.path / "flat_dets.jsonl",
        "{\"doc_id\":\"" + id + "\",\"page_index\":0,\"class\":1,\"box\":[100,100,300,40],\"score\":0.9}\n");
  ASSERT_EQ(run_cli("prepare " + flat + " --detections " + (tmp.path / "flat_dets.jsonl").string() +
                    " -o " + (tmp.path / "prepared.pdf").string() + " --verify"),
            0);
  auto rec = mine_bytes(read_file(tmp.path / "prepared.pdf"), {});
  EXPECT_EQ(rec.annotation_count(), 1u);

  EXPECT_NE(run_cli("eval --manifest " + (ds / "manifest.jsonl").string() + " --detections " +
                    (tmp.path / "dets.jsonl").string() + " -o " + (tmp.path / "rep2").string() +
                    " --slice colour"),
            0);
  EXPECT_NE(run_cli("mine"), 0);
}

TEST(Cli, ConfigFileAndOverride) {
  TempDir tmp;
  fs::path in = write_corpus(tmp.path / "in");
  RunConfig cfg = config_for(in, tmp.path / "out");
  cfg.cleaning.min_field_size_pt = 6;
  write(tmp.path / "cfg.json", run_config_to_json(cfg));
  ASSERT_EQ(run_cli("mine --config " + (tmp.path / "cfg.json").string() + " -j 2"), 0);
  RunConfig used = load_run_config(tmp.path / "out" / "run_config.json");
  EXPECT_EQ(used.cleaning.min_field_size_pt, 6);
  EXPECT_EQ(used.workers, 2);
  write(tmp.path / "bad.json", "{\"unknown_key\": true}");
  EXPECT_NE(run_cli("mine --config " + (tmp.path / "bad.json").string() + " -o " + (tmp.path / "o2").string()), 0);
}
