#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "formdet/dataset.hpp"
#include "formdet/eval.hpp"
#include "formdet/field_miner.hpp"
#include "formdet/form_preparer.hpp"
#include "formdet/transform.hpp"

namespace formdet {

struct RunConfig {
  // PDF files or directories (searched recursively for *.pdf).
  std::vector<std::string> inputs;
  // Text files listing one PDF path per line.
  std::vector<std::string> input_lists;
  std::string output_dir;
  CleaningConfig cleaning;
  RenderConfig render;
  std::uint64_t split_seed = 0;
  std::uint64_t val_pages = 8000;
  std::uint64_t test_pages = 25000;
  bool include_empty_pages = false;
  int workers = 1;
  bool resume = false;

  // Throws ConfigError.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

std::string run_config_to_json(const RunConfig& cfg);
// Unknown keys are rejected. Throws ConfigError.
RunConfig run_config_from_json(std::string_view json);
RunConfig load_run_config(const std::filesystem::path& path);

// Hash of the settings that determine mining output; names marker directories.
std::string mining_config_hash(const CleaningConfig& cfg);

using LogFn = std::function<void(const std::string&)>;

// Expands inputs and input lists into a sorted, de-duplicated path list.
std::vector<std::filesystem::path> collect_inputs(const RunConfig& cfg);

struct MineOutput {
  std::vector<DocumentRecord> records;  // sorted by doc_id
  MiningStats stats;
  std::size_t duplicates = 0;   // inputs with byte-identical content
  std::size_t resumed = 0;      // records taken from completion markers
  std::size_t io_errors = 0;
};

// Writes records.jsonl, stats.json and run_config.json into output_dir.
// Unreadable files count as parse errors; only output I/O throws.
MineOutput cmd_mine(const RunConfig& cfg, const LogFn& log = {});

struct BuildOutput {
  EmitResult emit;
  SplitAssignment split;
  std::vector<std::string> tag_warnings;
};

// Reads records, assigns splits over accepted documents, renders pages and
// writes images/, labels/, manifest.jsonl, splits.json, data.yaml and
// build_stats.json into cfg.output_dir.
BuildOutput cmd_build(const std::filesystem::path& records_path, const RunConfig& cfg,
                      PageRenderer& renderer,
                      const std::optional<std::filesystem::path>& tags_path = std::nullopt,
                      const LogFn& log = {});

// Writes report.json and report.txt into out_dir and returns the reports.
std::vector<EvalReport> cmd_eval(const std::filesystem::path& manifest_path,
                                 const std::filesystem::path& detections_path,
                                 std::optional<SliceKey> slice_key,
                                 const std::filesystem::path& out_dir,
                                 const EvalOptions& options = {});

// Writes the prepared PDF to out_path. The manifest is optional.
PrepareResult cmd_prepare(const std::filesystem::path& pdf_path,
                          const std::filesystem::path& detections_path,
                          const std::optional<std::filesystem::path>& manifest_path,
                          const PrepareConfig& cfg, const std::filesystem::path& out_path);

// Recomputes stage counts from a records file.
MiningStats cmd_stats(const std::filesystem::path& records_path);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace formdet
