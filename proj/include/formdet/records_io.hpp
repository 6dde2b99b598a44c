#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "formdet/field_miner.hpp"

namespace formdet {

// One compact JSON object, no trailing newline.
std::string record_to_json(const DocumentRecord& record);
// Throws ConfigError.
DocumentRecord record_from_json(std::string_view json);

std::string records_to_ndjson(const std::vector<DocumentRecord>& records);
std::vector<DocumentRecord> records_from_ndjson(std::string_view text);
std::vector<DocumentRecord> read_records(const std::filesystem::path& path);

// Pretty-printed, stage order mirroring the filtering pipeline.
std::string stats_to_json(const MiningStats& stats);
MiningStats stats_from_json(std::string_view json);

std::string cleaning_config_to_json(const CleaningConfig& cfg);

}  // namespace formdet
