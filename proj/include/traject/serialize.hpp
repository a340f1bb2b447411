#pragma once

// JSON forms of the on-disk artifacts: dataset manifest, EMOS parameters,
// RAFT plans, verification reports.

#include <filesystem>
#include <span>

#include "json.hpp"
#include "traject/emos.hpp"
#include "traject/ingest.hpp"
#include "traject/raft.hpp"
#include "traject/verify.hpp"

namespace traject {

/// Insertion-ordered so files keep a stable, readable field order.
using Json = nlohmann::ordered_json;

/// Pretty-printed with a trailing newline; creates parent directories.
void write_json_file(const std::filesystem::path& path, const Json& value);
/// Throws DataError when the file is missing or not valid JSON.
Json read_json_file(const std::filesystem::path& path);

Json to_json(const ingest::SyntheticConfig& config);
ingest::SyntheticConfig synthetic_config_from_json(const Json& j);

Json to_json(const ingest::DatasetManifest& manifest);
ingest::DatasetManifest manifest_from_json(const Json& j);

Json to_json(const emos::EmosParams& params);
emos::EmosParams emos_params_from_json(const Json& j);

/// A JSON array with one parameter record per line, streamed so that large
/// models never sit in memory as a document.
void write_emos_model(const std::filesystem::path& path, const emos::EmosModel& model);
/// Reads files written by write_emos_model. Throws MissingArtifactError if absent.
emos::EmosModel read_emos_model(const std::filesystem::path& path);

Json to_json(const raft::RaftLink& link);
raft::RaftLink raft_link_from_json(const Json& j);
Json to_json(const raft::AdjustmentPlan& plan);
raft::AdjustmentPlan adjustment_plan_from_json(const Json& j);
Json to_json(const raft::RaftModel& model);
raft::RaftModel raft_model_from_json(const Json& j);

Json to_json(std::span<const verify::VerificationReport> reports);

}  // namespace traject
