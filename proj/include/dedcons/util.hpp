#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dedcons {

/// Serialize one JSON value per line (compact, stable key order) and write
/// the whole file atomically-ish (temp + rename).
void write_jsonl(const std::string& path,
                 const std::vector<nlohmann::json>& lines);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

/// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

/// Short stable identifier derived from a JSON config (first 12 hex chars of
/// the SHA-256 of its compact serialization).
std::string config_hash(const nlohmann::json& config);

/// Write `<path>.manifest.json` describing a data artifact: the tool
/// parameters, the artifact's content hash, and a wall-clock timestamp.
/// The artifact itself stays timestamp-free so reruns are byte-comparable.
void write_manifest(const std::string& artifact_path,
                    const nlohmann::json& params);

std::string env_or(const std::string& name, const std::string& fallback);

}  // namespace dedcons
