#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "maserrx/io.hpp"
#include "maserrx/scenarios.hpp"

namespace maserrx {

struct ManifestEntry {
    std::string path;    // relative to the scenario directory
    std::size_t bytes = 0;
    std::string fnv1a64;
};

/// Writes a scenario into its own subdirectory of output_dir: one CSV per
/// table, summary.json, the effective config, and a manifest listing every
/// file with a content digest. Deterministic names and ordering; rejects
/// results with empty tables before touching the filesystem.
inline std::vector<ManifestEntry> emit_outputs(const ScenarioResult& result,
                                               const std::filesystem::path& output_dir) {
    if (result.name.empty()) throw DomainError("emit_outputs: result has no name");
    if (result.tables.empty()) throw DomainError("emit_outputs: result has no tables");
    for (const auto& [name, table] : result.tables)
        if (table.empty())
            throw DomainError("emit_outputs: table '" + name + "' is empty");

    const auto dir = output_dir / result.name;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::pair<std::string, std::string>> files;  // name, content
    for (const auto& [name, table] : result.tables)
        files.emplace_back(name + ".csv", table_to_csv(table));
    files.emplace_back("summary.json", result.summary.dump(2) + "\n");
    files.emplace_back("config.cfg", result.config_echo);
    std::sort(files.begin(), files.end());

    std::vector<ManifestEntry> manifest;
    for (const auto& [name, content] : files) {
        write_text_file(dir / name, content);
        manifest.push_back({name, content.size(), fnv1a64_hex(content)});
    }

    nlohmann::ordered_json mj;
    mj["scenario"] = result.name;
    mj["files"] = nlohmann::ordered_json::array();
    for (const auto& e : manifest)
        mj["files"].push_back(
            {{"path", e.path}, {"bytes", e.bytes}, {"fnv1a64", e.fnv1a64}});
    write_text_file(dir / "manifest.json", mj.dump(2) + "\n");
    return manifest;
}

}  // namespace maserrx
