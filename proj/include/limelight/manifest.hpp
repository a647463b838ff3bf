#pragma once

#include <ctime>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "limelight/hashing.hpp"
#include "limelight/jsonl.hpp"
#include "limelight/version.hpp"

namespace limelight {

// Every run writes a manifest naming its inputs (with content hashes), its
// effective configuration, its outputs, and the tool version. The run id
// is a hash of subcommand + configuration + input hashes, so identical
// runs share an id and their outputs are byte-identical; wall-clock
// timestamps live only inside the manifest file itself.

inline std::string iso_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class run_writer {
public:
    run_writer(std::string out_dir, std::string subcommand, json config)
        : out_dir_(std::move(out_dir)),
          subcommand_(std::move(subcommand)),
          config_(std::move(config)),
          started_at_(iso_utc_now()) {
        std::filesystem::create_directories(out_dir_);
    }

    void add_input(const std::string& path) {
        inputs_.emplace_back(path, hash_file(path));
    }

    // Inputs and config are fixed by the time the first output is written;
    // the id is derived lazily from exactly that material.
    const std::string& run_id() {
        if (run_id_.empty()) {
            std::string material = subcommand_ + "\x1f" + config_.dump();
            for (const auto& [path, hash] : inputs_) material += "\x1f" + hash;
            run_id_ = fnv1a64_hex(material);
        }
        return run_id_;
    }

    std::string manifest_name() { return "manifest-" + run_id() + ".json"; }

    std::filesystem::path path_of(const std::string& name) const {
        return std::filesystem::path(out_dir_) / name;
    }

    void write_json(const std::string& name, json content) {
        content["manifest"] = manifest_name();
        write_file_atomic(path_of(name).string(), content.dump(2) + "\n");
        outputs_.push_back(name);
    }

    void write_jsonl(const std::string& name, const std::vector<json>& records) {
        std::string content =
            jsonl_line(json{{"kind", "manifest"}, {"manifest", manifest_name()}}) + "\n";
        for (const auto& r : records) content += jsonl_line(r) + "\n";
        write_file_atomic(path_of(name).string(), content);
        outputs_.push_back(name);
    }

    void write_csv(const std::string& name, const std::string& content) {
        write_file_atomic(path_of(name).string(),
                          "# manifest: " + manifest_name() + "\n" + content);
        outputs_.push_back(name);
    }

    // Error path: deletes everything written so far, so a failed run
    // leaves no partial outputs behind (its manifest is never written).
    void discard() {
        std::error_code ec;
        for (const auto& name : outputs_) std::filesystem::remove(path_of(name), ec);
        outputs_.clear();
    }

    // Writes the manifest itself; call once, after the last output.
    void finish() {
        // File names are recorded without their directories: the run id is
        // content-addressed, and the manifest must not change when the same
        // data is read from another location.
        json inputs = json::array();
        for (const auto& [path, hash] : inputs_)
            inputs.push_back({{"file", std::filesystem::path(path).filename().string()},
                              {"fnv1a64", hash}});
        // The output directory is deliberately absent: the manifest lives in
        // it, and identical runs into two directories must write identical
        // trees except for the timestamps below.
        json m{{"tool_version", version_string},
               {"subcommand", subcommand_},
               {"config", config_},
               {"inputs", inputs},
               {"outputs", outputs_},
               {"run_id", run_id()},
               {"started_at", started_at_},
               {"finished_at", iso_utc_now()}};
        write_file_atomic(path_of(manifest_name()).string(), m.dump(2) + "\n");
    }

private:
    std::string out_dir_;
    std::string subcommand_;
    json config_;
    std::string started_at_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::string> outputs_;
    std::string run_id_;
};

} // namespace limelight
