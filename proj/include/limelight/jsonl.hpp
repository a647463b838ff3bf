#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "limelight/errors.hpp"

namespace limelight {

// All JSON handled through nlohmann with ordered output disabled: objects
// are serialized with keys sorted, which is what makes repeated runs
// byte-identical.
using json = nlohmann::json;

// Reads a .jsonl file, one JSON object per line. Blank lines are ignored.
// Lines whose object carries {"kind": "manifest"} are run-provenance
// headers written by this toolkit's own emitters and are skipped by every
// reader. The callback receives the parsed object and its 1-based line
// number (for error messages).
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw input_error(path + ":" + std::to_string(lineno) +
                              ": malformed JSON: " + e.what());
        }
        if (!obj.is_object())
            throw input_error(path + ":" + std::to_string(lineno) +
                              ": expected a JSON object");
        if (obj.contains("kind") && obj["kind"].is_string() &&
            obj["kind"].get<std::string>() == "manifest")
            continue;
        fn(obj, lineno);
    }
}

inline std::vector<json> read_jsonl(const std::string& path) {
    std::vector<json> out;
    for_each_jsonl(path, [&](json& obj, std::size_t) { out.push_back(std::move(obj)); });
    return out;
}

// Serializes one object per line with sorted keys and no padding.
inline std::string jsonl_line(const json& obj) {
    return obj.dump(-1, ' ', false, json::error_handler_t::strict);
}

// Writes a whole file atomically: content lands under a temporary name in
// the same directory and is renamed into place, so readers never observe a
// half-written file and failed runs leave no partial output behind.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw input_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw input_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

// Field access helpers shared by the record loaders. They produce errors
// that carry file:line context so a bad record is easy to find.

inline std::string where(const std::string& path, std::size_t lineno) {
    return path + ":" + std::to_string(lineno);
}

inline const json& require_field(const json& obj, const char* key,
                                 const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw input_error(ctx + ": missing required field \"" + key + "\"");
    return *it;
}

inline std::string require_string(const json& obj, const char* key,
                                  const std::string& ctx) {
    const json& v = require_field(obj, key, ctx);
    if (!v.is_string())
        throw input_error(ctx + ": field \"" + key + "\" must be a string");
    return v.get<std::string>();
}

inline double require_number(const json& obj, const char* key,
                             const std::string& ctx) {
    const json& v = require_field(obj, key, ctx);
    if (!v.is_number())
        throw input_error(ctx + ": field \"" + key + "\" must be a number");
    return v.get<double>();
}

inline std::vector<double> require_number_array(const json& obj, const char* key,
                                                const std::string& ctx) {
    const json& v = require_field(obj, key, ctx);
    if (!v.is_array())
        throw input_error(ctx + ": field \"" + key + "\" must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number())
            throw input_error(ctx + ": field \"" + key + "\" must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// Collects every field of `obj` not named in `known` so loaders can round
// trip records without losing producer-specific extras.
inline json collect_extras(const json& obj, std::initializer_list<const char*> known) {
    json extras = json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool is_known = false;
        for (const char* k : known)
            if (it.key() == k) { is_known = true; break; }
        if (!is_known) extras[it.key()] = it.value();
    }
    return extras;
}

} // namespace limelight
