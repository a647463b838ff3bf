#pragma once

#include <string>
#include <vector>

#include "limelight/agreement.hpp"
#include "limelight/calibrate.hpp"
#include "limelight/evalmetrics.hpp"
#include "limelight/jsonl.hpp"
#include "limelight/stats.hpp"
#include "limelight/visibility.hpp"

namespace limelight {

// JSON/CSV views of the result types, shared by the CLI emitters and the
// report consolidator. Pure formatting, no computation.

inline json to_json(const alpha_result& r) {
    return json{{"alpha", r.alpha},
                {"observed_disagreement", r.observed_disagreement},
                {"expected_disagreement", r.expected_disagreement},
                {"n_pairable", r.n_pairable},
                {"labels", r.labels}};
}

inline json to_json(const class_metrics& m) {
    return json{{"label", m.label},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"support", m.support},
                {"precision_defined", m.precision_defined},
                {"recall_defined", m.recall_defined}};
}

inline json to_json(const classification_report& r) {
    json per_class = json::array();
    for (const auto& m : r.per_class) per_class.push_back(to_json(m));
    return json{{"per_class", per_class},
                {"macro", {{"precision", r.macro_precision},
                           {"recall", r.macro_recall},
                           {"f1", r.macro_f1}}},
                {"weighted", {{"precision", r.weighted_precision},
                              {"recall", r.weighted_recall},
                              {"f1", r.weighted_f1}}},
                {"accuracy", r.accuracy},
                {"total", r.total}};
}

inline json to_json(const confusion_matrix& m) {
    return json{{"labels", m.labels}, {"counts", m.counts}};
}

// truth in rows, predictions in columns
inline std::string to_csv(const confusion_matrix& m) {
    std::string out = "truth\\predicted";
    for (const auto& l : m.labels) out += "," + l;
    out += "\n";
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        out += m.labels[i];
        for (std::size_t j = 0; j < m.labels.size(); ++j)
            out += "," + std::to_string(m.counts[i][j]);
        out += "\n";
    }
    return out;
}

inline json to_json(const stat_test_result& r) {
    json o{{"test_id", r.test_id},
           {"row_labels", r.row_labels},
           {"col_labels", r.col_labels},
           {"table", r.table},
           {"chi2", r.chi2},
           {"dof", r.dof},
           {"p", r.p_value},
           {"cramers_v", r.effect_size},
           {"n", r.n},
           {"warnings", r.warnings}};
    if (r.p_adjusted) o["p_adjusted"] = *r.p_adjusted;
    return o;
}

inline json to_json(const battery_entry& e) {
    json o{{"test_id", e.test_id}, {"status", e.status}};
    if (!e.family.empty()) o["family"] = e.family;
    if (!e.skip_reason.empty()) o["skip_reason"] = e.skip_reason;
    if (e.result) o["result"] = to_json(*e.result);
    return o;
}

inline json to_json(const crosstab_result& r) {
    json groups = json::array();
    for (const auto& g : r.groups)
        groups.push_back(json{{"key", g.key},
                              {"counts", {{"C0", g.counts[0]},
                                          {"C1", g.counts[1]},
                                          {"C+", g.counts[2]}}},
                              {"percentages", {{"C0", g.percentages[0]},
                                               {"C1", g.percentages[1]},
                                               {"C+", g.percentages[2]}}},
                              {"total", g.total}});
    return json{{"by", r.by}, {"groups", groups}};
}

inline json to_json(const calibration_result& r) {
    json sweep = json::array();
    for (const auto& p : r.sweep) sweep.push_back(json::array({p.threshold, p.macro_f1}));
    return json{{"threshold", r.threshold},
                {"macro_f1", r.macro_f1},
                {"sweep", sweep},
                {"warnings", r.warnings}};
}

inline json to_json(const gold_record& g) {
    return json{{"unit_id", g.unit_id}, {"label", g.label}, {"status", g.status}};
}

inline json to_json(const visibility_row& row) {
    return json{{"image_id", row.image_id},
                {"party", row.party},
                {"account_type", to_string(row.account_type)},
                {"item_type", to_string(row.item_type)},
                {"category", to_string(row.category)},
                {"inconsistent_signals", row.inconsistent_signals},
                {"presence_source", row.presence_source},
                {"count_source", row.count_source}};
}

inline std::string visibility_csv_header() {
    return "image_id,party,account_type,item_type,category,inconsistent_signals,"
           "presence_source,count_source\n";
}

inline std::string to_csv_row(const visibility_row& row) {
    std::string out;
    out += row.image_id;
    out += ",";
    out += row.party;
    out += ",";
    out += to_string(row.account_type);
    out += ",";
    out += to_string(row.item_type);
    out += ",";
    out += to_string(row.category);
    out += ",";
    out += row.inconsistent_signals ? "true" : "false";
    out += ",";
    out += row.presence_source;
    out += ",";
    out += row.count_source;
    out += "\n";
    return out;
}

inline visibility_row visibility_row_from_csv(const std::string& line,
                                              const std::string& ctx) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    if (fields.size() != 8)
        throw input_error(ctx + ": expected 8 comma-separated fields, got " +
                          std::to_string(fields.size()));
    visibility_row row;
    row.image_id = fields[0];
    row.party = fields[1];
    row.account_type = parse_account_kind(fields[2], ctx);
    row.item_type = parse_item_kind(fields[3], ctx);
    row.category = parse_visibility_category(fields[4]);
    if (fields[5] == "true") row.inconsistent_signals = true;
    else if (fields[5] == "false") row.inconsistent_signals = false;
    else throw input_error(ctx + ": inconsistent_signals must be true or false");
    row.presence_source = fields[6];
    row.count_source = fields[7];
    return row;
}

// Reads visibility.csv back, skipping the provenance comment and header.
inline std::vector<visibility_row> load_visibility_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    std::vector<visibility_row> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true; // column header
            continue;
        }
        rows.push_back(visibility_row_from_csv(line, where(path, lineno)));
    }
    return rows;
}

} // namespace limelight
