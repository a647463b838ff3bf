#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "limelight/corpus.hpp"
#include "limelight/counting.hpp"
#include "limelight/errors.hpp"
#include "limelight/stats.hpp"

namespace limelight {

// Per-image visibility categories and the association-test battery over
// them. An image is C0 when the candidate does not appear, C1 when the
// candidate appears alone, C+ when the candidate appears among others.

enum class visibility_category { c0 = 0, c1 = 1, c_plus = 2 };

inline std::string to_string(visibility_category c) {
    switch (c) {
        case visibility_category::c0: return "C0";
        case visibility_category::c1: return "C1";
        case visibility_category::c_plus: return "C+";
    }
    return "";
}

inline visibility_category parse_visibility_category(const std::string& s) {
    if (s == "C0") return visibility_category::c0;
    if (s == "C1") return visibility_category::c1;
    if (s == "C+") return visibility_category::c_plus;
    throw input_error("\"" + s + "\" is not one of C0, C1, C+");
}

struct categorization {
    visibility_category category = visibility_category::c0;
    // Candidate reported present but zero persons counted: the face shows
    // up on merchandise or a screen, not as an actual person. Binned as C0
    // with the flag set so analysts can exclude or re-bin such images.
    bool inconsistent_signals = false;
};

inline categorization categorize(bool present, count_bucket count) {
    if (!present) return {visibility_category::c0, false};
    switch (count) {
        case count_bucket::zero: return {visibility_category::c0, true};
        case count_bucket::one: return {visibility_category::c1, false};
        case count_bucket::two:
        case count_bucket::three_plus: return {visibility_category::c_plus, false};
    }
    throw input_error("categorize: invalid count bucket");
}

// One categorized image with the grouping fields the analyses cut by and
// the provenance of both signals (e.g. "human" vs "model:gpt-4o").
struct visibility_row {
    std::string image_id;
    std::string party;
    account_kind account_type = account_kind::party;
    item_kind item_type = item_kind::story;
    visibility_category category = visibility_category::c0;
    bool inconsistent_signals = false;
    std::string presence_source;
    std::string count_source;
};

// --- cross-tabulation ------------------------------------------------------

inline double round_to_tenth(double x) { return std::round(x * 10.0) / 10.0; }

struct crosstab_group {
    std::string key; // "party=SPD|account_type=candidate"
    std::array<std::int64_t, 3> counts{};     // C0, C1, C+
    std::array<double, 3> percentages{};      // per group, rounded to one decimal
    std::int64_t total = 0;
};

struct crosstab_result {
    std::vector<std::string> by;
    std::vector<crosstab_group> groups; // sorted by key
};

inline std::string grouping_value(const visibility_row& row, const std::string& field) {
    if (field == "party") return row.party;
    if (field == "account_type") return to_string(row.account_type);
    if (field == "item_type") return to_string(row.item_type);
    throw input_error("crosstab: unknown grouping field \"" + field + "\"");
}

inline crosstab_result crosstab(std::span<const visibility_row> rows,
                                const std::vector<std::string>& by) {
    if (by.empty()) throw input_error("crosstab: empty group set");
    std::map<std::string, std::array<std::int64_t, 3>> tally;
    for (const auto& row : rows) {
        std::string key;
        for (const auto& field : by) {
            if (!key.empty()) key += "|";
            key += field + "=" + grouping_value(row, field);
        }
        tally[key][static_cast<std::size_t>(row.category)] += 1;
    }
    crosstab_result out;
    out.by = by;
    for (const auto& [key, counts] : tally) {
        crosstab_group g;
        g.key = key;
        g.counts = counts;
        g.total = counts[0] + counts[1] + counts[2];
        for (std::size_t c = 0; c < 3; ++c)
            g.percentages[c] = round_to_tenth(100.0 * static_cast<double>(counts[c]) /
                                              static_cast<double>(g.total));
        out.groups.push_back(std::move(g));
    }
    return out;
}

// --- test battery ----------------------------------------------------------

// The battery compares category distributions between two groups of rows:
// party vs candidate accounts within an item type (overall and per party),
// and stories vs posts (overall and per party). Per-party families get
// Bonferroni-adjusted p-values with m = tests actually executed in the
// family. Comparisons that lack data on one side are reported as skipped,
// never thrown.

struct battery_entry {
    std::string test_id;
    std::string family; // empty for standalone tests
    std::string status; // "ok" | "skipped"
    std::string skip_reason;
    std::optional<stat_test_result> result;
};

namespace detail {

// Builds the 2 x categories table for one split. Category columns that are
// zero in both groups are dropped (the category was never observed in this
// slice); if either group is empty or fewer than two category columns
// remain, the comparison is unanswerable and the entry is skipped.
inline battery_entry compare_groups(const std::string& test_id, const std::string& family,
                                    std::span<const visibility_row> rows,
                                    const std::function<bool(const visibility_row&)>& in_scope,
                                    const std::function<bool(const visibility_row&)>& first_group,
                                    const std::string& first_label,
                                    const std::string& second_label) {
    std::array<std::array<std::int64_t, 3>, 2> counts{};
    for (const auto& row : rows) {
        if (!in_scope(row)) continue;
        counts[first_group(row) ? 0 : 1][static_cast<std::size_t>(row.category)] += 1;
    }
    battery_entry entry;
    entry.test_id = test_id;
    entry.family = family;

    const std::int64_t n0 = counts[0][0] + counts[0][1] + counts[0][2];
    const std::int64_t n1 = counts[1][0] + counts[1][1] + counts[1][2];
    std::vector<std::string> kept_labels;
    contingency_table table(2);
    for (std::size_t c = 0; c < 3; ++c) {
        if (counts[0][c] + counts[1][c] == 0) continue;
        kept_labels.push_back(to_string(static_cast<visibility_category>(c)));
        table[0].push_back(counts[0][c]);
        table[1].push_back(counts[1][c]);
    }
    if (n0 == 0 || n1 == 0 || kept_labels.size() < 2) {
        entry.status = "skipped";
        entry.skip_reason = "insufficient data";
        return entry;
    }
    entry.status = "ok";
    entry.result = run_test(test_id, {first_label, second_label}, kept_labels, std::move(table));
    return entry;
}

inline void adjust_family(std::vector<battery_entry>& entries, const std::string& family) {
    int executed = 0;
    for (const auto& e : entries)
        if (e.family == family && e.status == "ok") ++executed;
    if (executed == 0) return;
    for (auto& e : entries)
        if (e.family == family && e.status == "ok")
            e.result->p_adjusted = bonferroni(e.result->p_value, executed);
}

} // namespace detail

inline std::vector<battery_entry> run_battery(std::span<const visibility_row> rows) {
    std::set<std::string> party_set;
    for (const auto& row : rows) party_set.insert(row.party);
    const std::vector<std::string> parties(party_set.begin(), party_set.end());

    std::vector<battery_entry> out;
    const auto is_party_account = [](const visibility_row& r) {
        return r.account_type == account_kind::party;
    };

    for (item_kind type : {item_kind::story, item_kind::post}) {
        const std::string type_name = to_string(type);
        const auto of_type = [type](const visibility_row& r) { return r.item_type == type; };

        out.push_back(detail::compare_groups(
            type_name + ":party-vs-candidate", "", rows, of_type, is_party_account,
            "party", "candidate"));

        const std::string family = type_name + ":party-vs-candidate:per-party";
        for (const auto& party : parties) {
            out.push_back(detail::compare_groups(
                type_name + ":party-vs-candidate:party=" + party, family, rows,
                [&, type](const visibility_row& r) {
                    return r.item_type == type && r.party == party;
                },
                is_party_account, "party", "candidate"));
        }
        detail::adjust_family(out, family);
    }

    const auto is_story = [](const visibility_row& r) {
        return r.item_type == item_kind::story;
    };
    out.push_back(detail::compare_groups(
        "stories-vs-posts", "", rows, [](const visibility_row&) { return true; },
        is_story, "story", "post"));
    const std::string family = "stories-vs-posts:per-party";
    for (const auto& party : parties) {
        out.push_back(detail::compare_groups(
            "stories-vs-posts:party=" + party, family, rows,
            [&](const visibility_row& r) { return r.party == party; }, is_story,
            "story", "post"));
    }
    detail::adjust_family(out, family);
    return out;
}

} // namespace limelight
