#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "limelight/errors.hpp"
#include "limelight/special.hpp"

namespace limelight {

// Pearson chi-square test of independence on an r x c contingency table of
// observed counts, plus the effect-size and multiple-comparison helpers the
// association analyses need.

struct chi_squared_result {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 1.0;
    std::int64_t n = 0;
    std::vector<std::string> warnings; // e.g. expected cell counts below 1
};

using contingency_table = std::vector<std::vector<std::int64_t>>;

// No continuity correction by default; `yates` applies the classic
// |O-E| - 0.5 adjustment for callers that want it on 2x2 tables.
inline chi_squared_result chi_squared(const contingency_table& table, bool yates = false) {
    const std::size_t rows = table.size();
    if (rows < 2) throw compute_error("chi_squared: degenerate table (need >= 2 rows)");
    const std::size_t cols = table[0].size();
    if (cols < 2) throw compute_error("chi_squared: degenerate table (need >= 2 columns)");
    for (const auto& row : table)
        if (row.size() != cols)
            throw compute_error("chi_squared: ragged table");

    std::vector<std::int64_t> row_sum(rows, 0), col_sum(cols, 0);
    std::int64_t n = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            std::int64_t v = table[i][j];
            if (v < 0) throw compute_error("chi_squared: negative cell count");
            row_sum[i] += v;
            col_sum[j] += v;
            n += v;
        }
    }
    if (n == 0) throw compute_error("chi_squared: degenerate table (all cells zero)");
    for (std::size_t i = 0; i < rows; ++i)
        if (row_sum[i] == 0)
            throw compute_error("chi_squared: degenerate table (all-zero row " +
                                std::to_string(i) + ")");
    for (std::size_t j = 0; j < cols; ++j)
        if (col_sum[j] == 0)
            throw compute_error("chi_squared: degenerate table (all-zero column " +
                                std::to_string(j) + ")");

    chi_squared_result result;
    result.n = n;
    result.dof = static_cast<int>((rows - 1) * (cols - 1));
    bool small_expected = false;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double expected = static_cast<double>(row_sum[i]) *
                              static_cast<double>(col_sum[j]) / static_cast<double>(n);
            if (expected < 1.0) small_expected = true;
            double diff = std::fabs(static_cast<double>(table[i][j]) - expected);
            if (yates) diff = std::max(0.0, diff - 0.5);
            result.chi2 += diff * diff / expected;
        }
    }
    if (small_expected)
        result.warnings.push_back("expected cell count below 1; chi-square approximation unreliable");
    result.p_value = chi2_sf(result.chi2, result.dof);
    return result;
}

// Cramér's V: chi2 normalized by sample size and the smaller table
// dimension. Clamped to [0, 1] against floating point drift.
inline double cramers_v(double chi2, std::int64_t n, std::size_t rows, std::size_t cols) {
    if (rows < 2 || cols < 2)
        throw compute_error("cramers_v: table must be at least 2x2");
    if (n <= 0) throw compute_error("cramers_v: n must be positive");
    if (chi2 < 0.0) throw compute_error("cramers_v: chi2 must be non-negative");
    std::size_t min_dim = std::min(rows, cols);
    double v = std::sqrt(chi2 / (static_cast<double>(n) * static_cast<double>(min_dim - 1)));
    return std::clamp(v, 0.0, 1.0);
}

// Bonferroni adjustment for m comparisons; m is the number of tests that
// actually ran, not the number planned.
inline double bonferroni(double p, int m) {
    if (m < 1) throw compute_error("bonferroni: number of tests must be >= 1");
    if (p < 0.0 || p > 1.0) throw compute_error("bonferroni: p must lie in [0, 1]");
    return std::min(1.0, p * static_cast<double>(m));
}

// One fully described association test, as emitted to stats.jsonl and
// battery.json. `p_adjusted` is present only for tests that belong to a
// multiple-comparison family.
struct stat_test_result {
    std::string test_id;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    contingency_table table;
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 1.0;
    std::optional<double> p_adjusted;
    double effect_size = 0.0; // Cramér's V
    std::int64_t n = 0;
    std::vector<std::string> warnings;
};

inline stat_test_result run_test(std::string test_id,
                                 std::vector<std::string> row_labels,
                                 std::vector<std::string> col_labels,
                                 contingency_table table, bool yates = false) {
    chi_squared_result base = chi_squared(table, yates);
    stat_test_result out;
    out.test_id = std::move(test_id);
    out.row_labels = std::move(row_labels);
    out.col_labels = std::move(col_labels);
    out.chi2 = base.chi2;
    out.dof = base.dof;
    out.p_value = base.p_value;
    out.n = base.n;
    out.effect_size = cramers_v(base.chi2, base.n, table.size(), table[0].size());
    out.warnings = std::move(base.warnings);
    out.table = std::move(table);
    return out;
}

} // namespace limelight
