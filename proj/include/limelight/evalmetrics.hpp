#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "limelight/errors.hpp"

namespace limelight {

// Confusion matrix and derived classification metrics. Rows are truth,
// columns are predictions, in the caller-supplied label order. Zero
// divisions resolve to 0.0 and are flagged, never silently dropped, so
// macro averages stay comparable across runs.

struct confusion_matrix {
    std::vector<std::string> labels;
    std::vector<std::vector<std::int64_t>> counts; // counts[truth][predicted]

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& row : counts)
            for (auto v : row) t += v;
        return t;
    }
};

inline confusion_matrix make_confusion(const std::vector<std::string>& truth,
                                       const std::vector<std::string>& predicted,
                                       const std::vector<std::string>& labels) {
    if (truth.size() != predicted.size())
        throw input_error("make_confusion: truth and prediction counts differ (" +
                          std::to_string(truth.size()) + " vs " +
                          std::to_string(predicted.size()) + ")");
    confusion_matrix m;
    m.labels = labels;
    m.counts.assign(labels.size(), std::vector<std::int64_t>(labels.size(), 0));
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!index.emplace(labels[i], i).second)
            throw input_error("make_confusion: duplicate label \"" + labels[i] + "\"");
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto t = index.find(truth[i]);
        if (t == index.end())
            throw input_error("make_confusion: true label \"" + truth[i] +
                              "\" not in label set");
        auto p = index.find(predicted[i]);
        if (p == index.end())
            throw input_error("make_confusion: predicted label \"" + predicted[i] +
                              "\" not in label set");
        ++m.counts[t->second][p->second];
    }
    return m;
}

struct class_metrics {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;      // row total (true instances)
    bool precision_defined = true; // false when nothing was predicted as this label
    bool recall_defined = true;    // false when the label has no true instances
};

struct classification_report {
    std::vector<class_metrics> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    std::int64_t total = 0;
};

inline classification_report make_report(const confusion_matrix& m) {
    const std::size_t k = m.labels.size();
    if (k == 0) throw compute_error("make_report: empty matrix");
    classification_report rep;
    rep.total = m.total();
    if (rep.total == 0) throw compute_error("make_report: empty matrix");

    std::int64_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::int64_t row = 0, col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += m.counts[c][j];
            col += m.counts[j][c];
        }
        std::int64_t diag = m.counts[c][c];
        trace += diag;

        class_metrics cm;
        cm.label = m.labels[c];
        cm.support = row;
        cm.precision_defined = col > 0;
        cm.recall_defined = row > 0;
        cm.precision = col > 0 ? static_cast<double>(diag) / static_cast<double>(col) : 0.0;
        cm.recall = row > 0 ? static_cast<double>(diag) / static_cast<double>(row) : 0.0;
        double pr = cm.precision + cm.recall;
        cm.f1 = pr > 0.0 ? 2.0 * cm.precision * cm.recall / pr : 0.0;
        rep.per_class.push_back(cm);

        rep.macro_precision += cm.precision;
        rep.macro_recall += cm.recall;
        rep.macro_f1 += cm.f1;
        rep.weighted_precision += cm.precision * static_cast<double>(row);
        rep.weighted_recall += cm.recall * static_cast<double>(row);
        rep.weighted_f1 += cm.f1 * static_cast<double>(row);
    }

    rep.macro_precision /= static_cast<double>(k);
    rep.macro_recall /= static_cast<double>(k);
    rep.macro_f1 /= static_cast<double>(k);
    rep.weighted_precision /= static_cast<double>(rep.total);
    rep.weighted_recall /= static_cast<double>(rep.total);
    rep.weighted_f1 /= static_cast<double>(rep.total);
    rep.accuracy = static_cast<double>(trace) / static_cast<double>(rep.total);
    return rep;
}

} // namespace limelight
