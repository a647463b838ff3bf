#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "limelight/errors.hpp"

namespace limelight {

// Inter-coder reliability for nominal labels: Krippendorff's alpha via the
// coincidence-matrix formulation, plus the majority-vote gold standard
// derived from the same codings.

struct coding {
    std::string annotator_id;
    std::string label;
};

// Codings grouped by unit. Insertion enforces one label per
// (unit, annotator) pair; iteration order is deterministic (sorted ids).
class reliability_data {
public:
    void add(const std::string& unit_id, const std::string& annotator_id,
             const std::string& label) {
        auto& codings = units_[unit_id];
        for (const auto& c : codings)
            if (c.annotator_id == annotator_id)
                throw input_error("duplicate coding for unit \"" + unit_id +
                                  "\" by annotator \"" + annotator_id + "\"");
        codings.push_back({annotator_id, label});
        std::sort(codings.begin(), codings.end(),
                  [](const coding& a, const coding& b) { return a.annotator_id < b.annotator_id; });
    }

    const std::map<std::string, std::vector<coding>>& units() const { return units_; }
    bool empty() const { return units_.empty(); }

private:
    std::map<std::string, std::vector<coding>> units_;
};

// o[c][k] accumulates, for every unit with m >= 2 codings, each ordered
// pair of distinct codings weighted by 1/(m-1). Units with fewer than two
// codings cannot be paired and contribute nothing.
struct coincidence_matrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> counts;
    double total = 0.0;                 // sum over all cells; equals the number
                                        // of pairable values
    std::int64_t pairable_values = 0;   // codings in units with >= 2 codings
    std::int64_t pairable_units = 0;

    double label_mass(std::size_t c) const {
        double s = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) s += counts[c][k];
        return s;
    }
};

inline coincidence_matrix make_coincidence(const reliability_data& data) {
    coincidence_matrix m;
    std::set<std::string> label_set;
    for (const auto& [unit, codings] : data.units())
        for (const auto& c : codings) label_set.insert(c.label);
    m.labels.assign(label_set.begin(), label_set.end());

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < m.labels.size(); ++i) index[m.labels[i]] = i;
    m.counts.assign(m.labels.size(), std::vector<double>(m.labels.size(), 0.0));

    for (const auto& [unit, codings] : data.units()) {
        const std::size_t mu = codings.size();
        if (mu < 2) continue;
        ++m.pairable_units;
        m.pairable_values += static_cast<std::int64_t>(mu);
        const double w = 1.0 / static_cast<double>(mu - 1);
        for (std::size_t i = 0; i < mu; ++i)
            for (std::size_t j = 0; j < mu; ++j) {
                if (i == j) continue;
                m.counts[index[codings[i].label]][index[codings[j].label]] += w;
            }
    }
    for (std::size_t c = 0; c < m.labels.size(); ++c)
        for (std::size_t k = 0; k < m.labels.size(); ++k) m.total += m.counts[c][k];
    return m;
}

struct alpha_result {
    double alpha = 0.0;
    double observed_disagreement = 0.0;
    double expected_disagreement = 0.0;
    std::int64_t n_pairable = 0; // pairable values
    std::vector<std::string> labels;
};

// alpha = 1 - Do/De with
//   Do = (1/n) * sum_{c != k} o_ck
//   De = sum_{c != k} n_c * n_k / (n * (n - 1))
// where n_c is the coincidence mass of label c and n the total mass.
inline alpha_result nominal_alpha(const coincidence_matrix& m) {
    if (m.pairable_units == 0)
        throw compute_error("alpha undefined: no unit has two or more codings");
    const double n = m.total;

    double disagree = 0.0;
    for (std::size_t c = 0; c < m.labels.size(); ++c)
        for (std::size_t k = 0; k < m.labels.size(); ++k)
            if (c != k) disagree += m.counts[c][k];

    double expected = 0.0;
    for (std::size_t c = 0; c < m.labels.size(); ++c) {
        const double nc = m.label_mass(c);
        for (std::size_t k = 0; k < m.labels.size(); ++k) {
            if (c == k) continue;
            expected += nc * m.label_mass(k);
        }
    }
    expected /= n * (n - 1.0);

    alpha_result r;
    r.labels = m.labels;
    r.n_pairable = m.pairable_values;
    r.observed_disagreement = disagree / n;
    r.expected_disagreement = expected;
    if (expected == 0.0)
        throw compute_error("alpha undefined: single-label data");
    r.alpha = 1.0 - r.observed_disagreement / r.expected_disagreement;
    return r;
}

inline alpha_result nominal_alpha(const reliability_data& data) {
    return nominal_alpha(make_coincidence(data));
}

// Treats a model as one additional coder and recomputes alpha over the
// joint data. Predictions for units nobody coded end up single-coding
// and therefore unpaired. When a vocabulary is supplied, every model label
// must come from it.
inline alpha_result alpha_with_model(const reliability_data& human,
                                     const std::map<std::string, std::string>& model_labels,
                                     const std::string& model_id,
                                     const std::set<std::string>& vocabulary = {}) {
    reliability_data joint = human;
    const std::string coder = "model:" + model_id;
    for (const auto& [unit, label] : model_labels) {
        if (!vocabulary.empty() && !vocabulary.count(label))
            throw input_error("model label \"" + label + "\" for unit \"" + unit +
                              "\" is outside the task vocabulary");
        joint.add(unit, coder, label);
    }
    return nominal_alpha(joint);
}

// Majority-vote gold standard. A unit resolves to status "majority" when
// one label holds a strict majority (> half of its codings). Otherwise the
// unit needs human review: with an entry in `resolutions` it becomes
// "reviewed" with that label, without one it is emitted as
// "review_required" with an empty label. Resolutions apply only to units
// that lack a strict majority; the majority rule is not overridable.
struct gold_record {
    std::string unit_id;
    std::string label;
    std::string status; // "majority" | "reviewed" | "review_required"
};

inline std::vector<gold_record> majority_gold(
    const reliability_data& data,
    const std::map<std::string, std::string>& resolutions = {}) {
    for (const auto& [unit, label] : resolutions)
        if (!data.units().count(unit))
            throw input_error("resolution for unknown unit \"" + unit + "\"");

    std::vector<gold_record> out;
    for (const auto& [unit, codings] : data.units()) {
        std::map<std::string, std::int64_t> votes;
        for (const auto& c : codings) ++votes[c.label];
        const auto m = static_cast<std::int64_t>(codings.size());

        gold_record rec;
        rec.unit_id = unit;
        rec.status = "review_required";
        for (const auto& [label, count] : votes) {
            if (2 * count > m) {
                rec.label = label;
                rec.status = "majority";
                break;
            }
        }
        if (rec.status == "review_required") {
            auto it = resolutions.find(unit);
            if (it != resolutions.end()) {
                rec.label = it->second;
                rec.status = "reviewed";
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace limelight
