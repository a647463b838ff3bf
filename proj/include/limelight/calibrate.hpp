#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "limelight/errors.hpp"
#include "limelight/evalmetrics.hpp"
#include "limelight/facematch.hpp"

namespace limelight {

// Verification-threshold calibration against identity-labeled faces.
// The macro F1 of the induced labeling is a step function of the
// threshold; it can only change where a sample's distance sits, so sweeping
// the observed distances plus their midpoints (and one value beyond each
// end) covers every attainable score.

inline constexpr double threshold_margin = 1e-6;

inline std::vector<double> candidate_thresholds(std::vector<double> distances) {
    if (distances.empty())
        throw input_error("candidate_thresholds: no distances given");
    std::sort(distances.begin(), distances.end());
    distances.erase(std::unique(distances.begin(), distances.end()), distances.end());
    std::vector<double> out;
    out.push_back(distances.front() - threshold_margin);
    for (std::size_t i = 0; i < distances.size(); ++i) {
        out.push_back(distances[i]);
        if (i + 1 < distances.size())
            out.push_back(0.5 * (distances[i] + distances[i + 1]));
    }
    out.push_back(distances.back() + threshold_margin);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// One labeled face: its nearest-gallery result plus the annotated truth
// (a person name, or "Unknown" for faces of nobody in the gallery).
struct calibration_sample {
    double distance = 0.0;
    std::string best_person;
    std::string true_label;
};

struct calibration_point {
    double threshold = 0.0;
    double macro_f1 = 0.0;
};

struct calibration_result {
    double threshold = 0.0;
    double macro_f1 = 0.0;
    std::vector<calibration_point> sweep;
    std::vector<std::string> warnings;
};

// Labels from the given label set that the sweep scores against; the set
// must cover every true label and every gallery person that appears.
inline double macro_f1_at(std::span<const calibration_sample> samples, double threshold,
                          const std::vector<std::string>& label_set) {
    std::vector<std::string> truth, predicted;
    truth.reserve(samples.size());
    predicted.reserve(samples.size());
    for (const auto& s : samples) {
        truth.push_back(s.true_label);
        predicted.push_back(label_at_threshold(s.best_person, s.distance, threshold));
    }
    return make_report(make_confusion(truth, predicted, label_set)).macro_f1;
}

// Exhaustive sweep; the winner is the highest macro F1, ties broken toward
// the smallest threshold so calibration is reproducible.
inline calibration_result optimize_threshold(std::span<const calibration_sample> samples,
                                             const std::vector<std::string>& label_set) {
    if (samples.empty()) throw input_error("optimize_threshold: no samples");

    bool any_match = false, any_unknown = false;
    std::vector<double> distances;
    distances.reserve(samples.size());
    for (const auto& s : samples) {
        distances.push_back(s.distance);
        (s.true_label == unknown_label ? any_unknown : any_match) = true;
    }

    calibration_result result;
    if (!any_match)
        result.warnings.push_back("no genuine-match sample in the calibration data");
    if (!any_unknown)
        result.warnings.push_back("no genuine non-match (Unknown) sample in the calibration data");

    for (double t : candidate_thresholds(std::move(distances))) {
        const double f1 = macro_f1_at(samples, t, label_set);
        result.sweep.push_back({t, f1});
        if (result.sweep.size() == 1 || f1 > result.macro_f1) {
            result.macro_f1 = f1;
            result.threshold = t;
        }
    }
    return result;
}

} // namespace limelight
