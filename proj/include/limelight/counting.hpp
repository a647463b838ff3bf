#pragma once

#include <cstdint>
#include <iterator>
#include <string>
#include <utility>

#include "limelight/errors.hpp"

namespace limelight {

// Person counts are analyzed as four ordered buckets. The top bucket is
// open-ended, so every non-negative count maps to exactly one bucket.

enum class count_bucket { zero = 0, one = 1, two = 2, three_plus = 3 };

inline count_bucket bucket_of(std::int64_t persons) {
    if (persons < 0) throw input_error("bucket_of: negative person count");
    if (persons == 0) return count_bucket::zero;
    if (persons == 1) return count_bucket::one;
    if (persons == 2) return count_bucket::two;
    return count_bucket::three_plus;
}

inline std::string to_string(count_bucket b) {
    switch (b) {
        case count_bucket::zero: return "0";
        case count_bucket::one: return "1";
        case count_bucket::two: return "2";
        case count_bucket::three_plus: return "3+";
    }
    throw input_error("to_string: invalid count bucket");
}

// Parses the closed bucket vocabulary; anything else is a labeling error,
// surfaced rather than coerced.
inline count_bucket parse_bucket(const std::string& label) {
    if (label == "0") return count_bucket::zero;
    if (label == "1") return count_bucket::one;
    if (label == "2") return count_bucket::two;
    if (label == "3+") return count_bucket::three_plus;
    throw input_error("parse_bucket: \"" + label + "\" is not one of 0, 1, 2, 3+");
}

// Count from a detector's output: one person per detected box. Works for
// face boxes and person-labeled object boxes alike; the caller records the
// source. Returns the raw cardinality together with its bucket.
template <typename Range>
std::pair<std::int64_t, count_bucket> count_from_detections(const Range& detections) {
    std::int64_t n = 0;
    for (auto it = std::begin(detections); it != std::end(detections); ++it) ++n;
    return {n, bucket_of(n)};
}

} // namespace limelight
