#include <catch2/catch_amalgamated.hpp>

#include <limelight/calibrate.hpp>
#include <limelight/errors.hpp>

#include "support/oracles.hpp"
#include "support/random_data.hpp"

#include <algorithm>
#include <string>
#include <vector>

using namespace limelight;

namespace {

calibration_sample sample(double distance, std::string best, std::string truth) {
    return calibration_sample{distance, std::move(best), std::move(truth)};
}

bool has_warning(const calibration_result& r, const std::string& needle) {
    return std::any_of(r.warnings.begin(), r.warnings.end(), [&](const std::string& w) {
        return w.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_CASE("candidate_thresholds on two distances", "[calibrate]") {
    const auto c = candidate_thresholds({0.3, 0.5});
    const std::vector<double> expected{0.3 - 1e-6, 0.3, 0.4, 0.5, 0.5 + 1e-6};
    REQUIRE(c.size() == expected.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK_THAT(c[i], Catch::Matchers::WithinAbs(expected[i], 1e-15));
}

TEST_CASE("candidate_thresholds on a single distance", "[calibrate]") {
    const auto c = candidate_thresholds({0.7});
    const std::vector<double> expected{0.7 - 1e-6, 0.7, 0.7 + 1e-6};
    REQUIRE(c.size() == expected.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK_THAT(c[i], Catch::Matchers::WithinAbs(expected[i], 1e-15));
}

TEST_CASE("candidate_thresholds deduplicates before construction", "[calibrate]") {
    const auto c = candidate_thresholds({0.2, 0.2, 0.9});
    const std::vector<double> expected{0.2 - 1e-6, 0.2, 0.55, 0.9, 0.9 + 1e-6};
    REQUIRE(c.size() == expected.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK_THAT(c[i], Catch::Matchers::WithinAbs(expected[i], 1e-15));
}

TEST_CASE("candidate_thresholds output is sorted, unique, and brackets the data",
          "[calibrate]") {
    testgen::rng gen(421);
    std::uniform_real_distribution<double> d(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> ds;
        std::uniform_int_distribution<std::size_t> n_dist(1, 40);
        const std::size_t n = n_dist(gen);
        for (std::size_t i = 0; i < n; ++i) ds.push_back(d(gen));
        const double lo = *std::min_element(ds.begin(), ds.end());
        const double hi = *std::max_element(ds.begin(), ds.end());

        const auto c = candidate_thresholds(ds);
        CHECK(std::is_sorted(c.begin(), c.end()));
        CHECK(std::adjacent_find(c.begin(), c.end()) == c.end());
        CHECK(c.front() < lo);
        CHECK(c.back() > hi);
    }
}

TEST_CASE("candidate_thresholds rejects empty input", "[calibrate]") {
    CHECK_THROWS_AS(candidate_thresholds({}), input_error);
}

TEST_CASE("optimize_threshold separates matches from impostors", "[calibrate]") {
    // Genuine matches at 0.3 and 0.5, impostors at 0.8 and 0.9: every
    // threshold in [0.5, 0.8) labels perfectly; the smallest candidate in
    // that range is the observed distance 0.5 itself.
    const std::vector<calibration_sample> samples{
        sample(0.3, "personA", "personA"),
        sample(0.5, "personA", "personA"),
        sample(0.8, "personA", "Unknown"),
        sample(0.9, "personA", "Unknown"),
    };
    const std::vector<std::string> labels{"personA", "Unknown"};

    const auto r = optimize_threshold(samples, labels);
    CHECK_THAT(r.threshold, Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.warnings.empty());
    CHECK(r.sweep.size() == 9); // 4 uniques + 3 midpoints + 2 extremes
}

TEST_CASE("optimize_threshold with only genuine matches warns and verifies everything",
          "[calibrate]") {
    const std::vector<calibration_sample> samples{
        sample(0.2, "personA", "personA"),
        sample(0.4, "personA", "personA"),
    };
    const std::vector<std::string> labels{"personA", "Unknown"};

    const auto r = optimize_threshold(samples, labels);
    CHECK_THAT(r.threshold, Catch::Matchers::WithinAbs(0.4, 1e-15));
    // personA: F1 = 1.0; Unknown never occurs: F1 = 0; macro = 0.5.
    CHECK_THAT(r.macro_f1, Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK(has_warning(r, "no genuine non-match"));
    CHECK_FALSE(has_warning(r, "no genuine-match"));
}

TEST_CASE("optimize_threshold with only impostors warns", "[calibrate]") {
    const std::vector<calibration_sample> samples{
        sample(0.8, "personA", "Unknown"),
        sample(1.1, "personB", "Unknown"),
    };
    const std::vector<std::string> labels{"personA", "personB", "Unknown"};

    const auto r = optimize_threshold(samples, labels);
    CHECK(has_warning(r, "no genuine-match"));
    // Rejecting everything is optimal: the best threshold sits below the
    // smallest observed distance.
    CHECK(r.threshold < 0.8);
}

TEST_CASE("optimize_threshold rejects empty input", "[calibrate]") {
    const std::vector<std::string> labels{"personA", "Unknown"};
    CHECK_THROWS_AS(optimize_threshold(std::vector<calibration_sample>{}, labels),
                    input_error);
}

TEST_CASE("optimize_threshold result is internally consistent", "[calibrate]") {
    testgen::rng gen(422);
    const std::vector<std::string> labels{"personA", "personB", "personC", "Unknown"};
    for (int trial = 0; trial < 50; ++trial) {
        const auto samples = testgen::random_calibration(gen, 60);
        const auto r = optimize_threshold(samples, labels);

        // The winner appears in the sweep and carries the maximal F1.
        double best = -1.0;
        bool found = false;
        for (const auto& p : r.sweep) {
            best = std::max(best, p.macro_f1);
            if (p.threshold == r.threshold) {
                found = true;
                CHECK(p.macro_f1 == r.macro_f1);
            }
        }
        CHECK(found);
        CHECK(r.macro_f1 == best);

        // Recomputing the report at the chosen threshold reproduces the score.
        CHECK(macro_f1_at(samples, r.threshold, labels) == r.macro_f1);

        // Sample order must not matter.
        auto shuffled = samples;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        const auto r2 = optimize_threshold(shuffled, labels);
        CHECK(r2.threshold == r.threshold);
        CHECK(r2.macro_f1 == r.macro_f1);
    }
}

TEST_CASE("optimize_threshold equals the brute-force oracle exactly", "[calibrate]") {
    testgen::rng gen(423);
    const std::vector<std::string> labels{"personA", "personB", "personC", "Unknown"};
    for (int trial = 0; trial < 200; ++trial) {
        const auto samples = testgen::random_calibration(gen, 100);

        std::vector<oracle::calibration_case> cases;
        for (const auto& s : samples)
            cases.push_back({s.distance, s.best_person, s.true_label});

        const auto got = optimize_threshold(samples, labels);
        const auto want = oracle::best_threshold(cases, labels);
        CHECK(got.threshold == want.threshold);
        CHECK(got.macro_f1 == want.macro_f1);
    }
}
