#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "limelight/evalmetrics.hpp"
#include "support/oracles.hpp"
#include "support/random_data.hpp"

using namespace limelight;

TEST_CASE("make_confusion examples") {
    SECTION("identity diagonal") {
        const auto m = make_confusion({"A", "B"}, {"A", "B"}, {"A", "B"});
        CHECK(m.counts == std::vector<std::vector<std::int64_t>>{{1, 0}, {0, 1}});
    }
    SECTION("one miss") {
        const auto m = make_confusion({"A", "A", "B"}, {"A", "B", "B"}, {"A", "B"});
        CHECK(m.counts == std::vector<std::vector<std::int64_t>>{{1, 1}, {0, 1}});
    }
    SECTION("empty inputs give an all-zero matrix") {
        const auto m = make_confusion({}, {}, {"A", "B"});
        CHECK(m.total() == 0);
        CHECK(m.counts == std::vector<std::vector<std::int64_t>>{{0, 0}, {0, 0}});
    }
}

TEST_CASE("make_confusion errors") {
    CHECK_THROWS_AS(make_confusion({"A"}, {"A", "B"}, {"A", "B"}), input_error);
    CHECK_THROWS_AS(make_confusion({"C"}, {"A"}, {"A", "B"}), input_error);
    CHECK_THROWS_AS(make_confusion({"A"}, {"C"}, {"A", "B"}), input_error);
    CHECK_THROWS_AS(make_confusion({"A"}, {"A"}, {"A", "A"}), input_error);
}

TEST_CASE("classification_report hand example") {
    const auto m = make_confusion({"A", "A", "A", "B", "B"}, {"A", "A", "B", "B", "B"},
                                  {"A", "B"});
    const auto rep = make_report(m);
    CHECK(rep.per_class[0].precision == 1.0);
    CHECK_THAT(rep.per_class[0].recall, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    CHECK_THAT(rep.per_class[0].f1, Catch::Matchers::WithinAbs(0.8, 1e-15));
    CHECK_THAT(rep.per_class[1].precision, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    CHECK(rep.per_class[1].recall == 1.0);
    CHECK_THAT(rep.per_class[1].f1, Catch::Matchers::WithinAbs(0.8, 1e-15));
    CHECK(rep.macro_f1 == 0.8);
    CHECK(rep.weighted_f1 == 0.8);
    CHECK(rep.per_class[0].support == 3);
    CHECK(rep.per_class[1].support == 2);
    CHECK_THAT(rep.accuracy, Catch::Matchers::WithinAbs(0.8, 1e-15));
}

TEST_CASE("perfect predictions score 1.0 everywhere") {
    const auto m = make_confusion({"A", "B", "C", "C"}, {"A", "B", "C", "C"}, {"A", "B", "C"});
    const auto rep = make_report(m);
    CHECK(rep.macro_f1 == 1.0);
    CHECK(rep.weighted_f1 == 1.0);
    CHECK(rep.accuracy == 1.0);
    for (const auto& c : rep.per_class) {
        CHECK(c.precision == 1.0);
        CHECK(c.recall == 1.0);
    }
}

TEST_CASE("zero-division convention: 0.0 plus a flag") {
    // Nothing predicted as B and nothing truly C.
    confusion_matrix m;
    m.labels = {"A", "B", "C"};
    m.counts = {{2, 0, 1}, {1, 0, 0}, {0, 0, 0}};
    const auto rep = make_report(m);
    CHECK(rep.per_class[1].precision == 0.0);
    CHECK_FALSE(rep.per_class[1].precision_defined);
    CHECK(rep.per_class[1].recall_defined); // row B has support 1
    CHECK(rep.per_class[2].recall == 0.0);
    CHECK_FALSE(rep.per_class[2].recall_defined);
    // One item was (wrongly) predicted C, so C's precision is defined: 0/1.
    CHECK(rep.per_class[2].precision_defined);
    CHECK(rep.per_class[2].precision == 0.0);
    CHECK(rep.per_class[2].f1 == 0.0);
    CHECK(rep.per_class[0].precision_defined);
}

TEST_CASE("empty matrix is an error") {
    confusion_matrix empty;
    CHECK_THROWS_AS(make_report(empty), compute_error);
    const auto zero = make_confusion({}, {}, {"A", "B"});
    CHECK_THROWS_AS(make_report(zero), compute_error);
}

TEST_CASE("label permutation leaves aggregates unchanged") {
    const std::vector<std::string> truth{"A", "B", "C", "A", "C", "C", "B"};
    const std::vector<std::string> pred{"A", "C", "C", "B", "A", "C", "B"};
    const auto r1 = make_report(make_confusion(truth, pred, {"A", "B", "C"}));
    const auto r2 = make_report(make_confusion(truth, pred, {"C", "A", "B"}));
    CHECK_THAT(r1.macro_f1, Catch::Matchers::WithinAbs(r2.macro_f1, 1e-15));
    CHECK_THAT(r1.weighted_f1, Catch::Matchers::WithinAbs(r2.weighted_f1, 1e-15));
    CHECK_THAT(r1.accuracy, Catch::Matchers::WithinAbs(r2.accuracy, 1e-15));
    // Per-class rows follow their labels.
    CHECK(r1.per_class[0].label == "A");
    CHECK(r2.per_class[1].label == "A");
    CHECK(r1.per_class[0].f1 == r2.per_class[1].f1);
}

TEST_CASE("macro equals weighted when supports are equal") {
    confusion_matrix m;
    m.labels = {"A", "B"};
    m.counts = {{3, 2}, {1, 4}}; // both rows sum to 5
    const auto rep = make_report(m);
    CHECK_THAT(rep.macro_f1, Catch::Matchers::WithinAbs(rep.weighted_f1, 1e-15));
    CHECK_THAT(rep.macro_recall, Catch::Matchers::WithinAbs(rep.weighted_recall, 1e-15));
}

TEST_CASE("accuracy equals weighted recall") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 100; ++trial) {
        confusion_matrix m;
        m.counts = testgen::random_confusion(gen);
        m.labels = testgen::label_names(m.counts.size());
        const auto rep = make_report(m);
        CHECK_THAT(rep.accuracy, Catch::Matchers::WithinAbs(rep.weighted_recall, 1e-12));
    }
}

TEST_CASE("report matches the direct-definition oracle on random matrices") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 200; ++trial) {
        confusion_matrix m;
        m.counts = testgen::random_confusion(gen);
        m.labels = testgen::label_names(m.counts.size());
        const auto rep = make_report(m);
        const auto ref = oracle::metrics(m.counts);
        REQUIRE(rep.per_class.size() == ref.per_class.size());
        for (std::size_t c = 0; c < ref.per_class.size(); ++c) {
            CHECK_THAT(rep.per_class[c].precision,
                       Catch::Matchers::WithinAbs(ref.per_class[c].precision, 1e-12));
            CHECK_THAT(rep.per_class[c].recall,
                       Catch::Matchers::WithinAbs(ref.per_class[c].recall, 1e-12));
            CHECK_THAT(rep.per_class[c].f1,
                       Catch::Matchers::WithinAbs(ref.per_class[c].f1, 1e-12));
            CHECK(rep.per_class[c].support == ref.per_class[c].support);
        }
        CHECK_THAT(rep.macro_f1, Catch::Matchers::WithinAbs(ref.macro_f1, 1e-12));
        CHECK_THAT(rep.weighted_f1, Catch::Matchers::WithinAbs(ref.weighted_f1, 1e-12));
        CHECK_THAT(rep.accuracy, Catch::Matchers::WithinAbs(ref.accuracy, 1e-12));
    }
}
