#include <catch2/catch_amalgamated.hpp>

#include <limelight/counting.hpp>
#include <limelight/errors.hpp>

#include <string>
#include <vector>

using namespace limelight;

TEST_CASE("bucket_of maps raw counts onto the closed vocabulary", "[counting]") {
    CHECK(bucket_of(0) == count_bucket::zero);
    CHECK(bucket_of(1) == count_bucket::one);
    CHECK(bucket_of(2) == count_bucket::two);
    CHECK(bucket_of(3) == count_bucket::three_plus);
    CHECK(bucket_of(7) == count_bucket::three_plus);
    CHECK(bucket_of(1000000) == count_bucket::three_plus);
}

TEST_CASE("bucket_of rejects negative counts", "[counting]") {
    CHECK_THROWS_AS(bucket_of(-1), input_error);
    CHECK_THROWS_AS(bucket_of(-100), input_error);
}

TEST_CASE("bucket round-trips through its string form", "[counting]") {
    CHECK(to_string(count_bucket::zero) == "0");
    CHECK(to_string(count_bucket::one) == "1");
    CHECK(to_string(count_bucket::two) == "2");
    CHECK(to_string(count_bucket::three_plus) == "3+");

    for (const auto b : {count_bucket::zero, count_bucket::one, count_bucket::two,
                         count_bucket::three_plus}) {
        CHECK(parse_bucket(to_string(b)) == b);
    }
}

TEST_CASE("parse_bucket accepts only the closed vocabulary", "[counting]") {
    CHECK(parse_bucket("0") == count_bucket::zero);
    CHECK(parse_bucket("3+") == count_bucket::three_plus);
    CHECK_THROWS_AS(parse_bucket("3"), input_error);
    CHECK_THROWS_AS(parse_bucket("many"), input_error);
    CHECK_THROWS_AS(parse_bucket(""), input_error);
    CHECK_THROWS_AS(parse_bucket(" 1"), input_error);
    CHECK_THROWS_AS(parse_bucket("2+"), input_error);
}

TEST_CASE("count_from_detections returns the raw count and its bucket", "[counting]") {
    const std::vector<int> five{1, 2, 3, 4, 5};
    const std::vector<int> none{};
    const std::vector<std::string> two{"a", "b"};

    const auto r5 = count_from_detections(five);
    CHECK(r5.first == 5);
    CHECK(r5.second == count_bucket::three_plus);

    const auto r0 = count_from_detections(none);
    CHECK(r0.first == 0);
    CHECK(r0.second == count_bucket::zero);

    const auto r2 = count_from_detections(two);
    CHECK(r2.first == 2);
    CHECK(r2.second == count_bucket::two);
}

TEST_CASE("bucket boundaries are exact", "[counting]") {
    // Every raw value maps to exactly one bucket and the mapping is monotone.
    count_bucket prev = bucket_of(0);
    for (std::int64_t raw = 1; raw <= 50; ++raw) {
        const count_bucket cur = bucket_of(raw);
        CHECK(static_cast<int>(cur) >= static_cast<int>(prev));
        prev = cur;
    }
    // The top bucket absorbs everything from three upward.
    for (std::int64_t raw = 3; raw <= 50; ++raw) {
        CHECK(bucket_of(raw) == count_bucket::three_plus);
    }
}
