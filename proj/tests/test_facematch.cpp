#include <catch2/catch_amalgamated.hpp>

#include <limelight/errors.hpp>
#include <limelight/facematch.hpp>

#include "support/random_data.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace limelight;

namespace {

gallery_entry entry(std::string person, std::string party, std::vector<double> emb) {
    gallery_entry e;
    e.person = std::move(person);
    e.party = std::move(party);
    e.source_ref = "ref";
    e.embedding = std::move(emb);
    return e;
}

// Reference implementation: explicitly normalize, then take the plain
// Euclidean distance.
double normalized_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double na = 0.0, nb = 0.0;
    for (double x : a) na += x * x;
    for (double x : b) nb += x * x;
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] / na - b[i] / nb;
        sum += d * d;
    }
    return std::sqrt(sum);
}

} // namespace

TEST_CASE("embedding_distance on anchor vectors", "[facematch]") {
    const std::vector<double> v{0.3, -1.2, 0.5};
    const std::vector<double> e1{1.0, 0.0};
    const std::vector<double> e2{0.0, 1.0};
    const std::vector<double> neg{-0.3, 1.2, -0.5};

    CHECK(embedding_distance(v, v) == 0.0);
    CHECK_THAT(embedding_distance(e1, e2),
               Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));
    CHECK_THAT(embedding_distance(v, neg), Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("embedding_distance ignores vector magnitude", "[facematch]") {
    testgen::rng gen(411);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = testgen::random_embedding(gen, 8);
        auto b = testgen::random_embedding(gen, 8);
        const double base = embedding_distance(a, b);
        for (double k : {0.001, 0.5, 3.0, 1e6}) {
            auto scaled = b;
            for (auto& x : scaled) x *= k;
            CHECK_THAT(embedding_distance(a, scaled),
                       Catch::Matchers::WithinAbs(base, 1e-9));
        }
    }
}

TEST_CASE("embedding_distance is a metric on directions", "[facematch]") {
    testgen::rng gen(412);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = testgen::random_embedding(gen, 6);
        const auto b = testgen::random_embedding(gen, 6);
        const auto c = testgen::random_embedding(gen, 6);
        const double ab = embedding_distance(a, b);
        const double bc = embedding_distance(b, c);
        const double ac = embedding_distance(a, c);
        CHECK(ab == embedding_distance(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 2.0);
        CHECK(ac <= ab + bc + 1e-9);
        CHECK_THAT(ab, Catch::Matchers::WithinAbs(normalized_euclidean(a, b), 1e-9));
    }
}

TEST_CASE("embedding_distance input validation", "[facematch]") {
    const std::vector<double> a{1.0, 0.0};
    const std::vector<double> b{1.0, 0.0, 0.0};
    const std::vector<double> zero{0.0, 0.0};
    const std::vector<double> empty;

    CHECK_THROWS_AS(embedding_distance(a, b), input_error);
    CHECK_THROWS_AS(embedding_distance(empty, empty), input_error);
    CHECK_THROWS_AS(embedding_distance(a, zero), input_error);
    CHECK_THROWS_AS(embedding_distance(zero, a), input_error);
}

TEST_CASE("match_embedding picks the per-person then overall minimum", "[facematch]") {
    // Two portraits per person; the second portrait of "Bert" is the global
    // closest.
    const std::vector<gallery_entry> gallery{
        entry("Anna", "P1", {1.0, 0.0, 0.0}),
        entry("Anna", "P1", {0.9, 0.1, 0.0}),
        entry("Bert", "P2", {0.0, 1.0, 0.0}),
        entry("Bert", "P2", {0.1, 0.9, 0.05}),
    };
    const std::vector<double> query{0.1, 0.9, 0.05};

    const nearest_person np = match_embedding(query, gallery);
    CHECK(np.person == "Bert");
    CHECK(np.distance == 0.0);
}

TEST_CASE("match_embedding breaks exact ties toward the smaller name", "[facematch]") {
    const std::vector<double> shared{0.5, 0.5};
    const std::vector<gallery_entry> forward{
        entry("Bert", "P2", shared),
        entry("Anna", "P1", shared),
    };
    const std::vector<gallery_entry> backward{
        entry("Anna", "P1", shared),
        entry("Bert", "P2", shared),
    };
    const std::vector<double> query{1.0, 0.0};

    const nearest_person a = match_embedding(query, forward);
    const nearest_person b = match_embedding(query, backward);
    CHECK(a.person == "Anna");
    CHECK(b.person == "Anna");
    CHECK(a.distance == b.distance);
}

TEST_CASE("match_embedding equals a brute-force scan", "[facematch]") {
    testgen::rng gen(413);
    const std::vector<std::string> people{"Anna", "Bert", "Cleo", "Dana"};
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> n_dist(1, 12);
        std::uniform_int_distribution<std::size_t> who(0, people.size() - 1);
        std::vector<gallery_entry> gallery;
        const std::size_t n = n_dist(gen);
        for (std::size_t i = 0; i < n; ++i)
            gallery.push_back(entry(people[who(gen)], "P", testgen::random_embedding(gen, 5)));
        const auto query = testgen::random_embedding(gen, 5);

        std::string best_name;
        double best_d = 0.0;
        bool first = true;
        for (const auto& e : gallery) {
            const double d = embedding_distance(query, e.embedding);
            if (first || d < best_d || (d == best_d && e.person < best_name)) {
                best_name = e.person;
                best_d = d;
                first = false;
            }
        }

        const nearest_person np = match_embedding(query, gallery);
        CHECK(np.person == best_name);
        CHECK(np.distance == best_d);

        // Gallery order must not matter.
        std::vector<gallery_entry> shuffled = gallery;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        const nearest_person np2 = match_embedding(query, shuffled);
        CHECK(np2.person == np.person);
        CHECK(np2.distance == np.distance);
    }
}

TEST_CASE("match_embedding rejects an empty gallery", "[facematch]") {
    const std::vector<double> query{1.0, 0.0};
    CHECK_THROWS_AS(match_embedding(query, std::vector<gallery_entry>{}), input_error);
}

TEST_CASE("restrict_gallery keeps only the requested party", "[facematch]") {
    const std::vector<gallery_entry> gallery{
        entry("Olaf Scholz", "SPD", {1.0, 0.0}),
        entry("Armin Laschet", "CDU", {0.0, 1.0}),
        entry("Olaf Scholz", "SPD", {0.9, 0.1}),
    };

    const auto spd = restrict_gallery(gallery, "SPD");
    REQUIRE(spd.size() == 2);
    CHECK(spd[0].person == "Olaf Scholz");
    CHECK(spd[1].person == "Olaf Scholz");

    CHECK_THROWS_AS(restrict_gallery(gallery, "FDP"), input_error);
}

TEST_CASE("label_at_threshold treats the threshold as inclusive", "[facematch]") {
    CHECK(label_at_threshold("Anna", 0.93, 0.95) == "Anna");
    CHECK(label_at_threshold("Anna", 0.95, 0.95) == "Anna");
    CHECK(label_at_threshold("Anna", 0.96, 0.95) == unknown_label);
    CHECK(label_at_threshold("Anna", 2.0, 0.95) == unknown_label);
    CHECK(label_at_threshold("Anna", 0.0, 0.0) == "Anna");
}

TEST_CASE("match_face carries ids through and label_match applies the threshold",
          "[facematch]") {
    face_detection face;
    face.face_id = "f1";
    face.image_id = "img1";
    face.bbox = {0.0, 0.0, 10.0, 10.0};
    face.embedding = {1.0, 0.0};

    const std::vector<gallery_entry> gallery{
        entry("Anna", "P1", {1.0, 0.05}),
        entry("Bert", "P2", {0.0, 1.0}),
    };

    match_result r = match_face(face, gallery);
    CHECK(r.face_id == "f1");
    CHECK(r.image_id == "img1");
    CHECK(r.best_person == "Anna");
    CHECK(r.label.empty());

    label_match(r, 0.7);
    CHECK(r.label == "Anna");

    match_result strict = match_face(face, gallery);
    label_match(strict, r.distance / 2.0);
    CHECK(strict.label == unknown_label);
}

TEST_CASE("aggregate_presence is true iff any face verified as the candidate",
          "[facematch]") {
    auto make = [](std::string label) {
        match_result r;
        r.label = std::move(label);
        return r;
    };

    const std::vector<match_result> none{};
    const std::vector<match_result> misses{make(unknown_label), make("Bert")};
    const std::vector<match_result> hit{make(unknown_label), make("Anna"), make("Bert")};

    CHECK_FALSE(aggregate_presence(none, "Anna"));
    CHECK_FALSE(aggregate_presence(misses, "Anna"));
    CHECK(aggregate_presence(hit, "Anna"));
    CHECK(aggregate_presence(misses, "Bert"));
}

TEST_CASE("verification labels are monotone in the threshold", "[facematch]") {
    // Once a face verifies at some threshold it stays verified at every
    // larger threshold.
    testgen::rng gen(414);
    std::uniform_real_distribution<double> d_dist(0.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double d = d_dist(gen);
        const double t1 = d_dist(gen);
        const double t2 = d_dist(gen);
        const double lo = std::min(t1, t2), hi = std::max(t1, t2);
        if (label_at_threshold("X", d, lo) == "X") CHECK(label_at_threshold("X", d, hi) == "X");
        if (label_at_threshold("X", d, hi) == unknown_label)
            CHECK(label_at_threshold("X", d, lo) == unknown_label);
    }
}
