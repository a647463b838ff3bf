#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "limelight/corpus.hpp"
#include "limelight/errors.hpp"

namespace limelight {

// Gallery-based face verification over precomputed embeddings. A detected
// face is compared against every reference portrait; the face takes the
// identity of its closest gallery person when the distance clears the
// verification threshold and stays "Unknown" otherwise.

inline constexpr const char* unknown_label = "Unknown";

// Euclidean distance between the L2-normalized vectors, computed as
// sqrt(2 - 2 cos) from the raw dot product so no normalized copies are
// materialized. Range [0, 2]; invariant under positive rescaling of
// either argument.
inline double embedding_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw input_error("embedding_distance: dimension mismatch (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw input_error("embedding_distance: empty embedding");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw input_error("embedding_distance: zero vector has no direction");
    double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
    cosine = std::clamp(cosine, -1.0, 1.0);
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * cosine));
}

// Closest gallery person for one embedding: per person the minimum over
// that person's portraits, then the overall minimum. Exact distance ties
// resolve to the lexicographically smallest person name so results do not
// depend on gallery file order.
struct nearest_person {
    std::string person;
    double distance = 0.0;
};

inline nearest_person match_embedding(std::span<const double> embedding,
                                      std::span<const gallery_entry> gallery) {
    if (gallery.empty()) throw input_error("match_embedding: empty gallery");
    nearest_person best;
    bool first = true;
    for (const auto& entry : gallery) {
        const double d = embedding_distance(embedding, entry.embedding);
        if (first || d < best.distance ||
            (d == best.distance && entry.person < best.person)) {
            best.person = entry.person;
            best.distance = d;
            first = false;
        }
    }
    return best;
}

// Entries belonging to one party; used for the default per-party matching
// mode where a face is only compared against its own party's candidate.
inline std::vector<gallery_entry> restrict_gallery(std::span<const gallery_entry> gallery,
                                                   const std::string& party) {
    std::vector<gallery_entry> out;
    for (const auto& entry : gallery)
        if (entry.party == party) out.push_back(entry);
    if (out.empty())
        throw input_error("restrict_gallery: no gallery entries for party \"" + party + "\"");
    return out;
}

struct match_result {
    std::string face_id;
    std::string image_id;
    std::string best_person;
    double distance = 0.0;
    std::string label; // best_person or "Unknown", set by label_match
};

inline match_result match_face(const face_detection& face,
                               std::span<const gallery_entry> gallery) {
    nearest_person np = match_embedding(face.embedding, gallery);
    match_result r;
    r.face_id = face.face_id;
    r.image_id = face.image_id;
    r.best_person = np.person;
    r.distance = np.distance;
    return r;
}

// A distance exactly at the threshold still verifies; only strictly larger
// distances fall back to "Unknown".
inline std::string label_at_threshold(const std::string& best_person, double distance,
                                      double threshold) {
    return distance <= threshold ? best_person : unknown_label;
}

inline void label_match(match_result& r, double threshold) {
    r.label = label_at_threshold(r.best_person, r.distance, threshold);
}

// Image-level presence: the candidate is present when any face in the
// image verified as them. Faces from other images are not the caller's
// concern here; pass the image's own matches.
inline bool aggregate_presence(std::span<const match_result> image_matches,
                               const std::string& candidate) {
    return std::any_of(image_matches.begin(), image_matches.end(),
                       [&](const match_result& m) { return m.label == candidate; });
}

} // namespace limelight
