#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "limelight/errors.hpp"
#include "limelight/jsonl.hpp"

namespace limelight {

// Record types and loaders for the dataset files. Loading is strict:
// enums must parse, references must resolve, keys must be unique, and
// every violation is reported with file:line context. Unknown fields are
// kept in `extras` so files round trip without loss.

enum class item_kind { story, post };
enum class account_kind { party, candidate };
enum class media_origin { image, video_first_frame };
enum class task_kind { face_identity, person_count, candidate_presence };

inline std::string to_string(item_kind k) {
    return k == item_kind::story ? "story" : "post";
}
inline std::string to_string(account_kind k) {
    return k == account_kind::party ? "party" : "candidate";
}
inline std::string to_string(media_origin o) {
    return o == media_origin::image ? "image" : "video_first_frame";
}
inline std::string to_string(task_kind t) {
    switch (t) {
        case task_kind::face_identity: return "face_identity";
        case task_kind::person_count: return "person_count";
        case task_kind::candidate_presence: return "candidate_presence";
    }
    return "";
}

inline item_kind parse_item_kind(const std::string& s, const std::string& ctx) {
    if (s == "story") return item_kind::story;
    if (s == "post") return item_kind::post;
    throw input_error(ctx + ": item_type must be \"story\" or \"post\", got \"" + s + "\"");
}
inline account_kind parse_account_kind(const std::string& s, const std::string& ctx) {
    if (s == "party") return account_kind::party;
    if (s == "candidate") return account_kind::candidate;
    throw input_error(ctx + ": account_type must be \"party\" or \"candidate\", got \"" + s + "\"");
}
inline media_origin parse_media_origin(const std::string& s, const std::string& ctx) {
    if (s == "image") return media_origin::image;
    if (s == "video_first_frame") return media_origin::video_first_frame;
    throw input_error(ctx + ": media_origin must be \"image\" or \"video_first_frame\", got \"" +
                      s + "\"");
}
inline task_kind parse_task_kind(const std::string& s, const std::string& ctx) {
    if (s == "face_identity") return task_kind::face_identity;
    if (s == "person_count") return task_kind::person_count;
    if (s == "candidate_presence") return task_kind::candidate_presence;
    throw input_error(ctx + ": task must be face_identity, person_count or candidate_presence, got \"" +
                      s + "\"");
}

// Calendar date, optionally followed by a T... timestamp suffix.
inline bool valid_iso_date(const std::string& s) {
    if (s.size() < 10) return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    if (s[4] != '-' || s[7] != '-') return false;
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    static const int days_in_month[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) return false;
    if (day < 1 || day > days_in_month[month - 1]) return false;
    return s.size() == 10 || s[10] == 'T';
}

struct content_item {
    std::string item_id;
    item_kind type = item_kind::story;
    std::string account_handle;
    account_kind account_type = account_kind::party;
    std::string party;
    std::string published_at;
    json extras = json::object();
};

struct image_record {
    std::string image_id;
    std::string item_id;
    media_origin origin = media_origin::image;
    json extras = json::object();
};

struct face_detection {
    std::string face_id;
    std::string image_id;
    std::array<double, 4> bbox{}; // x, y, width, height
    std::vector<double> embedding;
    std::optional<double> confidence;
    json extras = json::object();
};

struct gallery_entry {
    std::string person;
    std::string party;
    std::string source_ref;
    std::vector<double> embedding;
    json extras = json::object();
};

struct annotation_record {
    std::string unit_id; // image_id or face_id, depending on the task
    std::string annotator_id;
    task_kind task = task_kind::face_identity;
    std::string label;
    json extras = json::object();
};

struct prediction_record {
    std::string unit_id;
    std::string model_id;
    task_kind task = task_kind::face_identity;
    std::string label;
    std::optional<std::string> comment;
    std::optional<std::string> raw_response;
    json extras = json::object();
};

// --- serialization -------------------------------------------------------

inline json to_json(const content_item& r) {
    json o = r.extras;
    o["kind"] = "item";
    o["item_id"] = r.item_id;
    o["item_type"] = to_string(r.type);
    o["account_handle"] = r.account_handle;
    o["account_type"] = to_string(r.account_type);
    o["party"] = r.party;
    o["published_at"] = r.published_at;
    return o;
}

inline json to_json(const image_record& r) {
    json o = r.extras;
    o["kind"] = "image";
    o["image_id"] = r.image_id;
    o["item_id"] = r.item_id;
    o["media_origin"] = to_string(r.origin);
    return o;
}

inline json to_json(const face_detection& r) {
    json o = r.extras;
    o["face_id"] = r.face_id;
    o["image_id"] = r.image_id;
    o["bbox"] = r.bbox;
    o["embedding"] = r.embedding;
    if (r.confidence) o["confidence"] = *r.confidence;
    return o;
}

inline json to_json(const gallery_entry& r) {
    json o = r.extras;
    o["person"] = r.person;
    o["party"] = r.party;
    o["source_ref"] = r.source_ref;
    o["embedding"] = r.embedding;
    return o;
}

inline json to_json(const annotation_record& r) {
    json o = r.extras;
    o["unit_id"] = r.unit_id;
    o["annotator_id"] = r.annotator_id;
    o["task"] = to_string(r.task);
    o["label"] = r.label;
    return o;
}

inline json to_json(const prediction_record& r) {
    json o = r.extras;
    o["unit_id"] = r.unit_id;
    o["model_id"] = r.model_id;
    o["task"] = to_string(r.task);
    o["label"] = r.label;
    if (r.comment) o["comment"] = *r.comment;
    if (r.raw_response) o["raw_response"] = *r.raw_response;
    return o;
}

// --- per-file loaders ----------------------------------------------------

struct corpus_content {
    std::vector<content_item> items;
    std::vector<image_record> images;
};

// corpus.jsonl mixes items and images, discriminated by "kind".
// `party_list`, when non-empty, restricts the item party field.
inline corpus_content load_corpus_file(const std::string& path,
                                       const std::vector<std::string>& party_list = {}) {
    corpus_content out;
    const std::set<std::string> parties(party_list.begin(), party_list.end());
    for_each_jsonl(path, [&](json& obj, std::size_t lineno) {
        const std::string ctx = where(path, lineno);
        const std::string kind = require_string(obj, "kind", ctx);
        if (kind == "item") {
            content_item r;
            r.item_id = require_string(obj, "item_id", ctx);
            r.type = parse_item_kind(require_string(obj, "item_type", ctx), ctx);
            r.account_handle = require_string(obj, "account_handle", ctx);
            r.account_type = parse_account_kind(require_string(obj, "account_type", ctx), ctx);
            r.party = require_string(obj, "party", ctx);
            r.published_at = require_string(obj, "published_at", ctx);
            if (!valid_iso_date(r.published_at))
                throw input_error(ctx + ": published_at \"" + r.published_at +
                                  "\" is not an ISO date");
            if (!parties.empty() && !parties.count(r.party))
                throw input_error(ctx + ": party \"" + r.party +
                                  "\" is not in the configured party list");
            r.extras = collect_extras(obj, {"kind", "item_id", "item_type", "account_handle",
                                            "account_type", "party", "published_at"});
            out.items.push_back(std::move(r));
        } else if (kind == "image") {
            image_record r;
            r.image_id = require_string(obj, "image_id", ctx);
            r.item_id = require_string(obj, "item_id", ctx);
            r.origin = parse_media_origin(require_string(obj, "media_origin", ctx), ctx);
            r.extras = collect_extras(obj, {"kind", "image_id", "item_id", "media_origin"});
            out.images.push_back(std::move(r));
        } else {
            throw input_error(ctx + ": kind must be \"item\" or \"image\", got \"" + kind + "\"");
        }
    });
    return out;
}

inline std::vector<face_detection> load_faces(const std::string& path) {
    std::vector<face_detection> out;
    std::size_t dim = 0;
    for_each_jsonl(path, [&](json& obj, std::size_t lineno) {
        const std::string ctx = where(path, lineno);
        face_detection r;
        r.face_id = require_string(obj, "face_id", ctx);
        r.image_id = require_string(obj, "image_id", ctx);
        auto bbox = require_number_array(obj, "bbox", ctx);
        if (bbox.size() != 4)
            throw input_error(ctx + ": bbox must have exactly 4 numbers");
        if (bbox[2] <= 0.0 || bbox[3] <= 0.0)
            throw input_error(ctx + ": bbox width and height must be positive");
        std::copy(bbox.begin(), bbox.end(), r.bbox.begin());
        r.embedding = require_number_array(obj, "embedding", ctx);
        if (r.embedding.empty())
            throw input_error(ctx + ": embedding must not be empty");
        if (dim == 0) dim = r.embedding.size();
        else if (r.embedding.size() != dim)
            throw input_error(ctx + ": embedding dimension " +
                              std::to_string(r.embedding.size()) +
                              " differs from earlier records (" + std::to_string(dim) + ")");
        if (obj.contains("confidence")) {
            if (!obj["confidence"].is_number())
                throw input_error(ctx + ": confidence must be a number");
            r.confidence = obj["confidence"].get<double>();
        }
        r.extras = collect_extras(obj, {"face_id", "image_id", "bbox", "embedding", "confidence"});
        out.push_back(std::move(r));
    });
    return out;
}

// Several entries per person are allowed (multiple portraits); the party
// attached to a person must not vary between them.
inline std::vector<gallery_entry> load_gallery(const std::string& path) {
    std::vector<gallery_entry> out;
    std::size_t dim = 0;
    std::map<std::string, std::string> person_party;
    for_each_jsonl(path, [&](json& obj, std::size_t lineno) {
        const std::string ctx = where(path, lineno);
        gallery_entry r;
        r.person = require_string(obj, "person", ctx);
        r.party = require_string(obj, "party", ctx);
        r.source_ref = require_string(obj, "source_ref", ctx);
        r.embedding = require_number_array(obj, "embedding", ctx);
        if (r.embedding.empty())
            throw input_error(ctx + ": embedding must not be empty");
        if (dim == 0) dim = r.embedding.size();
        else if (r.embedding.size() != dim)
            throw input_error(ctx + ": embedding dimension " +
                              std::to_string(r.embedding.size()) +
                              " differs from earlier records (" + std::to_string(dim) + ")");
        auto it = person_party.find(r.person);
        if (it == person_party.end()) person_party[r.person] = r.party;
        else if (it->second != r.party)
            throw input_error(ctx + ": person \"" + r.person + "\" listed under party \"" +
                              r.party + "\" but earlier under \"" + it->second + "\"");
        r.extras = collect_extras(obj, {"person", "party", "source_ref", "embedding"});
        out.push_back(std::move(r));
    });
    return out;
}

inline std::vector<annotation_record> load_annotations(const std::string& path) {
    std::vector<annotation_record> out;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](json& obj, std::size_t lineno) {
        const std::string ctx = where(path, lineno);
        annotation_record r;
        r.unit_id = require_string(obj, "unit_id", ctx);
        r.annotator_id = require_string(obj, "annotator_id", ctx);
        r.task = parse_task_kind(require_string(obj, "task", ctx), ctx);
        r.label = require_string(obj, "label", ctx);
        if (r.label.empty()) throw input_error(ctx + ": label must not be empty");
        if (!seen.insert(r.unit_id + "\x1f" + r.annotator_id + "\x1f" + to_string(r.task)).second)
            throw input_error(ctx + ": duplicate annotation for (unit \"" + r.unit_id +
                              "\", annotator \"" + r.annotator_id + "\", task " +
                              to_string(r.task) + ")");
        r.extras = collect_extras(obj, {"unit_id", "annotator_id", "task", "label"});
        out.push_back(std::move(r));
    });
    return out;
}

inline std::vector<prediction_record> load_predictions(const std::string& path) {
    std::vector<prediction_record> out;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](json& obj, std::size_t lineno) {
        const std::string ctx = where(path, lineno);
        prediction_record r;
        r.unit_id = require_string(obj, "unit_id", ctx);
        r.model_id = require_string(obj, "model_id", ctx);
        r.task = parse_task_kind(require_string(obj, "task", ctx), ctx);
        r.label = require_string(obj, "label", ctx);
        if (!seen.insert(r.unit_id + "\x1f" + r.model_id + "\x1f" + to_string(r.task)).second)
            throw input_error(ctx + ": duplicate prediction for (unit \"" + r.unit_id +
                              "\", model \"" + r.model_id + "\", task " +
                              to_string(r.task) + ")");
        if (obj.contains("comment")) {
            if (!obj["comment"].is_string())
                throw input_error(ctx + ": comment must be a string");
            r.comment = obj["comment"].get<std::string>();
        }
        if (obj.contains("raw_response")) {
            if (!obj["raw_response"].is_string())
                throw input_error(ctx + ": raw_response must be a string");
            r.raw_response = obj["raw_response"].get<std::string>();
        }
        r.extras = collect_extras(obj, {"unit_id", "model_id", "task", "label", "comment",
                                        "raw_response"});
        out.push_back(std::move(r));
    });
    return out;
}

// --- aggregated corpus ---------------------------------------------------

struct corpus_files {
    std::string corpus;      // required
    std::string faces;       // optional, "" = absent
    std::string gallery;     // optional
    std::string annotations; // optional
    std::string predictions; // optional
};

struct corpus_summary {
    std::size_t items = 0, stories = 0, posts = 0, images = 0;
    std::size_t party_account_items = 0, candidate_account_items = 0;
    std::size_t faces = 0, gallery_entries = 0, annotations = 0, predictions = 0;
    std::size_t embedding_dim = 0;
};

struct corpus_bundle {
    std::vector<content_item> items;
    std::vector<image_record> images;
    std::vector<face_detection> faces;
    std::vector<gallery_entry> gallery;
    std::vector<annotation_record> annotations;
    std::vector<prediction_record> predictions;

    std::map<std::string, std::size_t> item_index;  // item_id -> items[]
    std::map<std::string, std::size_t> image_index; // image_id -> images[]
    std::map<std::string, std::size_t> face_index;  // face_id -> faces[]

    const content_item& item_of_image(const image_record& img) const {
        return items[item_index.at(img.item_id)];
    }
    const content_item& item_of(const std::string& image_id) const {
        return item_of_image(images[image_index.at(image_id)]);
    }

    corpus_summary summarize() const {
        corpus_summary s;
        s.items = items.size();
        for (const auto& it : items) {
            (it.type == item_kind::story ? s.stories : s.posts)++;
            (it.account_type == account_kind::party ? s.party_account_items
                                                    : s.candidate_account_items)++;
        }
        s.images = images.size();
        s.faces = faces.size();
        s.gallery_entries = gallery.size();
        s.annotations = annotations.size();
        s.predictions = predictions.size();
        if (!faces.empty()) s.embedding_dim = faces[0].embedding.size();
        else if (!gallery.empty()) s.embedding_dim = gallery[0].embedding.size();
        return s;
    }
};

// Loads whatever files are present and verifies every cross-reference
// among them: images point at known items, stories carry exactly one
// image, posts at least one, faces point at known images, and face and
// gallery embeddings share one dimension.
inline corpus_bundle load_corpus(const corpus_files& files,
                                 const std::vector<std::string>& party_list = {}) {
    corpus_bundle b;
    if (files.corpus.empty()) throw input_error("load_corpus: corpus file is required");
    corpus_content content = load_corpus_file(files.corpus, party_list);
    b.items = std::move(content.items);
    b.images = std::move(content.images);

    std::map<std::string, account_kind> handle_kind;
    for (std::size_t i = 0; i < b.items.size(); ++i) {
        const content_item& item = b.items[i];
        if (!b.item_index.emplace(item.item_id, i).second)
            throw input_error(files.corpus + ": duplicate item_id \"" + item.item_id + "\"");
        auto [it, inserted] = handle_kind.emplace(item.account_handle, item.account_type);
        if (!inserted && it->second != item.account_type)
            throw input_error(files.corpus + ": account \"" + item.account_handle +
                              "\" appears as both party and candidate account");
    }
    std::map<std::string, std::size_t> images_per_item;
    for (std::size_t i = 0; i < b.images.size(); ++i) {
        const image_record& img = b.images[i];
        if (!b.image_index.emplace(img.image_id, i).second)
            throw input_error(files.corpus + ": duplicate image_id \"" + img.image_id + "\"");
        if (!b.item_index.count(img.item_id))
            throw input_error(files.corpus + ": image \"" + img.image_id +
                              "\" references unknown item_id \"" + img.item_id + "\"");
        ++images_per_item[img.item_id];
    }
    for (const auto& item : b.items) {
        const std::size_t n = images_per_item.count(item.item_id)
                                  ? images_per_item[item.item_id] : 0;
        if (item.type == item_kind::story && n != 1)
            throw input_error(files.corpus + ": story \"" + item.item_id + "\" has " +
                              std::to_string(n) + " images, expected exactly 1");
        if (item.type == item_kind::post && n < 1)
            throw input_error(files.corpus + ": post \"" + item.item_id + "\" has no images");
    }

    if (!files.faces.empty()) {
        b.faces = load_faces(files.faces);
        for (std::size_t i = 0; i < b.faces.size(); ++i) {
            const face_detection& f = b.faces[i];
            if (!b.face_index.emplace(f.face_id, i).second)
                throw input_error(files.faces + ": duplicate face_id \"" + f.face_id + "\"");
            if (!b.image_index.count(f.image_id))
                throw input_error(files.faces + ": face \"" + f.face_id +
                                  "\" references unknown image_id \"" + f.image_id + "\"");
        }
    }
    if (!files.gallery.empty()) {
        b.gallery = load_gallery(files.gallery);
        if (!b.faces.empty() && !b.gallery.empty() &&
            b.faces[0].embedding.size() != b.gallery[0].embedding.size())
            throw input_error("embedding dimension mismatch: faces have " +
                              std::to_string(b.faces[0].embedding.size()) +
                              ", gallery has " + std::to_string(b.gallery[0].embedding.size()));
    }
    if (!files.annotations.empty()) b.annotations = load_annotations(files.annotations);
    if (!files.predictions.empty()) b.predictions = load_predictions(files.predictions);
    return b;
}

// --- label vocabularies --------------------------------------------------

// The closed label sets per task. Model output may additionally be
// "Unsure" or the parse-failure marker on the presence task; human
// annotations may not.
struct label_vocabulary {
    std::set<std::string> person_names; // identity labels besides "Unknown"

    std::set<std::string> labels(task_kind task, bool model_output = false) const {
        switch (task) {
            case task_kind::face_identity: {
                std::set<std::string> s = person_names;
                s.insert("Unknown");
                return s;
            }
            case task_kind::person_count:
                return {"0", "1", "2", "3+"};
            case task_kind::candidate_presence: {
                std::set<std::string> s{"True", "False"};
                if (model_output) {
                    s.insert("Unsure");
                    s.insert("parse-failure");
                }
                return s;
            }
        }
        return {};
    }
};

inline label_vocabulary vocabulary_from_gallery(const std::vector<gallery_entry>& gallery) {
    label_vocabulary v;
    for (const auto& g : gallery) v.person_names.insert(g.person);
    return v;
}

struct label_issue {
    std::string unit_id;
    std::string label;
};

// Returns the records whose label falls outside the task vocabulary.
template <typename Record>
std::vector<label_issue> validate_label_sets(const std::vector<Record>& records,
                                             task_kind task,
                                             const label_vocabulary& vocab,
                                             bool model_output = false) {
    const std::set<std::string> allowed = vocab.labels(task, model_output);
    std::vector<label_issue> issues;
    for (const auto& r : records)
        if (r.task == task && !allowed.count(r.label))
            issues.push_back({r.unit_id, r.label});
    return issues;
}

} // namespace limelight
