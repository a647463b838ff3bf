// limelight command line tool: one subcommand per pipeline stage, shared
// file formats throughout. Every run writes a manifest naming its inputs
// (content-hashed), its effective configuration, and its outputs; all
// timestamps live only in the manifest, so identical runs produce
// byte-identical data files.
//
// Exit codes: 0 success, 2 input error, 3 computation error, 4 transport
// error. Errors print one machine-readable JSON record to stderr.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "limelight/agreement.hpp"
#include "limelight/calibrate.hpp"
#include "limelight/corpus.hpp"
#include "limelight/counting.hpp"
#include "limelight/errors.hpp"
#include "limelight/evalmetrics.hpp"
#include "limelight/facematch.hpp"
#include "limelight/jsonl.hpp"
#include "limelight/llm.hpp"
#include "limelight/manifest.hpp"
#include "limelight/reports.hpp"
#include "limelight/stats.hpp"
#include "limelight/version.hpp"
#include "limelight/visibility.hpp"

namespace {

using namespace limelight;

// Every option any subcommand understands. Exactly one subcommand parses
// per invocation, so sharing one bag of values is safe and keeps the
// flag/config merging uniform.
struct options {
    // common
    std::string config_path;
    std::string out_dir = "out";
    std::string dataset; // "" | "stories" | "posts"

    // input files
    std::string corpus, faces, gallery, annotations, predictions;
    std::string truth, gold, matches, resolutions, tables;
    std::string visibility, presence, presence_gold, counts;
    std::string objects, calibration;

    // selectors and knobs
    std::vector<std::string> parties;
    std::vector<std::string> labels;
    std::string task;
    std::string model;
    std::string with_model;
    std::string count_source, presence_source;
    double threshold = std::numeric_limits<double>::quiet_NaN();
    bool full_gallery = false;
    bool exclude_unsure = false;
    bool use_bonferroni = false;
    bool yates = false;

    // llm-annotate
    std::string images_dir, endpoint, cache_dir;
    int concurrency = 4;
    int max_retries = 3;
    int timeout_seconds = 60;
    int backoff_ms = 250;
};

// --- config file merging ----------------------------------------------------

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file " + path);
    json cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object())
        throw input_error(path + ": config must be a JSON object");
    return cfg;
}

// Precedence: command line flag > config file key > built-in default. A
// value is taken from the config only when its flag was not given; keys
// that no registered option claims are rejected as typos.
class config_merge {
public:
    config_merge(CLI::App* cmd, const json& cfg) : cmd_(cmd), cfg_(cfg) {}

    template <typename T>
    config_merge& field(const std::string& flag, const std::string& key, T& value) {
        known_.insert(key);
        if (cmd_->count(flag) == 0 && cfg_.contains(key)) {
            try {
                value = cfg_[key].get<T>();
            } catch (const json::exception&) {
                throw input_error("config key \"" + key + "\" has the wrong type");
            }
        }
        return *this;
    }

    void finish() const {
        for (const auto& [key, unused] : cfg_.items())
            if (!known_.count(key))
                throw input_error("unknown config key \"" + key + "\"");
    }

private:
    CLI::App* cmd_;
    const json& cfg_;
    std::set<std::string> known_;
};

// --- small helpers ----------------------------------------------------------

void require_input(const std::string& path, const char* what) {
    if (path.empty())
        throw input_error(std::string("missing required input: ") + what);
    if (!std::filesystem::exists(path))
        throw input_error(std::string(what) + " file not found: " + path);
}

void check_optional(const std::string& path, const char* what) {
    if (!path.empty() && !std::filesystem::exists(path))
        throw input_error(std::string(what) + " file not found: " + path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    json v = json::parse(in, nullptr, false);
    if (v.is_discarded()) throw input_error(path + ": invalid JSON");
    return v;
}

void check_dataset(const std::string& dataset) {
    if (!dataset.empty() && dataset != "stories" && dataset != "posts")
        throw input_error("--dataset must be \"stories\" or \"posts\", got \"" + dataset + "\"");
}

std::vector<std::string> sorted_copy(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
}

// Runs the body, writes the manifest on success, and deletes everything
// already written on failure so a failed run leaves no partial outputs.
template <typename Fn>
int guarded(run_writer& writer, Fn&& body) {
    int code = 0;
    try {
        code = body();
        writer.finish();
    } catch (...) {
        writer.discard();
        throw;
    }
    return code;
}

void note(const std::string& message) {
    std::cerr << json{{"note", message}}.dump() << "\n";
}

bool failure_label(const std::string& label) {
    return label == parse_failure_label || label == transport_failure_label;
}

// Gallery persons grouped by party; prompt building and presence
// aggregation both need to resolve "the front-runner(s) of this party".
std::map<std::string, std::vector<std::string>> persons_by_party(
    const std::vector<gallery_entry>& gallery) {
    std::map<std::string, std::set<std::string>> sets;
    for (const auto& g : gallery) sets[g.party].insert(g.person);
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [party, names] : sets) out[party].assign(names.begin(), names.end());
    return out;
}

// Truth labels for calibration/eval arrive either as gold records
// ({"unit_id","task","label","status"}) or as single-coder annotation rows;
// both reduce to one label per unit. Units left unresolved by review (empty
// label) are skipped and counted.
std::map<std::string, std::string> load_unit_labels(const std::string& path, task_kind task,
                                                    std::size_t* skipped_unresolved) {
    std::map<std::string, std::string> out;
    for_each_jsonl(path, [&](json& obj, std::size_t lineno) {
        const std::string ctx = where(path, lineno);
        if (parse_task_kind(require_string(obj, "task", ctx), ctx) != task) return;
        const std::string unit = require_string(obj, "unit_id", ctx);
        const std::string label = require_string(obj, "label", ctx);
        if (label.empty()) {
            if (skipped_unresolved) ++*skipped_unresolved;
            return;
        }
        if (!out.emplace(unit, label).second)
            throw input_error(ctx + ": duplicate label for unit \"" + unit + "\"");
    });
    return out;
}

// Predictions for one task, keyed by model. `wanted_model` narrows the
// selection; with several models present and no selector the choice would
// be ambiguous, which is an error for single-report consumers.
std::map<std::string, std::map<std::string, std::string>> predictions_by_model(
    const std::vector<prediction_record>& records, task_kind task) {
    std::map<std::string, std::map<std::string, std::string>> out;
    for (const auto& r : records)
        if (r.task == task) out[r.model_id][r.unit_id] = r.label;
    return out;
}

std::map<std::string, std::string> select_model(
    std::map<std::string, std::map<std::string, std::string>> by_model,
    const std::string& wanted_model, std::string* chosen) {
    if (by_model.empty()) throw input_error("no predictions for the requested task");
    if (!wanted_model.empty()) {
        auto it = by_model.find(wanted_model);
        if (it == by_model.end())
            throw input_error("no predictions from model \"" + wanted_model + "\"");
        if (chosen) *chosen = wanted_model;
        return std::move(it->second);
    }
    if (by_model.size() > 1) {
        std::string names;
        for (const auto& [m, unused] : by_model) names += (names.empty() ? "" : ", ") + m;
        throw input_error("predictions from several models (" + names +
                          "); pick one with --model");
    }
    if (chosen) *chosen = by_model.begin()->first;
    return std::move(by_model.begin()->second);
}

// --- subcommand: ingest -----------------------------------------------------

int run_ingest(const options& o) {
    require_input(o.corpus, "--corpus");
    check_optional(o.faces, "--faces");
    check_optional(o.gallery, "--gallery");
    check_optional(o.annotations, "--annotations");
    check_optional(o.predictions, "--predictions");

    json cfg{{"dataset", o.dataset}, {"parties", sorted_copy(o.parties)}};
    run_writer writer(o.out_dir, "ingest", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.corpus);
        if (!o.faces.empty()) writer.add_input(o.faces);
        if (!o.gallery.empty()) writer.add_input(o.gallery);
        if (!o.annotations.empty()) writer.add_input(o.annotations);
        if (!o.predictions.empty()) writer.add_input(o.predictions);

        const corpus_files files{o.corpus, o.faces, o.gallery, o.annotations, o.predictions};
        const corpus_bundle bundle = load_corpus(files, o.parties);
        const corpus_summary s = bundle.summarize();

        const label_vocabulary vocab = vocabulary_from_gallery(bundle.gallery);
        json issues = json::array();
        const auto collect = [&](const auto& records, bool model_output, const char* source) {
            for (task_kind task : {task_kind::face_identity, task_kind::person_count,
                                   task_kind::candidate_presence}) {
                // Identity labels are open-ended without a gallery to name them.
                if (task == task_kind::face_identity && bundle.gallery.empty()) continue;
                for (const auto& issue : validate_label_sets(records, task, vocab, model_output))
                    issues.push_back({{"task", to_string(task)},
                                      {"source", source},
                                      {"unit_id", issue.unit_id},
                                      {"label", issue.label}});
            }
        };
        collect(bundle.annotations, false, "annotations");
        collect(bundle.predictions, true, "predictions");

        writer.write_json("corpus_summary.json",
                          json{{"items", s.items},
                               {"stories", s.stories},
                               {"posts", s.posts},
                               {"images", s.images},
                               {"party_account_items", s.party_account_items},
                               {"candidate_account_items", s.candidate_account_items},
                               {"faces", s.faces},
                               {"gallery_entries", s.gallery_entries},
                               {"annotations", s.annotations},
                               {"predictions", s.predictions},
                               {"embedding_dim", s.embedding_dim},
                               {"label_issues", issues}});
        return 0;
    });
}

// --- subcommand: match ------------------------------------------------------

int run_match(const options& o) {
    require_input(o.corpus, "--corpus");
    require_input(o.faces, "--faces");
    require_input(o.gallery, "--gallery");

    const bool fixed = !std::isnan(o.threshold);
    if (fixed && !o.calibration.empty())
        throw input_error("give either --threshold or --calibration, not both");
    if (!fixed && o.calibration.empty())
        throw input_error("a threshold source is required: --threshold or --calibration");

    double threshold = o.threshold;
    if (!o.calibration.empty()) {
        require_input(o.calibration, "--calibration");
        const json cal = read_json_file(o.calibration);
        if (!cal.contains("threshold") || !cal["threshold"].is_number())
            throw input_error(o.calibration + ": no numeric \"threshold\" field");
        threshold = cal["threshold"].get<double>();
    }
    if (!(threshold > 0.0))
        throw input_error("threshold must be positive, got " + std::to_string(threshold));

    json cfg{{"dataset", o.dataset},
             {"threshold", threshold},
             {"full_gallery", o.full_gallery},
             {"parties", sorted_copy(o.parties)}};
    run_writer writer(o.out_dir, "match", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.corpus);
        writer.add_input(o.faces);
        writer.add_input(o.gallery);
        if (!o.calibration.empty()) writer.add_input(o.calibration);

        const corpus_bundle bundle =
            load_corpus({o.corpus, o.faces, o.gallery, "", ""}, o.parties);
        if (bundle.gallery.empty()) throw input_error(o.gallery + ": gallery is empty");
        const auto by_party = persons_by_party(bundle.gallery);

        // Every image needs its party's front-runner(s) in the gallery, with
        // or without faces, because presence is reported per image.
        for (const auto& [image_id, idx] : bundle.image_index) {
            const std::string& party = bundle.item_of(image_id).party;
            if (!by_party.count(party))
                throw input_error("no gallery entry for party \"" + party +
                                  "\" (image \"" + image_id + "\")");
        }

        std::vector<json> match_rows;
        std::map<std::string, std::vector<match_result>> by_image;
        for (const auto& face : bundle.faces) {
            const content_item& item = bundle.item_of(face.image_id);
            match_result r;
            if (o.full_gallery) {
                r = match_face(face, bundle.gallery);
            } else {
                const auto restricted = restrict_gallery(bundle.gallery, item.party);
                r = match_face(face, restricted);
            }
            label_match(r, threshold);
            match_rows.push_back(json{{"face_id", r.face_id},
                                      {"image_id", r.image_id},
                                      {"best_person", r.best_person},
                                      {"distance", r.distance},
                                      {"label", r.label}});
            by_image[face.image_id].push_back(std::move(r));
        }

        std::vector<json> presence_rows;
        static const std::vector<match_result> no_matches;
        for (const auto& [image_id, idx] : bundle.image_index) {
            const std::string& party = bundle.item_of(image_id).party;
            const auto it = by_image.find(image_id);
            const auto& image_matches = it == by_image.end() ? no_matches : it->second;
            for (const std::string& person : by_party.at(party))
                presence_rows.push_back(
                    json{{"image_id", image_id},
                         {"candidate", person},
                         {"present", aggregate_presence(image_matches, person)},
                         {"source", "embedding"}});
        }

        writer.write_jsonl("matches.jsonl", match_rows);
        writer.write_jsonl("presence.jsonl", presence_rows);
        return 0;
    });
}

// --- subcommand: calibrate --------------------------------------------------

int run_calibrate(const options& o) {
    require_input(o.faces, "--faces");
    require_input(o.gallery, "--gallery");
    require_input(o.truth, "--truth");
    check_optional(o.corpus, "--corpus");
    if (o.dataset.empty())
        throw input_error("calibrate requires --dataset (stories or posts)");
    if (!o.corpus.empty() && o.full_gallery)
        throw input_error("--full-gallery and --corpus are contradictory here: the corpus "
                          "is only used for per-party gallery restriction");

    json cfg{{"dataset", o.dataset}, {"full_gallery", o.full_gallery || o.corpus.empty()}};
    run_writer writer(o.out_dir, "calibrate", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.faces);
        writer.add_input(o.gallery);
        writer.add_input(o.truth);
        if (!o.corpus.empty()) writer.add_input(o.corpus);

        std::vector<face_detection> faces;
        std::optional<corpus_bundle> bundle;
        if (!o.corpus.empty()) {
            bundle = load_corpus({o.corpus, o.faces, o.gallery, "", ""}, o.parties);
            faces = bundle->faces;
        } else {
            faces = load_faces(o.faces);
        }
        const std::vector<gallery_entry> gallery =
            bundle ? bundle->gallery : load_gallery(o.gallery);
        if (gallery.empty()) throw input_error(o.gallery + ": gallery is empty");
        if (!faces.empty() && faces[0].embedding.size() != gallery[0].embedding.size())
            throw input_error("embedding dimension mismatch between faces and gallery");

        std::map<std::string, const face_detection*> face_of;
        for (const auto& f : faces) face_of[f.face_id] = &f;

        std::size_t unresolved = 0;
        const auto truth = load_unit_labels(o.truth, task_kind::face_identity, &unresolved);
        if (truth.empty()) throw input_error(o.truth + ": no face_identity truth labels");
        if (unresolved > 0)
            note("skipped " + std::to_string(unresolved) + " unresolved truth units");

        const label_vocabulary vocab = vocabulary_from_gallery(gallery);
        const auto allowed = vocab.labels(task_kind::face_identity);
        const std::vector<std::string> label_set(allowed.begin(), allowed.end());

        std::vector<calibration_sample> samples;
        samples.reserve(truth.size());
        for (const auto& [face_id, label] : truth) {
            const auto it = face_of.find(face_id);
            if (it == face_of.end())
                throw input_error(o.truth + ": truth unit \"" + face_id +
                                  "\" is not in the faces file");
            if (!allowed.count(label))
                throw input_error(o.truth + ": truth label \"" + label +
                                  "\" is not a gallery person or \"Unknown\"");
            const face_detection& face = *it->second;
            nearest_person nearest;
            if (bundle && !o.full_gallery) {
                const std::string& party = bundle->item_of(face.image_id).party;
                const auto restricted = restrict_gallery(gallery, party);
                nearest = match_embedding(face.embedding, restricted);
            } else {
                nearest = match_embedding(face.embedding, gallery);
            }
            samples.push_back({nearest.distance, nearest.person, label});
        }

        const calibration_result result = optimize_threshold(samples, label_set);
        json out = to_json(result);
        out["dataset"] = o.dataset;
        writer.write_json("calibration.json", out);
        return 0;
    });
}

// --- subcommand: count ------------------------------------------------------

int run_count(const options& o) {
    int sources = 0;
    for (const std::string* p : {&o.faces, &o.objects, &o.predictions, &o.gold})
        if (!p->empty()) ++sources;
    if (sources != 1)
        throw input_error("count needs exactly one source: "
                          "--faces, --objects, --predictions or --gold");
    check_optional(o.corpus, "--corpus");

    const char* source = !o.faces.empty()       ? "faces"
                         : !o.objects.empty()     ? "objects"
                         : !o.predictions.empty() ? "model"
                                                  : "human";
    json cfg{{"dataset", o.dataset}, {"source", source}};
    if (!o.predictions.empty()) cfg["model"] = o.model;
    run_writer writer(o.out_dir, "count", std::move(cfg));
    return guarded(writer, [&]() {
        std::optional<corpus_bundle> bundle;
        if (!o.corpus.empty()) {
            writer.add_input(o.corpus);
            bundle = load_corpus({o.corpus, "", "", "", ""}, o.parties);
        }
        const auto known_image = [&](const std::string& image_id, const std::string& ctx) {
            if (bundle && !bundle->image_index.count(image_id))
                throw input_error(ctx + ": unknown image_id \"" + image_id + "\"");
        };

        std::vector<json> rows;
        if (!o.faces.empty() || !o.objects.empty()) {
            // Detector boxes: one person per box. With a corpus present the
            // row set covers every image, so undetected images count as 0.
            std::map<std::string, std::int64_t> tally;
            if (!o.faces.empty()) {
                require_input(o.faces, "--faces");
                writer.add_input(o.faces);
                for (const auto& f : load_faces(o.faces)) {
                    known_image(f.image_id, o.faces);
                    ++tally[f.image_id];
                }
            } else {
                require_input(o.objects, "--objects");
                writer.add_input(o.objects);
                for_each_jsonl(o.objects, [&](json& obj, std::size_t lineno) {
                    const std::string ctx = where(o.objects, lineno);
                    const std::string image_id = require_string(obj, "image_id", ctx);
                    const auto bbox = require_number_array(obj, "bbox", ctx);
                    if (bbox.size() != 4)
                        throw input_error(ctx + ": bbox must have exactly 4 numbers");
                    if (bbox[2] <= 0.0 || bbox[3] <= 0.0)
                        throw input_error(ctx + ": bbox width and height must be positive");
                    known_image(image_id, ctx);
                    ++tally[image_id];
                });
            }
            std::set<std::string> universe;
            if (bundle)
                for (const auto& [image_id, idx] : bundle->image_index) universe.insert(image_id);
            else
                for (const auto& [image_id, n] : tally) universe.insert(image_id);
            for (const auto& image_id : universe) {
                const auto it = tally.find(image_id);
                const std::int64_t raw = it == tally.end() ? 0 : it->second;
                rows.push_back(json{{"image_id", image_id},
                                    {"source", source},
                                    {"raw", raw},
                                    {"bucket", to_string(bucket_of(raw))}});
            }
        } else if (!o.predictions.empty()) {
            require_input(o.predictions, "--predictions");
            writer.add_input(o.predictions);
            const auto records = load_predictions(o.predictions);
            std::string chosen;
            std::map<std::string, const prediction_record*> record_of;
            for (const auto& r : records)
                if (r.task == task_kind::person_count) record_of[r.unit_id] = &r;
            select_model(predictions_by_model(records, task_kind::person_count), o.model,
                         &chosen);
            std::size_t skipped = 0;
            for (const auto& [unit, rec] : record_of) {
                if (rec->model_id != chosen) continue;
                if (failure_label(rec->label)) {
                    ++skipped;
                    continue;
                }
                known_image(unit, o.predictions);
                json row{{"image_id", unit},
                         {"source", source},
                         {"bucket", to_string(parse_bucket(rec->label))}};
                if (rec->extras.contains("crowd")) row["crowd"] = rec->extras["crowd"];
                rows.push_back(std::move(row));
            }
            if (skipped > 0)
                note("skipped " + std::to_string(skipped) +
                     " failed count predictions (parse/transport failure)");
        } else {
            require_input(o.gold, "--gold");
            writer.add_input(o.gold);
            std::size_t unresolved = 0;
            const auto labels = load_unit_labels(o.gold, task_kind::person_count, &unresolved);
            if (unresolved > 0)
                note("skipped " + std::to_string(unresolved) + " unresolved gold units");
            for (const auto& [unit, label] : labels) {
                known_image(unit, o.gold);
                rows.push_back(json{{"image_id", unit},
                                    {"source", source},
                                    {"bucket", to_string(parse_bucket(label))}});
            }
        }

        writer.write_jsonl("counts.jsonl", rows);
        return 0;
    });
}

// --- subcommand: alpha ------------------------------------------------------

int run_alpha(const options& o) {
    require_input(o.annotations, "--annotations");
    check_optional(o.with_model, "--with-model");
    check_optional(o.gallery, "--gallery");
    if (o.task.empty()) throw input_error("missing required input: --task");
    const task_kind task = parse_task_kind(o.task, "--task");

    json cfg{{"dataset", o.dataset}, {"task", to_string(task)}};
    run_writer writer(o.out_dir, "alpha", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.annotations);
        if (!o.with_model.empty()) writer.add_input(o.with_model);

        reliability_data data;
        for (const auto& a : load_annotations(o.annotations))
            if (a.task == task) data.add(a.unit_id, a.annotator_id, a.label);
        if (data.empty())
            throw input_error(o.annotations + ": no annotations for task " + to_string(task));

        const alpha_result human = nominal_alpha(data);

        json with_model = json::object();
        if (!o.with_model.empty()) {
            std::set<std::string> vocabulary;
            if (!o.gallery.empty()) {
                const label_vocabulary vocab =
                    vocabulary_from_gallery(load_gallery(o.gallery));
                vocabulary = vocab.labels(task, true);
            }
            auto by_model =
                predictions_by_model(load_predictions(o.with_model), task);
            if (!o.model.empty() && !by_model.count(o.model))
                throw input_error("no predictions from model \"" + o.model + "\"");
            for (auto& [model_id, unit_labels] : by_model) {
                if (!o.model.empty() && model_id != o.model) continue;
                // Failure markers are missing data, not codings.
                for (auto it = unit_labels.begin(); it != unit_labels.end();)
                    it = failure_label(it->second) ? unit_labels.erase(it) : std::next(it);
                with_model[model_id] =
                    alpha_with_model(data, unit_labels, model_id, vocabulary).alpha;
            }
        }

        writer.write_json("alpha_report.json",
                          json{{"task", to_string(task)},
                               {"alpha", human.alpha},
                               {"Do", human.observed_disagreement},
                               {"De", human.expected_disagreement},
                               {"n_pairable", human.n_pairable},
                               {"labels", human.labels},
                               {"with_model", with_model}});
        return 0;
    });
}

// --- subcommand: gold -------------------------------------------------------

int run_gold(const options& o) {
    require_input(o.annotations, "--annotations");
    check_optional(o.resolutions, "--resolutions");
    if (o.task.empty()) throw input_error("missing required input: --task");
    const task_kind task = parse_task_kind(o.task, "--task");

    json cfg{{"dataset", o.dataset}, {"task", to_string(task)}};
    run_writer writer(o.out_dir, "gold", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.annotations);
        if (!o.resolutions.empty()) writer.add_input(o.resolutions);

        reliability_data data;
        for (const auto& a : load_annotations(o.annotations))
            if (a.task == task) data.add(a.unit_id, a.annotator_id, a.label);
        if (data.empty())
            throw input_error(o.annotations + ": no annotations for task " + to_string(task));

        std::map<std::string, std::string> resolutions;
        if (!o.resolutions.empty()) {
            for_each_jsonl(o.resolutions, [&](json& obj, std::size_t lineno) {
                const std::string ctx = where(o.resolutions, lineno);
                if (parse_task_kind(require_string(obj, "task", ctx), ctx) != task) return;
                const std::string unit = require_string(obj, "unit_id", ctx);
                const std::string label = require_string(obj, "label", ctx);
                require_string(obj, "reviewer", ctx);
                if (!resolutions.emplace(unit, label).second)
                    throw input_error(ctx + ": duplicate resolution for unit \"" + unit + "\"");
            });
        }

        std::vector<json> rows;
        for (const auto& g : majority_gold(data, resolutions))
            rows.push_back(json{{"unit_id", g.unit_id},
                                {"task", to_string(task)},
                                {"label", g.label},
                                {"status", g.status}});
        writer.write_jsonl("gold.jsonl", rows);
        return 0;
    });
}

// --- subcommand: eval -------------------------------------------------------

int run_eval(const options& o) {
    require_input(o.gold, "--gold");
    if (o.task.empty()) throw input_error("missing required input: --task");
    const task_kind task = parse_task_kind(o.task, "--task");
    if (o.predictions.empty() == o.matches.empty())
        throw input_error("eval needs exactly one of --predictions or --matches");
    if (!o.matches.empty() && task != task_kind::face_identity)
        throw input_error("--matches carries identity labels; use --task face_identity");
    check_optional(o.gallery, "--gallery");

    json cfg{{"dataset", o.dataset},
             {"task", to_string(task)},
             {"exclude_unsure", o.exclude_unsure},
             {"source", o.predictions.empty() ? "matches" : "predictions"}};
    if (!o.labels.empty()) cfg["labels"] = o.labels;
    run_writer writer(o.out_dir, "eval", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.gold);
        if (!o.predictions.empty()) writer.add_input(o.predictions);
        if (!o.matches.empty()) writer.add_input(o.matches);

        std::size_t unresolved = 0;
        const auto truth = load_unit_labels(o.gold, task, &unresolved);
        if (truth.empty()) throw input_error(o.gold + ": no gold labels for task " +
                                             to_string(task));

        std::string model_id;
        std::map<std::string, std::string> predicted;
        if (!o.predictions.empty()) {
            require_input(o.predictions, "--predictions");
            predicted = select_model(
                predictions_by_model(load_predictions(o.predictions), task), o.model,
                &model_id);
        } else {
            require_input(o.matches, "--matches");
            model_id = "embedding";
            for_each_jsonl(o.matches, [&](json& obj, std::size_t lineno) {
                const std::string ctx = where(o.matches, lineno);
                const std::string face_id = require_string(obj, "face_id", ctx);
                const std::string label = require_string(obj, "label", ctx);
                if (!predicted.emplace(face_id, label).second)
                    throw input_error(ctx + ": duplicate match for face \"" + face_id + "\"");
            });
        }

        std::size_t missing = 0, parse_failures = 0, transport_failures = 0;
        std::size_t unsure_excluded = 0, unsure_as_false = 0;
        std::vector<std::string> truth_vec, pred_vec;
        for (const auto& [unit, gold_label] : truth) {
            const auto it = predicted.find(unit);
            if (it == predicted.end()) {
                ++missing;
                continue;
            }
            std::string label = it->second;
            if (label == parse_failure_label) {
                ++parse_failures;
                continue;
            }
            if (label == transport_failure_label) {
                ++transport_failures;
                continue;
            }
            if (task == task_kind::candidate_presence && label == "Unsure") {
                if (o.exclude_unsure) {
                    ++unsure_excluded;
                    continue;
                }
                // A refusal is a failed verification: scored as "not shown".
                label = "False";
                ++unsure_as_false;
            }
            truth_vec.push_back(gold_label);
            pred_vec.push_back(std::move(label));
        }
        if (truth_vec.empty())
            throw compute_error("no evaluable units after exclusions");

        std::vector<std::string> labels = o.labels;
        if (labels.empty()) {
            if (task == task_kind::face_identity && o.gallery.empty()) {
                std::set<std::string> observed(truth_vec.begin(), truth_vec.end());
                observed.insert(pred_vec.begin(), pred_vec.end());
                labels.assign(observed.begin(), observed.end());
            } else {
                label_vocabulary vocab;
                if (!o.gallery.empty())
                    vocab = vocabulary_from_gallery(load_gallery(o.gallery));
                const auto set = vocab.labels(task);
                labels.assign(set.begin(), set.end());
            }
        }

        const confusion_matrix cm = make_confusion(truth_vec, pred_vec, labels);
        const classification_report report = make_report(cm);

        writer.write_json(
            "eval_report.json",
            json{{"task", to_string(task)},
                 {"model_id", model_id},
                 {"labels", labels},
                 {"metrics", to_json(report)},
                 {"confusion", to_json(cm)},
                 {"unsure_mapped_to_false", unsure_as_false},
                 {"excluded", json{{"unresolved_gold", unresolved},
                                   {"missing_prediction", missing},
                                   {"parse_failure", parse_failures},
                                   {"transport_failure", transport_failures},
                                   {"unsure", unsure_excluded}}}});
        writer.write_csv("confusion.csv", to_csv(cm));
        return 0;
    });
}

// --- subcommand: llm-annotate -----------------------------------------------

std::string find_image_file(const std::string& dir, const std::string& image_id) {
    namespace fs = std::filesystem;
    const fs::path base = fs::path(dir) / image_id;
    if (fs::exists(base) && fs::is_regular_file(base)) return base.string();
    for (const char* ext : {".jpg", ".jpeg", ".png"}) {
        fs::path candidate = base;
        candidate += ext;
        if (fs::exists(candidate)) return candidate.string();
    }
    throw input_error("no image file for \"" + image_id + "\" under " + dir);
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return bytes;
}

int run_llm_annotate(const options& o) {
    require_input(o.corpus, "--corpus");
    require_input(o.gallery, "--gallery");
    if (o.images_dir.empty()) throw input_error("missing required input: --images-dir");
    if (!std::filesystem::is_directory(o.images_dir))
        throw input_error("--images-dir is not a directory: " + o.images_dir);
    if (o.endpoint.empty()) throw input_error("missing required input: --endpoint");

    prompt_template tmpl;
    if (o.task == "presence") tmpl = presence_prompt();
    else if (o.task == "count") tmpl = count_prompt();
    else throw input_error("--task must be \"presence\" or \"count\"");

    request_params params;
    params.model_id = o.model.empty() ? params.model_id : o.model;

    // Transport details (endpoint, concurrency, retries, cache location)
    // do not change what is measured, so they stay out of the hashed
    // configuration; the template version and sampling parameters do not.
    json cfg{{"dataset", o.dataset},
             {"task", to_string(tmpl.task)},
             {"template_version", tmpl.version},
             {"model", params.model_id},
             {"temperature", params.temperature},
             {"top_p", params.top_p},
             {"max_tokens", params.max_tokens}};
    run_writer writer(o.out_dir, "llm-annotate", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.corpus);
        writer.add_input(o.gallery);

        const corpus_bundle bundle = load_corpus({o.corpus, "", o.gallery, "", ""}, o.parties);
        const auto by_party = persons_by_party(bundle.gallery);

        std::vector<annotation_request> requests;
        for (const auto& [image_id, idx] : bundle.image_index) {
            const content_item& item = bundle.item_of(image_id);
            const auto it = by_party.find(item.party);
            if (it == by_party.end())
                throw input_error("no gallery entry for party \"" + item.party + "\"");
            if (it->second.size() != 1)
                throw input_error("party \"" + item.party + "\" has " +
                                  std::to_string(it->second.size()) +
                                  " gallery persons; prompts need exactly one front-runner");
            const std::string file = find_image_file(o.images_dir, image_id);
            writer.add_input(file);
            requests.push_back({image_id, read_file_bytes(file), it->second[0], item.party});
        }
        if (requests.empty()) throw input_error(o.corpus + ": no images to annotate");

        llm_endpoint endpoint;
        endpoint.base_url = o.endpoint;
        if (const char* key = std::getenv("OPENAI_API_KEY")) endpoint.api_key = key;
        endpoint.max_retries = o.max_retries;
        endpoint.concurrency = o.concurrency;
        endpoint.backoff_initial_ms = o.backoff_ms;
        endpoint.timeout_seconds = o.timeout_seconds;

        response_cache cache(o.cache_dir.empty()
                                 ? (std::filesystem::path(o.out_dir) / "cache").string()
                                 : o.cache_dir);
        const auto outcomes = annotate_batch(requests, tmpl, params, endpoint, cache);

        std::vector<json> predictions, failures;
        for (const auto& out : outcomes) {
            if (out.transport_failed)
                failures.push_back(json{{"unit_id", out.record.unit_id},
                                        {"model_id", out.record.model_id},
                                        {"task", to_string(out.record.task)},
                                        {"label", out.record.label},
                                        {"error", out.error}});
            else
                predictions.push_back(to_json(out.record));
        }
        writer.write_jsonl("predictions.jsonl", predictions);
        writer.write_jsonl("failures.jsonl", failures);
        if (!failures.empty()) {
            note(std::to_string(failures.size()) + " of " + std::to_string(outcomes.size()) +
                 " requests failed on transport; their units are in failures.jsonl");
            return 4;
        }
        return 0;
    });
}

// --- subcommand: analyze ----------------------------------------------------

struct signal {
    bool present = false;
    count_bucket bucket = count_bucket::zero;
    std::string source;
};

int run_analyze(const options& o) {
    const bool from_csv = !o.visibility.empty();
    const bool build = !o.corpus.empty() || !o.presence.empty() || !o.presence_gold.empty() ||
                       !o.counts.empty();
    if (from_csv && build)
        throw input_error("--visibility replaces --corpus/--presence/--counts; "
                          "give one input mode only");
    if (!from_csv && !build)
        throw input_error("analyze needs --visibility, or --corpus with presence and counts");

    std::vector<visibility_row> rows;
    json cfg{{"dataset", o.dataset}};
    if (from_csv) cfg["input"] = "visibility";
    else {
        cfg["input"] = "signals";
        cfg["presence_kind"] = o.presence.empty() ? "gold" : "file";
        cfg["presence_source"] = o.presence_source;
        cfg["count_source"] = o.count_source;
    }
    run_writer writer(o.out_dir, "analyze", std::move(cfg));
    return guarded(writer, [&]() {
        if (from_csv) {
            require_input(o.visibility, "--visibility");
            writer.add_input(o.visibility);
            rows = load_visibility_csv(o.visibility);
        } else {
            require_input(o.corpus, "--corpus");
            require_input(o.counts, "--counts");
            if (o.presence.empty() == o.presence_gold.empty())
                throw input_error(
                    "analyze needs exactly one of --presence or --presence-gold");
            writer.add_input(o.corpus);
            if (!o.presence.empty()) {
                require_input(o.presence, "--presence");
                writer.add_input(o.presence);
            } else {
                require_input(o.presence_gold, "--presence-gold");
                writer.add_input(o.presence_gold);
            }
            writer.add_input(o.counts);

            const corpus_bundle bundle = load_corpus({o.corpus, "", "", "", ""}, o.parties);

            // presence per image: any candidate of the image's party present
            std::map<std::string, signal> presence;
            if (!o.presence.empty()) {
                std::set<std::string> seen;
                for_each_jsonl(o.presence, [&](json& obj, std::size_t lineno) {
                    const std::string ctx = where(o.presence, lineno);
                    const std::string image_id = require_string(obj, "image_id", ctx);
                    const std::string candidate = require_string(obj, "candidate", ctx);
                    const std::string source = require_string(obj, "source", ctx);
                    if (!obj.contains("present") || !obj["present"].is_boolean())
                        throw input_error(ctx + ": present must be a boolean");
                    if (!o.presence_source.empty() && source != o.presence_source) return;
                    if (!seen.insert(image_id + "\x1f" + candidate + "\x1f" + source).second)
                        throw input_error(ctx + ": duplicate presence row for image \"" +
                                          image_id + "\", candidate \"" + candidate + "\"");
                    auto& sig = presence[image_id];
                    if (!sig.source.empty() && sig.source != source)
                        throw input_error(ctx + ": image \"" + image_id +
                                          "\" has presence rows from several sources; "
                                          "narrow with --presence-source");
                    sig.source = source;
                    sig.present = sig.present || obj["present"].get<bool>();
                });
            } else {
                std::size_t unresolved = 0;
                for (const auto& [unit, label] :
                     load_unit_labels(o.presence_gold, task_kind::candidate_presence,
                                      &unresolved)) {
                    if (label != "True" && label != "False")
                        throw input_error(o.presence_gold + ": presence label for \"" + unit +
                                          "\" must be True or False, got \"" + label + "\"");
                    presence[unit] = {label == "True", count_bucket::zero, "human"};
                }
                if (unresolved > 0)
                    note("skipped " + std::to_string(unresolved) + " unresolved gold units");
            }

            std::map<std::string, signal> counts;
            for_each_jsonl(o.counts, [&](json& obj, std::size_t lineno) {
                const std::string ctx = where(o.counts, lineno);
                const std::string image_id = require_string(obj, "image_id", ctx);
                const std::string source = require_string(obj, "source", ctx);
                const std::string bucket = require_string(obj, "bucket", ctx);
                if (!o.count_source.empty() && source != o.count_source) return;
                auto [it, inserted] =
                    counts.emplace(image_id, signal{false, parse_bucket(bucket), source});
                if (!inserted)
                    throw input_error(ctx + ": image \"" + image_id +
                                      "\" has several count rows" +
                                      (o.count_source.empty() ? "; narrow with --count-source"
                                                              : ""));
            });

            std::size_t skipped = 0;
            for (const auto& [image_id, idx] : bundle.image_index) {
                const auto p = presence.find(image_id);
                const auto c = counts.find(image_id);
                if (p == presence.end() || c == counts.end()) {
                    ++skipped;
                    continue;
                }
                const content_item& item = bundle.item_of(image_id);
                const categorization cat = categorize(p->second.present, c->second.bucket);
                rows.push_back({image_id, item.party, item.account_type, item.type,
                                cat.category, cat.inconsistent_signals, p->second.source,
                                c->second.source});
            }
            if (skipped > 0)
                note("skipped " + std::to_string(skipped) +
                     " images lacking a presence or count signal");
        }
        if (rows.empty()) throw input_error("no images carry both signals");

        if (!from_csv) {
            std::string csv = visibility_csv_header();
            for (const auto& row : rows) csv += to_csv_row(row);
            writer.write_csv("visibility.csv", csv);
        }

        json crosstabs = json::array();
        crosstabs.push_back(to_json(crosstab(rows, {"item_type", "account_type"})));
        crosstabs.push_back(to_json(crosstab(rows, {"item_type", "account_type", "party"})));
        writer.write_json("crosstabs.json", json{{"crosstabs", crosstabs}});

        json tests = json::array();
        for (const auto& entry : run_battery(rows)) tests.push_back(to_json(entry));
        writer.write_json("battery.json", json{{"tests", tests}});
        return 0;
    });
}

// --- subcommand: report -----------------------------------------------------

int run_report(const options& o) {
    require_input(o.tables, "--tables");

    json cfg{{"dataset", o.dataset},
             {"bonferroni", o.use_bonferroni},
             {"yates", o.yates}};
    run_writer writer(o.out_dir, "report", std::move(cfg));
    return guarded(writer, [&]() {
        writer.add_input(o.tables);

        std::vector<stat_test_result> results;
        std::set<std::string> ids;
        for_each_jsonl(o.tables, [&](json& obj, std::size_t lineno) {
            const std::string ctx = where(o.tables, lineno);
            const std::string test_id = require_string(obj, "test_id", ctx);
            if (!ids.insert(test_id).second)
                throw input_error(ctx + ": duplicate test_id \"" + test_id + "\"");

            const json& table_json = require_field(obj, "table", ctx);
            if (!table_json.is_array() || table_json.empty())
                throw input_error(ctx + ": table must be a non-empty array of rows");
            contingency_table table;
            for (const auto& row : table_json) {
                if (!row.is_array())
                    throw input_error(ctx + ": table rows must be arrays");
                std::vector<std::int64_t> cells;
                for (const auto& cell : row) {
                    if (!cell.is_number_integer() || cell.get<std::int64_t>() < 0)
                        throw input_error(ctx + ": table cells must be non-negative integers");
                    cells.push_back(cell.get<std::int64_t>());
                }
                table.push_back(std::move(cells));
            }

            const auto read_labels = [&](const char* key, std::size_t expected,
                                         const char* prefix) {
                std::vector<std::string> labels;
                if (obj.contains(key)) {
                    if (!obj[key].is_array())
                        throw input_error(ctx + ": " + key + " must be an array of strings");
                    for (const auto& l : obj[key]) {
                        if (!l.is_string())
                            throw input_error(ctx + ": " + key + " must be an array of strings");
                        labels.push_back(l.get<std::string>());
                    }
                    if (labels.size() != expected)
                        throw input_error(ctx + ": " + key + " has " +
                                          std::to_string(labels.size()) + " entries for " +
                                          std::to_string(expected) + " table rows/columns");
                } else {
                    for (std::size_t i = 1; i <= expected; ++i)
                        labels.push_back(prefix + std::to_string(i));
                }
                return labels;
            };
            const auto row_labels = read_labels("row_labels", table.size(), "row");
            const auto col_labels =
                read_labels("col_labels", table.empty() ? 0 : table[0].size(), "col");

            results.push_back(
                run_test(test_id, row_labels, col_labels, std::move(table), o.yates));
        });
        if (results.empty()) throw input_error(o.tables + ": no tables to test");

        if (o.use_bonferroni)
            for (auto& r : results)
                r.p_adjusted = bonferroni(r.p_value, static_cast<int>(results.size()));

        std::vector<json> rows;
        for (const auto& r : results) rows.push_back(to_json(r));
        writer.write_jsonl("stats.jsonl", rows);
        return 0;
    });
}

// --- wiring ------------------------------------------------------------------

void add_common(CLI::App* cmd, options& o) {
    cmd->add_option("--config", o.config_path, "JSON config file; flags override its keys");
    cmd->add_option("--out", o.out_dir, "output directory (default: out)");
    cmd->add_option("--dataset", o.dataset, "dataset tag: stories or posts");
}

void merge_common(config_merge& m, options& o) {
    m.field("--out", "out", o.out_dir).field("--dataset", "dataset", o.dataset);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"limelight: campaign-imagery visibility measurement pipeline"};
    app.set_version_flag("--version", limelight::version_string);
    app.require_subcommand(1);

    options o;

    CLI::App* ingest = app.add_subcommand("ingest", "Load and validate the dataset files");
    add_common(ingest, o);
    ingest->add_option("--corpus", o.corpus, "corpus.jsonl (items and images)");
    ingest->add_option("--faces", o.faces, "faces.jsonl");
    ingest->add_option("--gallery", o.gallery, "gallery.jsonl");
    ingest->add_option("--annotations", o.annotations, "annotations.jsonl");
    ingest->add_option("--predictions", o.predictions, "predictions.jsonl");
    ingest->add_option("--parties", o.parties, "allowed party names");

    CLI::App* match = app.add_subcommand("match", "Verify faces against the gallery");
    add_common(match, o);
    match->add_option("--corpus", o.corpus, "corpus.jsonl");
    match->add_option("--faces", o.faces, "faces.jsonl");
    match->add_option("--gallery", o.gallery, "gallery.jsonl");
    match->add_option("--threshold", o.threshold, "fixed verification threshold");
    match->add_option("--calibration", o.calibration, "calibration.json to take the threshold from");
    match->add_flag("--full-gallery", o.full_gallery,
                    "match against all persons instead of the account's party only");
    match->add_option("--parties", o.parties, "allowed party names");

    CLI::App* calibrate = app.add_subcommand("calibrate", "Sweep the verification threshold");
    add_common(calibrate, o);
    calibrate->add_option("--faces", o.faces, "faces.jsonl with embeddings");
    calibrate->add_option("--gallery", o.gallery, "gallery.jsonl");
    calibrate->add_option("--truth", o.truth, "identity truth labels (gold.jsonl format)");
    calibrate->add_option("--corpus", o.corpus,
                          "corpus.jsonl; enables per-party gallery restriction");
    calibrate->add_flag("--full-gallery", o.full_gallery,
                        "ignore the corpus party and match against all persons");
    calibrate->add_option("--parties", o.parties, "allowed party names");

    CLI::App* count = app.add_subcommand("count", "Bucket person counts per image");
    add_common(count, o);
    count->add_option("--faces", o.faces, "faces.jsonl (source: faces)");
    count->add_option("--objects", o.objects, "person boxes jsonl (source: objects)");
    count->add_option("--predictions", o.predictions, "predictions.jsonl (source: model)");
    count->add_option("--gold", o.gold, "gold.jsonl person_count labels (source: human)");
    count->add_option("--corpus", o.corpus, "corpus.jsonl; detector sources then cover "
                                            "every image, undetected images count 0");
    count->add_option("--model", o.model, "model id when predictions hold several");
    count->add_option("--parties", o.parties, "allowed party names");

    CLI::App* alpha = app.add_subcommand("alpha", "Inter-coder agreement");
    add_common(alpha, o);
    alpha->add_option("--annotations", o.annotations, "annotations.jsonl");
    alpha->add_option("--task", o.task, "face_identity | person_count | candidate_presence");
    alpha->add_option("--with-model", o.with_model,
                      "predictions.jsonl appended as an extra coder");
    alpha->add_option("--model", o.model, "restrict --with-model to one model id");
    alpha->add_option("--gallery", o.gallery, "gallery.jsonl for identity vocabulary checks");

    CLI::App* gold = app.add_subcommand("gold", "Majority-vote gold standard");
    add_common(gold, o);
    gold->add_option("--annotations", o.annotations, "annotations.jsonl");
    gold->add_option("--task", o.task, "face_identity | person_count | candidate_presence");
    gold->add_option("--resolutions", o.resolutions, "resolutions.jsonl for tied units");

    CLI::App* eval = app.add_subcommand("eval", "Score predictions against gold labels");
    add_common(eval, o);
    eval->add_option("--gold", o.gold, "gold.jsonl truth labels");
    eval->add_option("--predictions", o.predictions, "predictions.jsonl");
    eval->add_option("--matches", o.matches, "matches.jsonl scored as identity predictions");
    eval->add_option("--task", o.task, "face_identity | person_count | candidate_presence");
    eval->add_option("--model", o.model, "model id when predictions hold several");
    eval->add_option("--gallery", o.gallery, "gallery.jsonl fixing the identity label set");
    eval->add_option("--labels", o.labels, "explicit label order for the confusion matrix");
    eval->add_flag("--exclude-unsure", o.exclude_unsure,
                   "drop Unsure predictions instead of scoring them as False");

    CLI::App* llm = app.add_subcommand("llm-annotate", "Annotate images via a vision model");
    add_common(llm, o);
    llm->add_option("--corpus", o.corpus, "corpus.jsonl");
    llm->add_option("--gallery", o.gallery, "gallery.jsonl naming each party's front-runner");
    llm->add_option("--images-dir", o.images_dir, "directory of image files named by image_id");
    llm->add_option("--task", o.task, "presence | count");
    llm->add_option("--endpoint", o.endpoint, "chat-completions base URL");
    llm->add_option("--model", o.model, "model id (default gpt-4o-2024-05-13)");
    llm->add_option("--concurrency", o.concurrency, "parallel in-flight requests (default 4)");
    llm->add_option("--max-retries", o.max_retries, "retries after the first attempt (default 3)");
    llm->add_option("--cache-dir", o.cache_dir, "response cache directory (default <out>/cache)");
    llm->add_option("--timeout", o.timeout_seconds, "per-request timeout in seconds");
    llm->add_option("--backoff-ms", o.backoff_ms, "initial retry backoff in milliseconds");
    llm->add_option("--parties", o.parties, "allowed party names");

    CLI::App* analyze = app.add_subcommand("analyze", "Visibility categories, crosstabs, tests");
    add_common(analyze, o);
    analyze->add_option("--visibility", o.visibility, "existing visibility.csv to re-analyze");
    analyze->add_option("--corpus", o.corpus, "corpus.jsonl");
    analyze->add_option("--presence", o.presence, "presence.jsonl");
    analyze->add_option("--presence-gold", o.presence_gold,
                        "gold.jsonl candidate_presence labels instead of presence.jsonl");
    analyze->add_option("--counts", o.counts, "counts.jsonl");
    analyze->add_option("--count-source", o.count_source,
                        "keep only count rows from this source");
    analyze->add_option("--presence-source", o.presence_source,
                        "keep only presence rows from this source");
    analyze->add_option("--parties", o.parties, "allowed party names");

    CLI::App* report = app.add_subcommand("report", "Association tests over explicit tables");
    add_common(report, o);
    report->add_option("--tables", o.tables, "tables.jsonl with test_id and counts");
    report->add_flag("--bonferroni", o.use_bonferroni,
                     "adjust p-values for the number of tests in the file");
    report->add_flag("--yates", o.yates, "apply the continuity correction");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        std::cerr << json{{"error", "input_error"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    const auto fail = [](const char* kind, const std::string& message, int code) {
        std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
        return code;
    };

    try {
        CLI::App* active = app.get_subcommands().front();
        json cfg = json::object();
        if (active->count("--config") > 0) cfg = load_config_file(o.config_path);

        config_merge m(active, cfg);
        merge_common(m, o);
        if (active == ingest || active == match || active == calibrate || active == count ||
            active == llm || active == analyze)
            m.field("--parties", "parties", o.parties);
        if (active == ingest || active == match || active == calibrate || active == count ||
            active == llm || active == analyze)
            m.field("--corpus", "corpus", o.corpus);
        if (active == ingest || active == match || active == calibrate || active == count)
            m.field("--faces", "faces", o.faces);
        if (active == ingest || active == match || active == calibrate || active == alpha ||
            active == eval || active == llm)
            m.field("--gallery", "gallery", o.gallery);
        if (active == ingest || active == alpha || active == gold)
            m.field("--annotations", "annotations", o.annotations);
        if (active == ingest || active == count || active == eval)
            m.field("--predictions", "predictions", o.predictions);
        if (active == match) {
            m.field("--threshold", "threshold", o.threshold);
            m.field("--calibration", "calibration", o.calibration);
        }
        if (active == match || active == calibrate)
            m.field("--full-gallery", "full_gallery", o.full_gallery);
        if (active == calibrate) m.field("--truth", "truth", o.truth);
        if (active == count || active == eval) m.field("--gold", "gold", o.gold);
        if (active == count || active == alpha || active == eval || active == llm)
            m.field("--model", "model", o.model);
        if (active == alpha || active == gold || active == eval || active == llm)
            m.field("--task", "task", o.task);
        if (active == alpha) m.field("--with-model", "with_model", o.with_model);
        if (active == gold) m.field("--resolutions", "resolutions", o.resolutions);
        if (active == eval) {
            m.field("--matches", "matches", o.matches);
            m.field("--labels", "labels", o.labels);
            m.field("--exclude-unsure", "exclude_unsure", o.exclude_unsure);
        }
        if (active == count) m.field("--objects", "objects", o.objects);
        if (active == llm) {
            m.field("--images-dir", "images_dir", o.images_dir);
            m.field("--endpoint", "endpoint", o.endpoint);
            m.field("--concurrency", "concurrency", o.concurrency);
            m.field("--max-retries", "max_retries", o.max_retries);
            m.field("--cache-dir", "cache_dir", o.cache_dir);
            m.field("--timeout", "timeout_seconds", o.timeout_seconds);
            m.field("--backoff-ms", "backoff_ms", o.backoff_ms);
        }
        if (active == analyze) {
            m.field("--visibility", "visibility", o.visibility);
            m.field("--presence", "presence", o.presence);
            m.field("--presence-gold", "presence_gold", o.presence_gold);
            m.field("--counts", "counts", o.counts);
            m.field("--count-source", "count_source", o.count_source);
            m.field("--presence-source", "presence_source", o.presence_source);
        }
        if (active == report) {
            m.field("--tables", "tables", o.tables);
            m.field("--bonferroni", "bonferroni", o.use_bonferroni);
            m.field("--yates", "yates", o.yates);
        }
        m.finish();
        check_dataset(o.dataset);

        if (active == ingest) return run_ingest(o);
        if (active == match) return run_match(o);
        if (active == calibrate) return run_calibrate(o);
        if (active == count) return run_count(o);
        if (active == alpha) return run_alpha(o);
        if (active == gold) return run_gold(o);
        if (active == eval) return run_eval(o);
        if (active == llm) return run_llm_annotate(o);
        if (active == analyze) return run_analyze(o);
        if (active == report) return run_report(o);
        return fail("input_error", "unknown subcommand", 2);
    } catch (const limelight::input_error& e) {
        return fail("input_error", e.what(), 2);
    } catch (const limelight::compute_error& e) {
        return fail("compute_error", e.what(), 3);
    } catch (const limelight::transport_error& e) {
        return fail("transport_error", e.what(), 4);
    } catch (const std::exception& e) {
        return fail("compute_error", e.what(), 3);
    }
}
