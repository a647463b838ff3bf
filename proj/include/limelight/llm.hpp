#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "limelight/corpus.hpp"
#include "limelight/errors.hpp"
#include "limelight/hashing.hpp"
#include "limelight/jsonl.hpp"

namespace limelight {

// Vision-model annotation over an OpenAI-compatible chat-completions
// endpoint: prompt rendering, request dispatch with bounded retries, a
// response cache keyed by request identity, and tolerant parsing of the
// two structured answer formats.

// --- prompt templates ------------------------------------------------------

struct prompt_template {
    task_kind task = task_kind::candidate_presence;
    std::string body; // placeholders {NAME} and {PARTY}
    std::string version;
};

// The two default templates are the measurement instrument: their wording
// defines what the model is asked to judge, so they are fixed verbatim and
// carry a version tag that participates in the cache key.
inline prompt_template presence_prompt() {
    prompt_template t;
    t.task = task_kind::candidate_presence;
    t.version = "presence-v1";
    t.body =
        "Imagine you are a computational social science PhD candidate. Your objective is to "
        "measure the concentrated visibility of political leaders in the 2021 Federal German "
        "election campaign on social media. Look at the image and determine if it depicts "
        "{NAME}, the front-runner of the {PARTY} party. Note: We are not interested in "
        "identifying individuals beyond this scope; our focus is solely on the presence or "
        "absence of the {PARTY}'s front-runner.\n"
        "\n"
        "First, provide a comment explaining whether the image clearly depicts the {PARTY} "
        "front-runner, does not depict the front-runner, or if you are unsure. Based on this, "
        "set the 'pictures_candidate' value as follows:\n"
        "\n"
        "1. True: if the image clearly depicts the {PARTY} front-runner\n"
        "2. False: if the image does not depict the {PARTY} front-runner\n"
        "3. Unsure: if you cannot clearly determine if it is the {PARTY} front-runner\n"
        "\n"
        "Please return a JSON dictionary formatted as follows:\n"
        "\n"
        "{\n"
        "  \"comment\": \"\",\n"
        "  \"pictures_candidate\": [\"True\", \"False\", \"Unsure\"]\n"
        "}\n";
    return t;
}

inline prompt_template count_prompt() {
    prompt_template t;
    t.task = task_kind::person_count;
    t.version = "count-v1";
    t.body =
        "Imagine you are a social science researcher, conducting an analysis of the 2021 "
        "German Federal election campaign. The image shows the front-runner: {NAME}. We're "
        "interested in measuring the individualization of candidates in the election "
        "campaign.\n"
        "\n"
        "Assess the image and provide the following information:\n"
        "\n"
        "1. How many people are in the focus of the image? Select the right choice: "
        "'GPT Count': [\"0\", \"1\", \"2\", \"3+\"]\n"
        "2. Is there a crowd of spectators visible? Select the right choice: "
        "'GPT Crowd': [\"True\", \"False\"]\n"
        "\n"
        "Respond in valid JSON only.\n";
    return t;
}

namespace detail {

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
}

// A residual {UPPERCASE} token after substitution means the template uses
// a placeholder this renderer does not know.
inline std::optional<std::string> find_placeholder(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < s.size() && ((s[j] >= 'A' && s[j] <= 'Z') || s[j] == '_')) ++j;
        if (j > i + 1 && j < s.size() && s[j] == '}')
            return s.substr(i, j - i + 1);
    }
    return std::nullopt;
}

} // namespace detail

inline std::string render_prompt(const prompt_template& t, const std::string& name,
                                 const std::string& party) {
    if (name.empty()) throw input_error("render_prompt: name must not be empty");
    if (t.body.find("{PARTY}") != std::string::npos && party.empty())
        throw input_error("render_prompt: template uses {PARTY} but party is empty");
    std::string out = t.body;
    detail::replace_all(out, "{NAME}", name);
    detail::replace_all(out, "{PARTY}", party);
    if (auto leftover = detail::find_placeholder(out))
        throw input_error("render_prompt: unresolved placeholder " + *leftover +
                          " in template " + t.version);
    return out;
}

// --- response parsing ------------------------------------------------------

// Finds the first parseable JSON object embedded in free text. Tracks
// string/escape state while bracket matching, so braces inside string
// values do not confuse it; code fences around the object fall out of the
// scan naturally.
inline std::optional<json> extract_first_json_object(const std::string& raw) {
    for (std::size_t start = 0; start < raw.size(); ++start) {
        if (raw[start] != '{') continue;
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    json parsed = json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
                    break; // balanced but unparseable; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

inline bool looks_like_refusal(const std::string& raw) {
    static const char* markers[] = {"cannot identify", "can't identify", "unable to identify",
                                    "cannot assist", "not able to identify"};
    std::string lower;
    lower.reserve(raw.size());
    for (char c : raw) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (const char* m : markers)
        if (lower.find(m) != std::string::npos) return true;
    return false;
}

inline constexpr const char* parse_failure_label = "parse-failure";

struct presence_parse {
    std::string value; // "True" | "False" | "Unsure" | "parse-failure"
    std::string comment;
    bool refusal = false;
};

// Total: every input yields exactly one of the four outcomes. Refusal
// prose without JSON counts as Unsure (the model declined to verify, which
// is a failed identification, not a parse bug).
inline presence_parse parse_presence(const std::string& raw) {
    presence_parse out;
    if (auto obj = extract_first_json_object(raw)) {
        if (obj->contains("comment") && (*obj)["comment"].is_string())
            out.comment = (*obj)["comment"].get<std::string>();
        if (obj->contains("pictures_candidate") && (*obj)["pictures_candidate"].is_string()) {
            const std::string v = (*obj)["pictures_candidate"].get<std::string>();
            if (v == "True" || v == "False" || v == "Unsure") {
                out.value = v;
                return out;
            }
        }
        out.value = parse_failure_label;
        return out;
    }
    if (looks_like_refusal(raw)) {
        out.value = "Unsure";
        out.refusal = true;
        return out;
    }
    out.value = parse_failure_label;
    return out;
}

struct count_parse {
    std::string value; // "0" | "1" | "2" | "3+" | "parse-failure"
    std::string crowd; // "True" | "False" | "" when absent
};

inline count_parse parse_count(const std::string& raw) {
    count_parse out;
    out.value = parse_failure_label;
    auto obj = extract_first_json_object(raw);
    if (!obj) return out;
    if (obj->contains("GPT Count") && (*obj)["GPT Count"].is_string()) {
        const std::string v = (*obj)["GPT Count"].get<std::string>();
        if (v == "0" || v == "1" || v == "2" || v == "3+") out.value = v;
    }
    if (obj->contains("GPT Crowd") && (*obj)["GPT Crowd"].is_string()) {
        const std::string v = (*obj)["GPT Crowd"].get<std::string>();
        if (v == "True" || v == "False") out.crowd = v;
    }
    return out;
}

// --- request plumbing ------------------------------------------------------

struct request_params {
    std::string model_id = "gpt-4o-2024-05-13";
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 600;
};

struct llm_endpoint {
    std::string base_url; // e.g. "http://127.0.0.1:8089"
    std::string api_key;  // sent as a bearer token when non-empty
    int max_retries = 3;  // additional attempts after the first
    int concurrency = 4;
    int backoff_initial_ms = 250; // doubles per retry; tests shrink this
    int timeout_seconds = 60;
};

inline std::string base64_encode(std::string_view data) {
    static const char alphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        const std::uint32_t v = (static_cast<unsigned char>(data[i]) << 16) |
                                (static_cast<unsigned char>(data[i + 1]) << 8) |
                                static_cast<unsigned char>(data[i + 2]);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
    }
    if (i < data.size()) {
        std::uint32_t v = static_cast<unsigned char>(data[i]) << 16;
        if (i + 1 < data.size()) v |= static_cast<unsigned char>(data[i + 1]) << 8;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(i + 1 < data.size() ? alphabet[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

inline json chat_request_body(const std::string& prompt, const std::string& image_bytes,
                              const request_params& params) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", prompt}});
    content.push_back({{"type", "image_url"},
                       {"image_url",
                        {{"url", "data:image/jpeg;base64," + base64_encode(image_bytes)}}}});
    return json{{"model", params.model_id},
                {"temperature", params.temperature},
                {"top_p", params.top_p},
                {"max_tokens", params.max_tokens},
                {"messages", json::array({json{{"role", "user"}, {"content", content}}})}};
}

// File-backed response cache. The key covers everything that identifies a
// request (image, task, template version, model), so a populated cache
// makes re-runs idempotent with zero network traffic. Writes go through
// one mutex; a parse failure is still a served response and is cached,
// a transport failure is not.
class response_cache {
public:
    explicit response_cache(std::string directory) : dir_(std::move(directory)) {
        std::filesystem::create_directories(dir_);
    }

    static std::string key(const std::string& image_id, task_kind task,
                           const std::string& template_version, const std::string& model_id) {
        const std::string material = image_id + "\x1f" + to_string(task) + "\x1f" +
                                     template_version + "\x1f" + model_id;
        return fnv1a64_hex(material);
    }

    std::optional<json> lookup(const std::string& key) const {
        const auto path = std::filesystem::path(dir_) / (key + ".json");
        std::lock_guard<std::mutex> lock(mutex_);
        std::ifstream in(path);
        if (!in) return std::nullopt;
        json entry = json::parse(in, nullptr, false);
        if (entry.is_discarded()) return std::nullopt;
        return entry;
    }

    void store(const std::string& key, const json& entry) {
        const auto path = std::filesystem::path(dir_) / (key + ".json");
        std::lock_guard<std::mutex> lock(mutex_);
        write_file_atomic(path.string(), entry.dump(2) + "\n");
    }

    const std::string& directory() const { return dir_; }

private:
    std::string dir_;
    mutable std::mutex mutex_;
};

struct annotation_request {
    std::string image_id;
    std::string image_bytes; // raw file content
    std::string name;        // {NAME}
    std::string party;       // {PARTY}
};

struct annotation_outcome {
    prediction_record record;
    int retries = 0;
    bool from_cache = false;
    bool refusal = false;
    bool transport_failed = false;
    std::string error; // transport detail when transport_failed
};

inline constexpr const char* transport_failure_label = "transport-failure";

namespace detail {

struct http_reply {
    int status = 0;
    std::string body;
    int retries = 0;
};

inline bool retryable_status(int status) {
    return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

// POSTs one chat request, retrying transport errors and retryable HTTP
// statuses with exponential backoff. Throws transport_error once the
// attempt budget is spent.
inline http_reply post_chat(httplib::Client& client, const llm_endpoint& endpoint,
                            const json& body) {
    httplib::Headers headers;
    if (!endpoint.api_key.empty())
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    const std::string payload = body.dump();

    http_reply reply;
    std::string last_error;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        if (attempt > 0) {
            reply.retries = attempt;
            std::this_thread::sleep_for(std::chrono::milliseconds(
                static_cast<long long>(endpoint.backoff_initial_ms) << (attempt - 1)));
        }
        auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (retryable_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
            continue;
        }
        if (res->status != 200)
            throw transport_error("HTTP " + std::to_string(res->status) + ": " + res->body);
        reply.status = res->status;
        reply.body = res->body;
        return reply;
    }
    throw transport_error("gave up after " + std::to_string(endpoint.max_retries + 1) +
                          " attempts: " + last_error);
}

inline std::string completion_text(const std::string& response_body) {
    json resp = json::parse(response_body, nullptr, false);
    if (resp.is_discarded() || !resp.contains("choices") || !resp["choices"].is_array() ||
        resp["choices"].empty())
        return "";
    const json& msg = resp["choices"][0];
    if (msg.contains("message") && msg["message"].contains("content") &&
        msg["message"]["content"].is_string())
        return msg["message"]["content"].get<std::string>();
    return "";
}

inline annotation_outcome outcome_from_response(const annotation_request& req,
                                                const prompt_template& tmpl,
                                                const request_params& params,
                                                const std::string& raw) {
    annotation_outcome out;
    out.record.unit_id = req.image_id;
    out.record.model_id = params.model_id;
    out.record.task = tmpl.task;
    out.record.raw_response = raw;
    if (tmpl.task == task_kind::candidate_presence) {
        const presence_parse p = parse_presence(raw);
        out.record.label = p.value;
        out.refusal = p.refusal;
        if (!p.comment.empty()) out.record.comment = p.comment;
        if (p.refusal) out.record.extras["refusal"] = true;
    } else {
        const count_parse p = parse_count(raw);
        out.record.label = p.value;
        if (!p.crowd.empty()) out.record.extras["crowd"] = p.crowd;
    }
    return out;
}

} // namespace detail

// Annotates every request, in input order, one record per input. Cached
// responses are reused without touching the network; fresh responses are
// fetched by a bounded pool of workers and cached. Transport failures that
// survive the retry budget become transport-failure records, never
// dropped rows.
inline std::vector<annotation_outcome> annotate_batch(
    std::span<const annotation_request> requests, const prompt_template& tmpl,
    const request_params& params, const llm_endpoint& endpoint, response_cache& cache) {
    if (tmpl.task == task_kind::face_identity)
        throw input_error("annotate_batch: no prompt template exists for face_identity");

    // Validate prompts up front so rendering cannot throw inside a worker.
    for (const auto& req : requests) render_prompt(tmpl, req.name, req.party);

    std::vector<annotation_outcome> outcomes(requests.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(endpoint.concurrency,
                                                  static_cast<int>(requests.size())));

    auto worker = [&]() {
        httplib::Client client(endpoint.base_url);
        client.set_connection_timeout(endpoint.timeout_seconds);
        client.set_read_timeout(endpoint.timeout_seconds);
        for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
            const annotation_request& req = requests[i];
            const std::string key =
                response_cache::key(req.image_id, tmpl.task, tmpl.version, params.model_id);
            if (auto cached = cache.lookup(key);
                cached && cached->contains("raw_response") &&
                (*cached)["raw_response"].is_string()) {
                outcomes[i] = detail::outcome_from_response(
                    req, tmpl, params, (*cached)["raw_response"].get<std::string>());
                outcomes[i].from_cache = true;
                continue;
            }
            try {
                const std::string prompt = render_prompt(tmpl, req.name, req.party);
                const json request_body = chat_request_body(prompt, req.image_bytes, params);
                detail::http_reply reply = detail::post_chat(client, endpoint, request_body);
                const std::string text = detail::completion_text(reply.body);
                outcomes[i] = detail::outcome_from_response(req, tmpl, params, text);
                outcomes[i].retries = reply.retries;
                cache.store(key, json{{"image_id", req.image_id},
                                      {"task", to_string(tmpl.task)},
                                      {"template_version", tmpl.version},
                                      {"model_id", params.model_id},
                                      {"raw_response", text},
                                      {"http_status", reply.status},
                                      {"retries", reply.retries}});
            } catch (const transport_error& e) {
                annotation_outcome& out = outcomes[i];
                out.record.unit_id = req.image_id;
                out.record.model_id = params.model_id;
                out.record.task = tmpl.task;
                out.record.label = transport_failure_label;
                out.transport_failed = true;
                out.error = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return outcomes;
}

} // namespace limelight
