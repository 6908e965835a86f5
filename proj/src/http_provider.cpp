#include "summit/embed.hpp"
#include "summit/summarize.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <stdexcept>

namespace summit {

using nlohmann::json;

namespace {

std::string sanitize_id(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '.' || c == '-' || c == '_';
        out.push_back(ok ? c : '-');
    }
    return out;
}

/// Accepts the common completion response shapes without configuration:
/// choices[0].text, choices[0].message.content, then top-level text or
/// completion.
std::string extract_completion(const json& body) {
    if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
        const auto& choice = body["choices"][0];
        if (choice.contains("text") && choice["text"].is_string()) {
            return choice["text"].get<std::string>();
        }
        if (choice.contains("message") && choice["message"].is_object() &&
            choice["message"].contains("content") && choice["message"]["content"].is_string()) {
            return choice["message"]["content"].get<std::string>();
        }
    }
    for (const char* field : {"text", "completion"}) {
        if (body.contains(field) && body[field].is_string()) {
            return body[field].get<std::string>();
        }
    }
    throw std::runtime_error("completion response has no recognizable text field");
}

} // namespace

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw std::invalid_argument("http provider: base_url is required");
    }
    if (config_.model.empty()) {
        throw std::invalid_argument("http provider: model is required");
    }
}

std::string HttpProvider::id() const { return "http-" + sanitize_id(config_.model); }

std::string HttpProvider::complete(const CompletionContext& ctx) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key || !*key) {
            throw std::runtime_error("http provider: environment variable '" +
                                     config_.api_key_env + "' is not set");
        }
        std::string value = config_.auth_header == "Authorization"
                                ? "Bearer " + std::string(key)
                                : std::string(key);
        headers.emplace(config_.auth_header, std::move(value));
    }

    json request = {
        {"model", config_.model},
        {"prompt", ctx.prompt},
        {"temperature", config_.temperature},
        {"max_tokens", config_.max_tokens},
    };

    auto res = client.Post(config_.endpoint_path, headers, request.dump(), "application/json");
    if (!res) {
        throw std::runtime_error("http provider: transport error contacting " + config_.base_url +
                                 ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw std::runtime_error("http provider: HTTP " + std::to_string(res->status) + " from " +
                                 config_.endpoint_path);
    }
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("http provider: response is not JSON: ") + e.what());
    }
    return extract_completion(body);
}

namespace {

/// Accepts {data: [{embedding: [...]}, ...]} or {embeddings: [[...], ...]}.
std::vector<std::vector<float>> extract_embeddings(const json& body) {
    const json* rows = nullptr;
    bool wrapped = false;
    if (body.contains("data") && body["data"].is_array()) {
        rows = &body["data"];
        wrapped = true;
    } else if (body.contains("embeddings") && body["embeddings"].is_array()) {
        rows = &body["embeddings"];
    } else {
        throw std::runtime_error("embedding response has no data/embeddings array");
    }
    std::vector<std::vector<float>> out;
    out.reserve(rows->size());
    for (const auto& entry : *rows) {
        const json& vec = wrapped ? entry.at("embedding") : entry;
        if (!vec.is_array()) throw std::runtime_error("embedding entry is not an array");
        out.push_back(vec.get<std::vector<float>>());
    }
    return out;
}

} // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config)
    : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw std::invalid_argument("http embedding provider: base_url is required");
    }
    if (config_.model.empty()) {
        throw std::invalid_argument("http embedding provider: model is required");
    }
}

std::string HttpEmbeddingProvider::id() const { return "http-" + sanitize_id(config_.model); }

std::vector<std::vector<float>> HttpEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key || !*key) {
            throw std::runtime_error("http embedding provider: environment variable '" +
                                     config_.api_key_env + "' is not set");
        }
        std::string value = config_.auth_header == "Authorization"
                                ? "Bearer " + std::string(key)
                                : std::string(key);
        headers.emplace(config_.auth_header, std::move(value));
    }

    json request = {{"model", config_.model}, {"input", texts}};
    auto res = client.Post(config_.endpoint_path, headers, request.dump(), "application/json");
    if (!res) {
        throw std::runtime_error("http embedding provider: transport error contacting " +
                                 config_.base_url + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw std::runtime_error("http embedding provider: HTTP " + std::to_string(res->status) +
                                 " from " + config_.endpoint_path);
    }
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("http embedding provider: response is not JSON: ") +
                                 e.what());
    }
    auto rows = extract_embeddings(body);
    if (config_.dim != 0) {
        for (const auto& row : rows) {
            if (row.size() != config_.dim) {
                throw std::runtime_error("http embedding provider: expected dim " +
                                         std::to_string(config_.dim) + ", got " +
                                         std::to_string(row.size()));
            }
        }
    }
    return rows;
}

} // namespace summit
