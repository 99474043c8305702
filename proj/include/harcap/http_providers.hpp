#pragma once

// Live providers speaking the chat-completions / embeddings JSON protocol.

#include <harcap/providers.hpp>

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <thread>

namespace harcap {

struct Endpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string api_key;   // bearer token; empty means no Authorization header
    std::chrono::milliseconds timeout{60000};
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
};

inline std::string api_key_from_env() {
    const char* v = std::getenv("HARCAP_API_KEY");
    return v ? std::string(v) : std::string();
}

namespace detail {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

inline ParsedUrl parse_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url lacks scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl p;
    p.origin = url.substr(0, path_start);
    p.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!p.prefix.empty() && p.prefix.back() == '/') p.prefix.pop_back();
    return p;
}

/// POSTs JSON with bounded concurrency and retry on transient failures
/// (connection errors, 429, 5xx).
class JsonPoster {
public:
    JsonPoster(Endpoint ep, RetryPolicy retry, std::size_t max_in_flight)
        : ep_(std::move(ep)), url_(parse_base_url(ep_.base_url)), retry_(retry),
          slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, max_in_flight))) {}

    json post(const std::string& path, const std::string& body) {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};

        std::string last_error;
        for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(retry_.base_delay * (1 << (attempt - 1)));
            httplib::Client cli(url_.origin);
            auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep_.timeout).count();
            cli.set_connection_timeout(static_cast<time_t>(std::max<long>(1, secs)));
            cli.set_read_timeout(static_cast<time_t>(std::max<long>(1, secs)));
            httplib::Headers headers;
            if (!ep_.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep_.api_key);
            auto res = cli.Post(url_.prefix + path, headers, body, "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body);
            }
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw BackendError(std::string("unparseable response body: ") + e.what());
            }
        }
        throw TransportError("POST " + path + " failed after " +
                             std::to_string(retry_.max_attempts) + " attempts (" + last_error + ")");
    }

private:
    Endpoint ep_;
    ParsedUrl url_;
    RetryPolicy retry_;
    std::counting_semaphore<> slots_;
};

inline std::vector<std::vector<double>> parse_embedding_response(const json& j,
                                                                 std::size_t expected) {
    if (!j.contains("data") || !j["data"].is_array()) {
        throw BackendError("embeddings response lacks 'data'");
    }
    std::vector<std::vector<double>> out(expected);
    std::size_t pos = 0;
    for (const auto& item : j["data"]) {
        std::size_t idx = item.contains("index") ? item["index"].get<std::size_t>() : pos;
        if (idx >= expected) throw BackendError("embeddings response index out of range");
        out[idx] = item.at("embedding").get<std::vector<double>>();
        ++pos;
    }
    if (pos != expected) throw BackendError("embeddings response has wrong item count");
    for (const auto& v : out) {
        for (double x : v) {
            if (!std::isfinite(x)) throw BackendError("non-finite embedding value");
        }
    }
    return out;
}

}  // namespace detail

class HttpChat : public ChatProvider {
public:
    HttpChat(Endpoint ep, RetryPolicy retry = {}, std::size_t max_in_flight = 4)
        : poster_(std::move(ep), retry, max_in_flight) {}

    std::string kind() const override { return "http-chat"; }

protected:
    std::string complete(std::span<const ChatMessage> messages, const ChatParams& params) override {
        count_call();
        auto body = chat_request_json(messages, params).dump();
        auto j = poster_.post("/v1/chat/completions", body);
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
            throw EmptyResponse("chat response has no choices");
        }
        const auto& msg = j["choices"][0].value("message", json::object());
        std::string text;
        if (msg.contains("content") && msg["content"].is_string()) {
            text = msg["content"].get<std::string>();
        } else if (msg.contains("content") && msg["content"].is_array()) {
            for (const auto& part : msg["content"]) {
                if (part.value("type", "") == "text") text += part.value("text", "");
            }
        }
        if (trim(text).empty()) throw EmptyResponse("chat response content is empty");
        return text;
    }

private:
    detail::JsonPoster poster_;
};

class HttpEmbedder : public TextEmbedder {
public:
    HttpEmbedder(Endpoint ep, std::string model_id, RetryPolicy retry = {},
                 std::size_t max_in_flight = 4)
        : poster_(std::move(ep), retry, max_in_flight), model_id_(std::move(model_id)) {}

    std::string model_id() const override { return model_id_; }

protected:
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
        count_call();
        json body{{"model", model_id_}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
        auto vecs = detail::parse_embedding_response(poster_.post("/v1/embeddings", body.dump()),
                                                     texts.size());
        std::vector<EmbeddingVector> out;
        for (auto& v : vecs) out.push_back({std::move(v), model_id_});
        return out;
    }

private:
    detail::JsonPoster poster_;
    std::string model_id_;
};

/// Token-level embeddings over the plain embeddings endpoint: the text is
/// split into word tokens and each token is embedded with its own request.
class HttpTokenEmbedder : public TokenEmbedder {
public:
    HttpTokenEmbedder(Endpoint ep, std::string model_id, RetryPolicy retry = {},
                      std::size_t max_in_flight = 4)
        : poster_(std::move(ep), retry, max_in_flight), model_id_(std::move(model_id)) {}

    std::string model_id() const override { return model_id_; }

protected:
    TokenEmbeddings embed_tokens_impl(const std::string& text) override {
        TokenEmbeddings out;
        out.tokens = plain_tokens(text);
        std::size_t dim = 0;
        for (const auto& tok : out.tokens) {
            count_call();
            json body{{"model", model_id_}, {"input", std::vector<std::string>{tok}}};
            auto vecs = detail::parse_embedding_response(
                poster_.post("/v1/embeddings", body.dump()), 1);
            if (dim != 0 && vecs[0].size() != dim) {
                throw DimensionDrift("token embedding dimension changed from " +
                                     std::to_string(dim) + " to " + std::to_string(vecs[0].size()));
            }
            dim = vecs[0].size();
            out.vectors.push_back({std::move(vecs[0]), model_id_});
        }
        return out;
    }

private:
    detail::JsonPoster poster_;
    std::string model_id_;
};

}  // namespace harcap
