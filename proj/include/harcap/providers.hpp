#pragma once

// Model-service interfaces (chat-vision completion, sentence embedding,
// token embedding) and their deterministic offline mocks. Live HTTP
// implementations live in http_providers.hpp.

#include <harcap/crypto.hpp>
#include <harcap/dataset.hpp>
#include <harcap/error.hpp>
#include <harcap/rng.hpp>
#include <harcap/text.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace harcap {

enum class Role { system, user };

inline std::string_view to_string(Role r) { return r == Role::system ? "system" : "user"; }

struct ImagePayload {
    std::string bytes;
    std::string media_type = "image/png";
};

using ContentPart = std::variant<std::string, ImagePayload>;

struct ChatMessage {
    Role role = Role::user;
    std::vector<ContentPart> parts;

    static ChatMessage system(std::string text) { return {Role::system, {std::move(text)}}; }

    /// Concatenated text parts.
    std::string text() const {
        std::string out;
        for (const auto& p : parts) {
            if (const auto* s = std::get_if<std::string>(&p)) {
                if (!out.empty()) out += "\n";
                out += *s;
            }
        }
        return out;
    }

    std::size_t image_count() const {
        std::size_t n = 0;
        for (const auto& p : parts) n += std::holds_alternative<ImagePayload>(p) ? 1 : 0;
        return n;
    }
};

struct ChatParams {
    std::string model_id = "mock";
    int max_tokens = 256;
    double temperature = 0.0;
};

/// Chat-completions request body. Also the canonical form hashed for cache keys.
inline ordered_json chat_request_json(std::span<const ChatMessage> messages,
                                      const ChatParams& params) {
    ordered_json msgs = ordered_json::array();
    for (const auto& m : messages) {
        ordered_json content = ordered_json::array();
        for (const auto& part : m.parts) {
            if (const auto* s = std::get_if<std::string>(&part)) {
                content.push_back({{"type", "text"}, {"text", *s}});
            } else {
                const auto& img = std::get<ImagePayload>(part);
                content.push_back(
                    {{"type", "image_url"},
                     {"image_url",
                      {{"url", "data:" + img.media_type + ";base64," + base64_encode(img.bytes)}}}});
            }
        }
        msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", std::move(content)}});
    }
    ordered_json j;
    j["model"] = params.model_id;
    j["messages"] = std::move(msgs);
    j["max_tokens"] = params.max_tokens;
    j["temperature"] = params.temperature;
    return j;
}

struct EmbeddingVector {
    std::vector<double> values;
    std::string model_id;

    std::size_t dimension() const { return values.size(); }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }
};

struct TokenEmbeddings {
    std::vector<std::string> tokens;
    std::vector<EmbeddingVector> vectors;
};

// ---------------------------------------------------------------------------
// Interfaces

class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    /// Validates the request, then dispatches to the backend.
    std::string chat_complete(std::span<const ChatMessage> messages, const ChatParams& params) {
        if (messages.empty()) throw PreconditionViolation("chat_complete: no messages");
        for (const auto& m : messages) {
            if (m.parts.empty()) throw PreconditionViolation("chat_complete: message without parts");
            for (const auto& p : m.parts) {
                if (const auto* img = std::get_if<ImagePayload>(&p); img && img->bytes.empty()) {
                    throw PreconditionViolation("chat_complete: empty image payload");
                }
            }
        }
        return complete(messages, params);
    }

    /// Requests that actually reached the backend (cache hits excluded).
    virtual std::size_t backend_calls() const { return calls_.load(); }

    virtual std::string kind() const = 0;

protected:
    virtual std::string complete(std::span<const ChatMessage> messages,
                                 const ChatParams& params) = 0;
    void count_call() { ++calls_; }

private:
    std::atomic<std::size_t> calls_{0};
};

class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;

    std::vector<EmbeddingVector> embed_text(std::span<const std::string> texts) {
        if (texts.empty()) throw PreconditionViolation("embed_text: no texts");
        for (const auto& t : texts) {
            if (t.empty()) throw PreconditionViolation("embed_text: empty text");
        }
        auto out = embed(texts);
        if (out.size() != texts.size()) {
            throw BackendError("embed_text: backend returned " + std::to_string(out.size()) +
                               " vectors for " + std::to_string(texts.size()) + " texts");
        }
        for (const auto& v : out) check_dimension(v.dimension());
        return out;
    }

    virtual std::size_t backend_calls() const { return calls_.load(); }
    virtual std::string model_id() const = 0;

protected:
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
    void count_call() { ++calls_; }

    void check_dimension(std::size_t dim) {
        if (dim == 0) throw DimensionDrift("embedding with zero dimension");
        std::size_t expected = 0;
        if (!dim_.compare_exchange_strong(expected, dim) && expected != dim) {
            throw DimensionDrift("embedding dimension changed from " + std::to_string(expected) +
                                 " to " + std::to_string(dim));
        }
    }

private:
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> dim_{0};
};

class TokenEmbedder {
public:
    virtual ~TokenEmbedder() = default;

    TokenEmbeddings embed_tokens(const std::string& text) {
        if (text.empty()) throw PreconditionViolation("embed_tokens: empty text");
        auto out = embed_tokens_impl(text);
        if (out.tokens.size() != out.vectors.size()) {
            throw BackendError("embed_tokens: token/vector count mismatch");
        }
        return out;
    }

    virtual std::size_t backend_calls() const { return calls_.load(); }
    virtual std::string model_id() const = 0;

protected:
    virtual TokenEmbeddings embed_tokens_impl(const std::string& text) = 0;
    void count_call() { ++calls_; }

private:
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Mocks

/// Sequential scripted chat: each call returns the next response of the
/// active script; the last response repeats once the script runs out.
class ScriptedChat : public ChatProvider {
public:
    explicit ScriptedChat(std::vector<std::string> responses)
        : ScriptedChat(std::map<std::string, std::vector<std::string>>{{"default", std::move(responses)}},
                       "default") {}

    ScriptedChat(std::map<std::string, std::vector<std::string>> scripts, std::string active)
        : scripts_(std::move(scripts)), active_(std::move(active)) {
        if (!scripts_.count(active_) || scripts_.at(active_).empty()) {
            throw PreconditionViolation("ScriptedChat: unknown or empty script '" + active_ + "'");
        }
    }

    void select(const std::string& key) {
        std::lock_guard lock(mu_);
        if (!scripts_.count(key) || scripts_.at(key).empty()) {
            throw PreconditionViolation("ScriptedChat: unknown or empty script '" + key + "'");
        }
        active_ = key;
        index_ = 0;
    }

    /// Every request seen, in call order.
    std::vector<std::vector<ChatMessage>> requests() const {
        std::lock_guard lock(mu_);
        return requests_;
    }

    std::string kind() const override { return "scripted"; }

protected:
    std::string complete(std::span<const ChatMessage> messages, const ChatParams&) override {
        std::lock_guard lock(mu_);
        count_call();
        requests_.emplace_back(messages.begin(), messages.end());
        const auto& script = scripts_.at(active_);
        const auto& r = script[std::min(index_, script.size() - 1)];
        ++index_;
        if (r.empty()) throw EmptyResponse("scripted empty response");
        return r;
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::vector<std::string>> scripts_;
    std::string active_;
    std::size_t index_ = 0;
    std::vector<std::vector<ChatMessage>> requests_;
};

struct FixtureChatOptions {
    /// Substring marking the refine prompt; the first (initial) attempt misses
    /// when `miss_first` is set.
    std::string refine_marker = "MUST";
    bool miss_first = true;
    /// Labels whose captions never contain a keyword.
    std::set<std::string> off_topic_labels;
    /// Artificial per-call delay.
    std::chrono::milliseconds latency{0};
};

/// Request-driven pipeline mock; every answer is a pure function of the
/// request, so concurrency and caching cannot change results.
///  - judge requests (system text mentions "True or False"): "True" when the
///    two quoted captions share a content token, else "False";
///  - caption-generation requests (mention a lexicon label): a caption built
///    from that label's keywords, or an off-topic sentence;
///  - anything else is a candidate request: the activity is picked from a
///    digest of the image bytes and model id.
class FixtureChat : public ChatProvider {
public:
    FixtureChat(KeywordLexicon lexicon, FixtureChatOptions options = {})
        : lexicon_(std::move(lexicon)), opts_(std::move(options)) {}

    std::string kind() const override { return "fixture"; }

    static constexpr std::string_view kOffTopic = "A person stands still in the room.";

protected:
    std::string complete(std::span<const ChatMessage> messages, const ChatParams& params) override {
        count_call();
        if (opts_.latency.count() > 0) std::this_thread::sleep_for(opts_.latency);
        std::string system_text, user_text, image_digest_input;
        for (const auto& m : messages) {
            (m.role == Role::system ? system_text : user_text) += m.text() + "\n";
            for (const auto& p : m.parts) {
                if (const auto* img = std::get_if<ImagePayload>(&p)) image_digest_input += img->bytes;
            }
        }
        if (system_text.find("True or False") != std::string::npos) return judge(user_text);

        if (auto label = find_label(user_text)) {
            if (opts_.off_topic_labels.count(*label)) return std::string(kOffTopic);
            bool refine = user_text.find(opts_.refine_marker) != std::string::npos;
            if (opts_.miss_first && !refine) return std::string(kOffTopic);
            const auto& kws = lexicon_.at(*label);
            return "The person is doing " + kws.front() + " work near the " +
                   kws[kws.size() / 2] + ".";
        }

        if (lexicon_.entries.empty()) return std::string(kOffTopic);
        auto h = fnv1a64(params.model_id + "\x1f" + image_digest_input);
        auto it = lexicon_.entries.begin();
        std::advance(it, static_cast<long>(h % lexicon_.entries.size()));
        const auto& kws = it->second;
        const auto a = splitmix64(h);
        return "Someone seems to " + kws[a % kws.size()] + " beside a " +
               kws[splitmix64(a) % kws.size()] + ".";
    }

private:
    std::optional<std::string> find_label(const std::string& text) const {
        std::optional<std::string> best;
        for (const auto& [label, _] : lexicon_.entries) {
            if (text.find(label) != std::string::npos && (!best || label.size() > best->size())) {
                best = label;
            }
        }
        return best;
    }

    // Captions appear as the first two double-quoted spans of the judge prompt.
    static std::string judge(const std::string& user_text) {
        std::vector<std::string> quoted;
        std::size_t pos = 0;
        while (quoted.size() < 2) {
            auto a = user_text.find('"', pos);
            if (a == std::string::npos) break;
            auto b = user_text.find('"', a + 1);
            if (b == std::string::npos) break;
            quoted.push_back(user_text.substr(a + 1, b - a - 1));
            pos = b + 1;
        }
        if (quoted.size() < 2) return "False";
        static const std::set<std::string> stop{"the", "person", "is", "a", "an", "in",
                                                "of", "on", "at", "to", "and", "room", "near", "someone",
                                                "seem", "beside", "doing", "work", "stand", "still"};
        std::set<std::string> lhs;
        for (auto& t : normalize_tokens(quoted[0])) {
            if (!stop.count(t)) lhs.insert(t);
        }
        for (auto& t : normalize_tokens(quoted[1])) {
            if (lhs.count(t)) return "True";
        }
        return "False";
    }

    KeywordLexicon lexicon_;
    FixtureChatOptions opts_;
};

namespace detail {

// Deterministic unit vector seeded by a string.
inline std::vector<double> hashed_unit_vector(std::string_view key, std::size_t dim) {
    const CounterRng rng(fnv1a64(key));
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        // Box-Muller on two draws; keeps directions isotropic.
        double u1 = std::max(rng.uniform(2 * i), 1e-300);
        double u2 = rng.uniform(2 * i + 1);
        v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
}

}  // namespace detail

/// Offline embedder: one hash-seeded unit vector per normalized token;
/// sentence vectors are the normalized sum of their token vectors.
class HashEmbedder : public TextEmbedder, public TokenEmbedder {
public:
    explicit HashEmbedder(std::size_t dimension = 384, std::string model_id = "mock-hash-384")
        : dim_(dimension), model_id_(std::move(model_id)) {
        if (dim_ == 0) throw PreconditionViolation("HashEmbedder: zero dimension");
    }

    std::string model_id() const override { return model_id_; }

    std::size_t backend_calls() const override {
        return TextEmbedder::backend_calls() + TokenEmbedder::backend_calls();
    }

    EmbeddingVector token_vector(std::string_view token) const {
        return {detail::hashed_unit_vector(token, dim_), model_id_};
    }

protected:
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
        TextEmbedder::count_call();
        std::vector<EmbeddingVector> out;
        for (const auto& t : texts) out.push_back(sentence_vector(t));
        return out;
    }

    TokenEmbeddings embed_tokens_impl(const std::string& text) override {
        TokenEmbedder::count_call();
        TokenEmbeddings out;
        out.tokens = normalize_tokens(text);
        for (const auto& tok : out.tokens) out.vectors.push_back(token_vector(tok));
        return out;
    }

private:
    EmbeddingVector sentence_vector(const std::string& text) const {
        auto tokens = normalize_tokens(text);
        if (tokens.empty()) return {detail::hashed_unit_vector("\x01" + text, dim_), model_id_};
        std::vector<double> sum(dim_, 0.0);
        for (const auto& tok : tokens) {
            auto v = detail::hashed_unit_vector(tok, dim_);
            for (std::size_t i = 0; i < dim_; ++i) sum[i] += v[i];
        }
        double n = 0.0;
        for (double x : sum) n += x * x;
        n = std::sqrt(n);
        if (n == 0.0) return {detail::hashed_unit_vector("\x01" + text, dim_), model_id_};
        for (double& x : sum) x /= n;
        return {std::move(sum), model_id_};
    }

    std::size_t dim_;
    std::string model_id_;
};

}  // namespace harcap
