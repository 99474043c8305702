#pragma once

// Content-addressed on-disk response cache and provider decorators that
// consult it before touching the backend.

#include <harcap/crypto.hpp>
#include <harcap/dataset.hpp>
#include <harcap/providers.hpp>

#include <chrono>
#include <memory>
#include <optional>

namespace harcap {

struct CacheEntry {
    std::string key;
    std::string value;
    std::int64_t created_at = 0;  // unix seconds
};

/// Files live at <dir>/<key[0:2]>/<key>.json. Writes are atomic renames, so
/// concurrent writers of one key leave one complete, identical value.
class ResponseCache {
public:
    explicit ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const { return dir_; }

    std::optional<CacheEntry> get(const std::string& key) const {
        auto p = path_for(key);
        std::error_code ec;
        if (!fs::exists(p, ec)) return std::nullopt;
        json j;
        try {
            j = json::parse(read_file(p));
        } catch (const json::exception& e) {
            throw IoError("corrupt cache entry " + p.string() + ": " + e.what());
        }
        return CacheEntry{j.at("key").get<std::string>(), j.at("value").get<std::string>(),
                          j.value("created_at", std::int64_t{0})};
    }

    void put(const std::string& key, const std::string& value) const {
        auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
        ordered_json j;
        j["key"] = key;
        j["value"] = value;
        j["created_at"] = now;
        try {
            write_file_atomic(path_for(key), j.dump());
        } catch (const fs::filesystem_error& e) {
            throw IoError(std::string("cache write: ") + e.what());
        }
    }

private:
    fs::path path_for(const std::string& key) const {
        if (key.size() < 3) throw PreconditionViolation("cache key too short");
        return dir_ / key.substr(0, 2) / (key + ".json");
    }

    fs::path dir_;
};

class CachingChat : public ChatProvider {
public:
    CachingChat(std::shared_ptr<ChatProvider> inner, std::shared_ptr<const ResponseCache> cache)
        : inner_(std::move(inner)), cache_(std::move(cache)) {}

    std::string kind() const override { return inner_->kind(); }
    std::size_t backend_calls() const override { return inner_->backend_calls(); }

    static std::string key_for(std::string_view kind, std::span<const ChatMessage> messages,
                               const ChatParams& params) {
        return Sha256Builder()
            .field("chat")
            .field(kind)
            .field(params.model_id)
            .field(chat_request_json(messages, params).dump())
            .hex();
    }

protected:
    std::string complete(std::span<const ChatMessage> messages, const ChatParams& params) override {
        auto key = key_for(inner_->kind(), messages, params);
        if (auto hit = cache_->get(key)) return hit->value;
        auto value = inner_->chat_complete(messages, params);
        cache_->put(key, value);
        return value;
    }

private:
    std::shared_ptr<ChatProvider> inner_;
    std::shared_ptr<const ResponseCache> cache_;
};

/// Caches per text, so batch composition never affects hit rates.
class CachingTextEmbedder : public TextEmbedder {
public:
    CachingTextEmbedder(std::shared_ptr<TextEmbedder> inner,
                        std::shared_ptr<const ResponseCache> cache)
        : inner_(std::move(inner)), cache_(std::move(cache)) {}

    std::string model_id() const override { return inner_->model_id(); }
    std::size_t backend_calls() const override { return inner_->backend_calls(); }

protected:
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
        std::vector<EmbeddingVector> out(texts.size());
        std::vector<std::string> missing;
        std::vector<std::size_t> missing_at;
        std::vector<std::string> keys;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            keys.push_back(
                Sha256Builder().field("embed_text").field(inner_->model_id()).field(texts[i]).hex());
            if (auto hit = cache_->get(keys.back())) {
                out[i] = {json::parse(hit->value).get<std::vector<double>>(), inner_->model_id()};
            } else {
                missing.push_back(texts[i]);
                missing_at.push_back(i);
            }
        }
        if (!missing.empty()) {
            auto fresh = inner_->embed_text(missing);
            for (std::size_t j = 0; j < missing.size(); ++j) {
                cache_->put(keys[missing_at[j]], json(fresh[j].values).dump());
                out[missing_at[j]] = std::move(fresh[j]);
            }
        }
        return out;
    }

private:
    std::shared_ptr<TextEmbedder> inner_;
    std::shared_ptr<const ResponseCache> cache_;
};

class CachingTokenEmbedder : public TokenEmbedder {
public:
    CachingTokenEmbedder(std::shared_ptr<TokenEmbedder> inner,
                         std::shared_ptr<const ResponseCache> cache)
        : inner_(std::move(inner)), cache_(std::move(cache)) {}

    std::string model_id() const override { return inner_->model_id(); }
    std::size_t backend_calls() const override { return inner_->backend_calls(); }

protected:
    TokenEmbeddings embed_tokens_impl(const std::string& text) override {
        auto key = Sha256Builder().field("embed_tokens").field(inner_->model_id()).field(text).hex();
        if (auto hit = cache_->get(key)) {
            auto j = json::parse(hit->value);
            TokenEmbeddings out;
            out.tokens = j.at("tokens").get<std::vector<std::string>>();
            for (auto& v : j.at("vectors")) {
                out.vectors.push_back({v.get<std::vector<double>>(), inner_->model_id()});
            }
            return out;
        }
        auto fresh = inner_->embed_tokens(text);
        json vectors = json::array();
        for (const auto& v : fresh.vectors) vectors.push_back(v.values);
        cache_->put(key, json{{"tokens", fresh.tokens}, {"vectors", vectors}}.dump());
        return fresh;
    }

private:
    std::shared_ptr<TokenEmbedder> inner_;
    std::shared_ptr<const ResponseCache> cache_;
};

}  // namespace harcap
