#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pmrel/embedding.hpp"
#include "pmrel/transduction.hpp"

namespace pmrel {

namespace detail {

inline std::string env_or_empty(const std::string& name) {
    if (name.empty()) return {};
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

}  // namespace detail

/// JSON-over-HTTP embedding backend. Request {model, inputs: [text]},
/// response {vectors: [[real]]}. Credentials come from the named
/// environment variable and never touch artifacts.
class HttpEmbeddingProvider : public EmbeddingProvider {
  public:
    HttpEmbeddingProvider(std::string base_url, std::string path, std::string model,
                          std::string api_key_env)
        : base_url_(std::move(base_url)), path_(std::move(path)), model_(std::move(model)),
          api_key_env_(std::move(api_key_env)) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        httplib::Client client(base_url_);
        client.set_read_timeout(60);
        nlohmann::json body{{"model", model_}, {"inputs", texts}};
        httplib::Headers headers;
        std::string key = detail::env_or_empty(api_key_env_);
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res || res->status != 200)
            throw EmbeddingError("embedding endpoint failed: " +
                                     (res ? "HTTP " + std::to_string(res->status) : "no response"),
                                 texts);
        try {
            nlohmann::json j = nlohmann::json::parse(res->body);
            std::vector<EmbeddingVector> out;
            for (const auto& vec : j.at("vectors"))
                out.push_back(EmbeddingVector{vec.get<std::vector<double>>()});
            if (out.size() != texts.size())
                throw std::runtime_error("vector count mismatch");
            return out;
        } catch (const std::exception& e) {
            throw EmbeddingError(std::string("embedding endpoint returned bad payload: ") + e.what(),
                                 texts);
        }
    }

  private:
    std::string base_url_;
    std::string path_;
    std::string model_;
    std::string api_key_env_;
};

/// JSON-over-HTTP chat-completion gateway. Request {model,
/// temperature, messages: [{role, content}]}, response {content}.
class HttpChatGateway : public ChatGateway {
  public:
    HttpChatGateway(std::string base_url, std::string path, std::string api_key_env)
        : base_url_(std::move(base_url)), path_(std::move(path)), api_key_env_(std::move(api_key_env)) {}

    std::string complete(const ChatRequest& request) override {
        httplib::Client client(base_url_);
        client.set_read_timeout(120);
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& m : request.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        nlohmann::json body{{"model", request.model},
                            {"temperature", request.temperature},
                            {"messages", messages}};
        httplib::Headers headers;
        std::string key = detail::env_or_empty(api_key_env_);
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res || res->status != 200)
            throw std::runtime_error("chat gateway failed: " +
                                     (res ? "HTTP " + std::to_string(res->status) : "no response"));
        nlohmann::json j = nlohmann::json::parse(res->body);
        return j.at("content").get<std::string>();
    }

  private:
    std::string base_url_;
    std::string path_;
    std::string api_key_env_;
};

}  // namespace pmrel
