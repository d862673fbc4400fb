#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace pmrel {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }

    double dot(const EmbeddingVector& other) const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
        return s;
    }

    double norm() const { return std::sqrt(dot(*this)); }
};

/// Raised when an embedding backend fails; carries the batch so the
/// caller can retry it.
class EmbeddingError : public std::runtime_error {
  public:
    EmbeddingError(const std::string& what, std::vector<std::string> batch)
        : std::runtime_error(what), batch_(std::move(batch)) {}
    const std::vector<std::string>& batch() const { return batch_; }

  private:
    std::vector<std::string> batch_;
};

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    // One vector per input text, same order, identical dimension.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

/// Deterministic hashed term-frequency embedder: lowercase alnum
/// tokens hashed into a fixed number of buckets, L2-normalized.
/// Identical text yields identical vectors on every platform.
class HashedTfProvider : public EmbeddingProvider {
  public:
    explicit HashedTfProvider(std::size_t dimension = 512) : dimension_(dimension) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& text : texts) out.push_back(embed_one(text));
        return out;
    }

    EmbeddingVector embed_one(const std::string& text) const {
        EmbeddingVector v;
        v.values.assign(dimension_, 0.0);
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            v.values[detail::fnv1a64(token) % dimension_] += 1.0;
            token.clear();
        };
        for (char raw : text) {
            unsigned char c = static_cast<unsigned char>(raw);
            if (std::isalnum(c)) token += static_cast<char>(std::tolower(c));
            else flush();
        }
        flush();
        double n = v.norm();
        if (n > 0.0)
            for (auto& x : v.values) x /= n;
        return v;
    }

  private:
    std::size_t dimension_;
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

}  // namespace pmrel
