#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "racg/remote.hpp"

namespace racg {

using Embedding = std::vector<double>;

enum class ProviderMode { remote, deterministic_local };

/// Maps text to fixed-length feature vectors. All public entry points reject
/// blank text and verify the output dimension and finiteness.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual ProviderMode mode() const = 0;

    Embedding embed(std::string_view text) const;
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) const;

protected:
    virtual std::vector<Embedding> do_embed(std::span<const std::string> texts) const = 0;
};

using EmbeddingProviderPtr = std::shared_ptr<const EmbeddingProvider>;

/// Offline stand-in for hosted embedding models: each token is hashed (with
/// a fixed seed) into one of `dim` buckets, counts are accumulated and the
/// result is L2-normalised. Text with no tokens maps to a single reserved
/// bucket so that every non-blank input has a unit vector.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::string name = "local", std::size_t dim = 256, std::uint64_t seed = 0);

    std::string name() const override { return name_; }
    std::size_t dim() const override { return dim_; }
    ProviderMode mode() const override { return ProviderMode::deterministic_local; }

    std::size_t bucket(std::string_view token) const;

protected:
    std::vector<Embedding> do_embed(std::span<const std::string> texts) const override;

private:
    std::string name_;
    std::size_t dim_;
    std::uint64_t seed_;
};

/// OpenAI-compatible POST {base_url}/embeddings client.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(std::string name, RemoteEndpoint endpoint, std::size_t dim, std::size_t batch_size = 64);

    std::string name() const override { return name_; }
    std::size_t dim() const override { return dim_; }
    ProviderMode mode() const override { return ProviderMode::remote; }

protected:
    std::vector<Embedding> do_embed(std::span<const std::string> texts) const override;

private:
    std::string name_;
    std::string model_;
    std::size_t dim_;
    std::size_t batch_size_;
    std::shared_ptr<JsonTransport> transport_;
};

/// Memoises another provider by exact text. Concurrent lookups share a lock;
/// inserts take it exclusively.
class CachingEmbedder final : public EmbeddingProvider {
public:
    explicit CachingEmbedder(EmbeddingProviderPtr inner) : inner_(std::move(inner)) {}

    std::string name() const override { return inner_->name(); }
    std::size_t dim() const override { return inner_->dim(); }
    ProviderMode mode() const override { return inner_->mode(); }
    std::size_t cached() const;

protected:
    std::vector<Embedding> do_embed(std::span<const std::string> texts) const override;

private:
    EmbeddingProviderPtr inner_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::string, Embedding> cache_;
};

/// dot(a, b) / (|a| |b|). Throws std::invalid_argument on dimension mismatch
/// or a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double squared_euclidean(std::span<const double> a, std::span<const double> b);

}  // namespace racg
