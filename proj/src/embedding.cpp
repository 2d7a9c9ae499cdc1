#include "racg/embedding.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "racg/error.hpp"
#include "racg/text.hpp"

namespace racg {
namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Embedding EmbeddingProvider::embed(std::string_view text) const
{
    std::string owned(text);
    return std::move(embed_batch(std::span(&owned, 1)).front());
}

std::vector<Embedding> EmbeddingProvider::embed_batch(std::span<const std::string> texts) const
{
    for (const auto& t : texts) {
        if (trim(t).empty()) throw std::invalid_argument("cannot embed blank text");
    }
    auto out = do_embed(texts);
    if (out.size() != texts.size())
        throw RemoteError(name() + ": expected " + std::to_string(texts.size()) + " embeddings, got " +
                          std::to_string(out.size()));
    for (const auto& v : out) {
        if (v.size() != dim())
            throw RemoteError(name() + ": embedding dimension " + std::to_string(v.size()) + " != " +
                              std::to_string(dim()));
        for (double x : v) {
            if (!std::isfinite(x)) throw RemoteError(name() + ": non-finite embedding value");
        }
    }
    return out;
}

HashingEmbedder::HashingEmbedder(std::string name, std::size_t dim, std::uint64_t seed)
    : name_(std::move(name)), dim_(dim), seed_(seed)
{
    if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::size_t HashingEmbedder::bucket(std::string_view token) const
{
    return static_cast<std::size_t>(splitmix64(fnv1a(token) ^ splitmix64(seed_)) % dim_);
}

std::vector<Embedding> HashingEmbedder::do_embed(std::span<const std::string> texts) const
{
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        Embedding v(dim_, 0.0);
        auto tokens = tokenize(text);
        if (tokens.empty()) {
            v[bucket("")] = 1.0;
        } else {
            for (const auto& tok : tokens) v[bucket(tok)] += 1.0;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(std::string name, RemoteEndpoint endpoint, std::size_t dim, std::size_t batch_size)
    : name_(std::move(name)),
      model_(endpoint.model),
      dim_(dim),
      batch_size_(batch_size == 0 ? 1 : batch_size),
      transport_(std::make_shared<JsonTransport>(std::move(endpoint)))
{
    if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<Embedding> RemoteEmbedder::do_embed(std::span<const std::string> texts) const
{
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        auto batch = texts.subspan(start, std::min(batch_size_, texts.size() - start));
        nlohmann::json body = {{"model", model_}, {"input", batch}};
        auto response = transport_->post("/embeddings", body);
        std::vector<Embedding> got(batch.size());
        std::vector<bool> filled(batch.size(), false);
        try {
            for (const auto& item : response.at("data")) {
                auto index = item.at("index").get<std::size_t>();
                if (index >= batch.size() || filled[index])
                    throw RemoteError(name_ + ": bad embedding index " + std::to_string(index));
                got[index] = item.at("embedding").get<Embedding>();
                filled[index] = true;
            }
        } catch (const nlohmann::json::exception& e) {
            throw RemoteError(name_ + ": malformed embeddings response: " + e.what());
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (!filled[i]) throw RemoteError(name_ + ": missing embedding for input " + std::to_string(i));
            out.push_back(std::move(got[i]));
        }
    }
    return out;
}

std::size_t CachingEmbedder::cached() const
{
    std::shared_lock lock(mutex_);
    return cache_.size();
}

std::vector<Embedding> CachingEmbedder::do_embed(std::span<const std::string> texts) const
{
    std::vector<Embedding> out(texts.size());
    std::vector<std::string> missing;
    std::vector<std::size_t> missing_at;
    {
        std::shared_lock lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (auto it = cache_.find(texts[i]); it != cache_.end())
                out[i] = it->second;
            else {
                missing.push_back(texts[i]);
                missing_at.push_back(i);
            }
        }
    }
    if (missing.empty()) return out;
    auto fresh = inner_->embed_batch(missing);
    std::unique_lock lock(mutex_);
    for (std::size_t j = 0; j < missing.size(); ++j) {
        out[missing_at[j]] = fresh[j];
        cache_.emplace(std::move(missing[j]), std::move(fresh[j]));
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double squared_euclidean(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("squared_euclidean: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace racg
