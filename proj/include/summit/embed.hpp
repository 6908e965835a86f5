#pragma once

#include "summit/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace summit {

struct EmbeddingMatrix {
    std::vector<std::string> doc_ids; // row order == corpus document order
    std::size_t dim = 0;
    std::vector<float> data;          // row-major, size() * dim
    std::string provider_id;
    std::string corpus_hash;
    std::string stage = "embedding";  // "embedding" or "reduced"
    std::vector<std::size_t> zero_rows; // rows left as zero vectors (empty texts)

    std::size_t size() const { return doc_ids.size(); }
    std::span<const float> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dim() const = 0;
    /// One vector per text, in order. Throws on failure.
    virtual std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) = 0;
};

/// Hash terms into a 2^16 bucket count vector, project through an implicit
/// seed-derived Gaussian matrix, L2-normalize. Empty token list gives the
/// zero vector.
std::vector<float> fallback_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class FallbackEmbeddingProvider : public EmbeddingProvider {
public:
    explicit FallbackEmbeddingProvider(std::size_t dim = 256, std::uint64_t seed = 42);
    std::string id() const override;
    std::size_t dim() const override { return dim_; }
    std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

struct HttpEmbeddingConfig {
    std::string base_url;
    std::string endpoint_path = "/v1/embeddings";
    std::string model;
    std::string auth_header = "Authorization";
    std::string api_key_env;
    int timeout_seconds = 60;
    std::size_t dim = 0; // expected dimension; 0 = accept whatever arrives
};

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
    std::string id() const override;
    std::size_t dim() const override { return config_.dim; }
    std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) override;

private:
    HttpEmbeddingConfig config_;
};

struct EmbedOptions {
    std::size_t batch_size = 32;
    unsigned concurrency = 2; // parallel batches in flight
    int max_attempts = 3;
    double backoff_initial_ms = 100.0;
};

EmbeddingMatrix embed_corpus(const Corpus& corpus, EmbeddingProvider& provider,
                             const EmbedOptions& opts = {});

/// dot(u,v) / (|u| |v|); 0 when either norm is 0. Throws on dimension
/// mismatch.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

/// Binary layout: magic "SMEB", version, n, dim, provider_id, corpus hash,
/// then row-major float32 little-endian. doc_ids go to `<path>.ids.json`.
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

} // namespace summit
