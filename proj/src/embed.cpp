#include "summit/embed.hpp"

#include "summit/util/fsio.hpp"
#include "summit/util/parallel.hpp"
#include "summit/util/rng.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>
#include <thread>

namespace summit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kHashBuckets = 1u << 16;

std::uint32_t fnv1a(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

void l2_normalize(std::span<float> v) {
    double norm_sq = 0;
    for (float x : v) norm_sq += double(x) * double(x);
    if (norm_sq == 0) return; // zero vector stays zero
    double inv = 1.0 / std::sqrt(norm_sq);
    for (float& x : v) x = float(double(x) * inv);
}

} // namespace

std::vector<float> fallback_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 8) throw std::invalid_argument("fallback_embed: dim must be >= 8");
    std::vector<float> out(dim, 0.0f);

    // Sparse bucket counts; a document touches far fewer than 2^16 buckets.
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& term : tokenize(text)) {
        counts[fnv1a(term) % kHashBuckets] += 1;
    }
    if (counts.empty()) return out;

    // Implicit projection matrix: entry (bucket, j) is a pure function of
    // (seed, bucket, j), so the matrix never needs to be materialized.
    std::vector<double> acc(dim, 0.0);
    for (const auto& [bucket, count] : counts) {
        for (std::size_t j = 0; j < dim; ++j) {
            acc[j] += double(count) * util::gaussian_at(seed, bucket, j);
        }
    }
    for (std::size_t j = 0; j < dim; ++j) out[j] = float(acc[j]);
    l2_normalize(out);
    return out;
}

FallbackEmbeddingProvider::FallbackEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim < 8) throw std::invalid_argument("fallback embedding provider: dim must be >= 8");
}

std::string FallbackEmbeddingProvider::id() const {
    return "fallback-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

std::vector<std::vector<float>> FallbackEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        out[i] = fallback_embed(texts[i], dim_, seed_);
    }
    return out;
}

EmbeddingMatrix embed_corpus(const Corpus& corpus, EmbeddingProvider& provider,
                             const EmbedOptions& opts) {
    if (corpus.documents.empty()) throw std::invalid_argument("embed_corpus: empty corpus");
    const std::size_t batch_size = std::max<std::size_t>(1, opts.batch_size);
    const std::size_t n_batches = (corpus.size() + batch_size - 1) / batch_size;

    std::vector<std::vector<std::vector<float>>> batch_rows(n_batches);
    util::parallel_for(n_batches, opts.concurrency, [&](std::size_t b) {
        std::size_t begin = b * batch_size;
        std::size_t end = std::min(begin + batch_size, corpus.size());
        std::vector<std::string> texts;
        texts.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) texts.push_back(corpus.documents[i].text);

        int attempts = std::max(1, opts.max_attempts);
        double backoff_ms = opts.backoff_initial_ms;
        std::string last_error;
        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(std::int64_t(backoff_ms)));
                backoff_ms *= 2;
            }
            try {
                batch_rows[b] = provider.embed_batch(texts);
                if (batch_rows[b].size() != texts.size()) {
                    throw std::runtime_error("provider returned " +
                                             std::to_string(batch_rows[b].size()) +
                                             " vectors for " + std::to_string(texts.size()) +
                                             " texts");
                }
                return;
            } catch (const std::exception& e) {
                last_error = e.what();
            }
        }
        throw std::runtime_error("embedding provider '" + provider.id() + "' failed after " +
                                 std::to_string(attempts) + " attempts: " + last_error);
    });

    EmbeddingMatrix matrix;
    matrix.provider_id = provider.id();
    matrix.corpus_hash = corpus_content_hash(corpus);
    matrix.doc_ids.reserve(corpus.size());
    for (const auto& doc : corpus.documents) matrix.doc_ids.push_back(doc.id);

    // First row fixes the dimension; later batches must agree.
    matrix.dim = batch_rows[0][0].size();
    if (matrix.dim == 0) throw std::runtime_error("embed_corpus: provider returned empty vectors");
    matrix.data.assign(corpus.size() * matrix.dim, 0.0f);

    std::size_t row = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        for (auto& vec : batch_rows[b]) {
            if (vec.size() != matrix.dim) {
                throw std::runtime_error(
                    "embed_corpus: dimension mismatch across batches: expected " +
                    std::to_string(matrix.dim) + ", got " + std::to_string(vec.size()));
            }
            std::span<float> dest{matrix.data.data() + row * matrix.dim, matrix.dim};
            std::copy(vec.begin(), vec.end(), dest.begin());
            l2_normalize(dest);
            bool zero = true;
            for (float x : dest) {
                if (x != 0.0f) {
                    zero = false;
                    break;
                }
            }
            if (zero) matrix.zero_rows.push_back(row);
            ++row;
        }
    }
    return matrix;
}

namespace {

template <typename Span>
double cosine_impl(Span u, Span v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine: dimension mismatch: " + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()));
    }
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += double(u[i]) * double(v[i]);
        nu += double(u[i]) * double(u[i]);
        nv += double(v[i]) * double(v[i]);
    }
    if (nu == 0 || nv == 0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

} // namespace

double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }

namespace {

constexpr char kMagic[4] = {'S', 'M', 'E', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_string(std::string& out, const std::string& s) {
    put_u32(out, std::uint32_t(s.size()));
    out += s;
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& context;

    void need(std::size_t n) {
        if (pos + n > buf.size()) {
            throw std::runtime_error(context + ": truncated embedding file");
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(buf[pos++])) << (8 * i);
        return v;
    }
    std::string string() {
        std::uint32_t len = u32();
        need(len);
        std::string s = buf.substr(pos, len);
        pos += len;
        return s;
    }
};

} // namespace

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    std::string out;
    out.reserve(64 + matrix.data.size() * 4);
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, matrix.size());
    put_u32(out, std::uint32_t(matrix.dim));
    put_string(out, matrix.provider_id);
    put_string(out, matrix.corpus_hash);
    put_string(out, matrix.stage);
    for (float x : matrix.data) {
        put_u32(out, std::bit_cast<std::uint32_t>(x));
    }
    util::write_file_atomic(path, out);

    ordered_json ids = matrix.doc_ids;
    util::write_file_atomic(path.string() + ".ids.json", ids.dump());
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::string buf = util::read_file(path);
    std::string context = path.string();
    Reader r{buf, 0, context};
    r.need(4);
    if (std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw std::runtime_error(context + ": not an embedding file (bad magic)");
    }
    r.pos = 4;
    std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw std::runtime_error(context + ": unsupported embedding file version " +
                                 std::to_string(version));
    }
    EmbeddingMatrix matrix;
    std::uint64_t n = r.u64();
    matrix.dim = r.u32();
    matrix.provider_id = r.string();
    matrix.corpus_hash = r.string();
    matrix.stage = r.string();
    matrix.data.resize(n * matrix.dim);
    for (auto& x : matrix.data) {
        x = std::bit_cast<float>(r.u32());
    }
    if (r.pos != buf.size()) {
        throw std::runtime_error(context + ": trailing bytes in embedding file");
    }

    json ids = json::parse(util::read_file(path.string() + ".ids.json"));
    matrix.doc_ids = ids.get<std::vector<std::string>>();
    if (matrix.doc_ids.size() != n) {
        throw std::runtime_error(context + ": id sidecar length does not match matrix rows");
    }
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        bool zero = true;
        for (float x : matrix.row(i)) {
            if (x != 0.0f) {
                zero = false;
                break;
            }
        }
        if (zero) matrix.zero_rows.push_back(i);
    }
    return matrix;
}

} // namespace summit
