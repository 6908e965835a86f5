#include <doctest.h>

#include "summit/embed.hpp"
#include "summit/util/fsio.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <thread>

namespace fs = std::filesystem;
using namespace summit;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("summit-" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Corpus small_corpus() {
    Corpus corpus;
    corpus.name = "tiny";
    corpus.documents.push_back(Document::make("a", "stock market bank finance"));
    corpus.documents.push_back(Document::make("b", "football match goal referee"));
    corpus.documents.push_back(Document::make("c", "stock market trading shares"));
    return corpus;
}

double row_norm(const EmbeddingMatrix& m, std::size_t i) {
    double s = 0;
    for (float x : m.row(i)) s += double(x) * double(x);
    return std::sqrt(s);
}

} // namespace

TEST_SUITE("embed") {
    TEST_CASE("fallback embedding is deterministic") {
        auto a = fallback_embed("stock market bank", 64, 42);
        auto b = fallback_embed("stock market bank", 64, 42);
        CHECK(a == b);
        CHECK(a.size() == 64);

        auto other_seed = fallback_embed("stock market bank", 64, 43);
        CHECK(a != other_seed);

        CHECK_THROWS(fallback_embed("text", 4, 42));
    }

    TEST_CASE("empty text maps to the zero vector") {
        auto z = fallback_embed("", 32, 42);
        for (float x : z) CHECK(x == 0.0f);
        // Stopword-only text tokenizes to nothing as well.
        auto sw = fallback_embed("the of and", 32, 42);
        for (float x : sw) CHECK(x == 0.0f);
    }

    TEST_CASE("bag-of-words overlap survives the projection") {
        auto bank = fallback_embed("stock market bank", 256, 42);
        auto trading = fallback_embed("stock market trading", 256, 42);
        auto pets = fallback_embed("cat dog pet", 256, 42);
        CHECK(cosine(bank, trading) > cosine(bank, pets));
    }

    TEST_CASE("cosine basics") {
        std::vector<double> x{3.0, -2.0, 1.0};
        CHECK(cosine(std::span<const double>(x), std::span<const double>(x)) ==
              doctest::Approx(1.0).epsilon(1e-12));

        std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0}, d{1.0, 1.0};
        CHECK(cosine(std::span<const double>(e1), std::span<const double>(e2)) == 0.0);
        CHECK(cosine(std::span<const double>(d), std::span<const double>(e1)) ==
              doctest::Approx(0.7071067).epsilon(1e-6));
        CHECK(cosine(std::span<const double>(d), std::span<const double>(e1)) ==
              cosine(std::span<const double>(e1), std::span<const double>(d)));

        std::vector<double> zero{0.0, 0.0};
        CHECK(cosine(std::span<const double>(zero), std::span<const double>(e1)) == 0.0);

        std::vector<double> shorter{1.0};
        CHECK_THROWS(cosine(std::span<const double>(shorter), std::span<const double>(e1)));
    }

    TEST_CASE("embed_corpus normalizes rows and keeps order") {
        auto corpus = small_corpus();
        FallbackEmbeddingProvider provider(256, 42);
        auto matrix = embed_corpus(corpus, provider);

        REQUIRE(matrix.size() == 3);
        CHECK(matrix.dim == 256);
        CHECK(matrix.doc_ids == std::vector<std::string>{"a", "b", "c"});
        CHECK(matrix.provider_id == "fallback-d256-s42");
        CHECK(matrix.corpus_hash == corpus_content_hash(corpus));
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(row_norm(matrix, i) == doctest::Approx(1.0).epsilon(1e-6));
        }
        CHECK(matrix.zero_rows.empty());
    }

    TEST_CASE("identical documents embed identically") {
        Corpus corpus;
        corpus.name = "twins";
        corpus.documents.push_back(Document::make("a", "identical text here"));
        corpus.documents.push_back(Document::make("b", "identical text here"));
        FallbackEmbeddingProvider provider(128, 42);
        auto matrix = embed_corpus(corpus, provider);
        CHECK(std::memcmp(matrix.row(0).data(), matrix.row(1).data(),
                          matrix.dim * sizeof(float)) == 0);
        CHECK(cosine(matrix.row(0), matrix.row(1)) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("re-embedding is bit-identical") {
        auto corpus = small_corpus();
        FallbackEmbeddingProvider provider(256, 42);
        auto m1 = embed_corpus(corpus, provider);
        auto m2 = embed_corpus(corpus, provider);
        REQUIRE(m1.data.size() == m2.data.size());
        CHECK(std::memcmp(m1.data.data(), m2.data.data(), m1.data.size() * sizeof(float)) == 0);
    }

    TEST_CASE("zero-text documents are flagged, not dropped") {
        Corpus corpus;
        corpus.name = "gaps";
        corpus.documents.push_back(Document::make("a", "real content here"));
        corpus.documents.push_back(Document::make("b", ""));
        corpus.documents.push_back(Document::make("c", "more real content"));
        FallbackEmbeddingProvider provider(64, 42);
        auto matrix = embed_corpus(corpus, provider);
        REQUIRE(matrix.size() == 3);
        CHECK(matrix.zero_rows == std::vector<std::size_t>{1});
        CHECK(row_norm(matrix, 1) == 0.0);
    }

    TEST_CASE("dimension mismatch across batches is an error") {
        struct Lopsided : EmbeddingProvider {
            int batch = 0;
            std::string id() const override { return "lopsided"; }
            std::size_t dim() const override { return 8; }
            std::vector<std::vector<float>> embed_batch(
                const std::vector<std::string>& texts) override {
                std::size_t d = ++batch == 1 ? 8 : 16;
                return std::vector<std::vector<float>>(texts.size(),
                                                       std::vector<float>(d, 1.0f));
            }
        };
        Corpus corpus;
        corpus.name = "mismatch";
        for (int i = 0; i < 4; ++i) {
            corpus.documents.push_back(Document::make("d" + std::to_string(i), "text"));
        }
        Lopsided provider;
        EmbedOptions opts;
        opts.batch_size = 2;
        opts.concurrency = 1;
        CHECK_THROWS_WITH_AS(embed_corpus(corpus, provider, opts),
                             doctest::Contains("dimension mismatch"), std::runtime_error);
    }

    TEST_CASE("provider failures retry then surface") {
        struct Flaky : EmbeddingProvider {
            int calls = 0;
            std::string id() const override { return "flaky"; }
            std::size_t dim() const override { return 8; }
            std::vector<std::vector<float>> embed_batch(
                const std::vector<std::string>& texts) override {
                if (++calls < 3) throw std::runtime_error("transient");
                return std::vector<std::vector<float>>(texts.size(),
                                                       std::vector<float>(8, 0.5f));
            }
        };
        Flaky provider;
        Corpus corpus = small_corpus();
        EmbedOptions opts;
        opts.backoff_initial_ms = 1;
        opts.concurrency = 1;
        auto matrix = embed_corpus(corpus, provider, opts); // succeeds on 3rd attempt
        CHECK(provider.calls == 3);
        CHECK(matrix.dim == 8);
    }

    TEST_CASE("save and load round-trip bit-identically") {
        TempDir tmp("embed-io");
        auto corpus = small_corpus();
        FallbackEmbeddingProvider provider(64, 7);
        auto matrix = embed_corpus(corpus, provider);

        fs::path file = tmp.path / "embeddings.bin";
        save_embeddings(matrix, file);
        auto loaded = load_embeddings(file);

        CHECK(loaded.doc_ids == matrix.doc_ids);
        CHECK(loaded.dim == matrix.dim);
        CHECK(loaded.provider_id == matrix.provider_id);
        CHECK(loaded.corpus_hash == matrix.corpus_hash);
        REQUIRE(loaded.data.size() == matrix.data.size());
        CHECK(std::memcmp(loaded.data.data(), matrix.data.data(),
                          matrix.data.size() * sizeof(float)) == 0);

        // Corrupted magic is rejected.
        std::string bytes = util::read_file(file);
        bytes[0] = 'X';
        util::write_file_atomic(file, bytes);
        CHECK_THROWS_WITH_AS(load_embeddings(file), doctest::Contains("bad magic"),
                             std::runtime_error);
    }
}

TEST_SUITE("http-embedding") {
    TEST_CASE("posts batched input and reads the data array shape") {
        httplib::Server server;
        json seen;
        server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
            seen = json::parse(req.body);
            json reply = {{"data", json::array()}};
            for (std::size_t i = 0; i < seen["input"].size(); ++i) {
                reply["data"].push_back({{"embedding", {0.6, 0.8, 0.0, 0.0}}});
            }
            res.set_content(reply.dump(), "application/json");
        });
        int port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        std::thread server_thread([&] { server.listen_after_bind(); });
        server.wait_until_ready();

        HttpEmbeddingConfig config;
        config.base_url = "http://127.0.0.1:" + std::to_string(port);
        config.model = "embed-model";
        HttpEmbeddingProvider provider(config);
        CHECK(provider.id() == "http-embed-model");

        auto corpus = small_corpus();
        auto matrix = embed_corpus(corpus, provider);
        CHECK(seen["model"] == "embed-model");
        CHECK(seen["input"].size() == 3);
        CHECK(matrix.dim == 4);
        // Rows arrive un-normalized (norm 1 already in this fixture).
        CHECK(matrix.row(0)[0] == doctest::Approx(0.6f));

        server.stop();
        server_thread.join();
    }
}
