#include <doctest.h>

#include "summit/topics.hpp"
#include "summit/util/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace summit;

namespace {

Corpus make_corpus(const std::vector<std::string>& texts, const std::string& name = "fixture") {
    Corpus corpus;
    corpus.name = name;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        corpus.documents.push_back(Document::make(name + "-" + std::to_string(i), texts[i]));
    }
    return corpus;
}

const std::vector<std::vector<std::string>>& keyword_pools() {
    static const std::vector<std::vector<std::string>> pools = {
        {"galaxy", "nebula", "quasar", "photon", "orbit", "comet", "stellar", "cosmic",
         "telescope", "asteroid"},
        {"enzyme", "protein", "genome", "neuron", "membrane", "ribosome", "mitosis", "bacteria",
         "chromosome", "plasmid"},
        {"tariff", "ledger", "dividend", "equity", "futures", "broker", "yield", "inflation",
         "liquidity", "arbitrage"},
    };
    return pools;
}

/// 90 documents, 30 per disjoint keyword pool.
Corpus blob_corpus() {
    util::Rng rng(101);
    std::vector<std::string> texts;
    for (const auto& pool : keyword_pools()) {
        for (int d = 0; d < 30; ++d) {
            std::string text;
            for (int w = 0; w < 25; ++w) {
                if (!text.empty()) text += ' ';
                text += pool[rng.next_bounded(pool.size())];
            }
            texts.push_back(text);
        }
    }
    return make_corpus(texts, "blobs");
}

} // namespace

TEST_SUITE("class-tfidf") {
    TEST_CASE("hand-computed weights") {
        auto corpus = make_corpus({"apple apple banana", "banana cherry"});
        ClusterLabels labels{{0, 1}, 2};
        auto vocab = build_vocabulary(corpus);
        auto weights = class_tfidf(corpus, labels, vocab);
        REQUIRE(weights.size() == 2);
        // A = 5 tokens / 2 classes = 2.5; f(apple) = 2.
        CHECK(weights[0].at("apple") == doctest::Approx(2.0 * std::log(2.25)).epsilon(1e-9));
        CHECK(weights[0].at("apple") == doctest::Approx(1.62186).epsilon(1e-5));
        CHECK(weights[0].at("banana") == doctest::Approx(std::log(2.25)).epsilon(1e-9));
        CHECK(weights[1].at("banana") == doctest::Approx(std::log(2.25)).epsilon(1e-9));
        CHECK(weights[1].at("cherry") == doctest::Approx(std::log(3.5)).epsilon(1e-9));
        // Zero iff absent: cherry never occurs in class 0.
        CHECK(weights[0].count("cherry") == 0);
        CHECK(weights[1].count("apple") == 0);
    }

    TEST_CASE("noise documents do not contribute") {
        auto two = make_corpus({"apple apple banana", "banana cherry"});
        auto three = make_corpus({"apple apple banana", "banana cherry", "durian durian durian"});
        auto with_noise = class_tfidf(three, ClusterLabels{{0, 1, -1}, 2},
                                      build_vocabulary(three));
        auto without = class_tfidf(two, ClusterLabels{{0, 1}, 2}, build_vocabulary(two));
        CHECK(with_noise == without);
    }

    TEST_CASE("positivity equivalence in a single class") {
        auto corpus = make_corpus({"alpha beta beta", "gamma alpha"});
        auto weights = class_tfidf(corpus, ClusterLabels{{0, 0}, 1}, build_vocabulary(corpus));
        REQUIRE(weights.size() == 1);
        CHECK(weights[0].size() == 3);
        for (const auto& [term, w] : weights[0]) CHECK(w > 0.0);
    }

    TEST_CASE("rejects label misuse") {
        auto corpus = make_corpus({"alpha", "beta"});
        auto vocab = build_vocabulary(corpus);
        CHECK_THROWS(class_tfidf(corpus, ClusterLabels{{-1, -1}, 0}, vocab));
        CHECK_THROWS(class_tfidf(corpus, ClusterLabels{{0}, 1}, vocab));
    }
}

TEST_SUITE("top-candidates") {
    TEST_CASE("orders by weight with lexicographic ties") {
        std::map<std::string, double> row{
            {"delta", 0.5}, {"echo", 3.0}, {"bravo", 2.0}, {"alpha", 1.0}, {"charlie", 2.0}};
        auto top = top_candidates(row, 3);
        REQUIRE(top.size() == 3);
        CHECK(top[0].term == "echo");
        CHECK(top[1].term == "bravo");
        CHECK(top[2].term == "charlie");
    }

    TEST_CASE("returns whole row when support is small") {
        std::map<std::string, double> row{{"one", 1.0}, {"two", 2.0}};
        CHECK(top_candidates(row, 30).size() == 2);
        CHECK(top_candidates({}, 30).empty());
    }
}

TEST_SUITE("mmr") {
    // Geometric fixture realizing the hand-traced cosines: relevance
    // (0.9, 0.85, 0.2), cos(one, two) = 0.99, three orthogonal to both.
    struct Fixture {
        std::vector<float> topic{1, 0, 0, 0};
        std::map<std::string, std::vector<float>> vectors;
        std::vector<TopicKeyword> candidates{{"one", 3.0}, {"two", 2.0}, {"three", 1.0}};

        Fixture() {
            double a1 = std::sqrt(1.0 - 0.81);
            std::vector<double> c1{0.9, a1, 0.0, 0.0};
            double b = (0.99 - 0.9 * 0.85) / a1;
            double c = std::sqrt(1.0 - 0.85 * 0.85 - b * b);
            std::vector<double> c2{0.85, b, c, 0.0};
            double x = -0.2 * 0.9 / a1;
            double y = -(0.2 * 0.85 + b * x) / c;
            double z = std::sqrt(1.0 - 0.04 - x * x - y * y);
            std::vector<double> c3{0.2, x, y, z};
            for (auto [name, v] :
                 {std::pair{"one", c1}, std::pair{"two", c2}, std::pair{"three", c3}}) {
                std::vector<float> f(v.begin(), v.end());
                vectors[name] = f;
            }
        }
    };

    TEST_CASE("fixture realizes the intended cosines") {
        Fixture f;
        auto cos = [&](const char* a, const char* b) {
            return cosine(std::span<const float>(f.vectors[a]),
                          std::span<const float>(f.vectors[b]));
        };
        CHECK(cosine(std::span<const float>(f.vectors["one"]),
                     std::span<const float>(f.topic)) == doctest::Approx(0.9).epsilon(1e-6));
        CHECK(cosine(std::span<const float>(f.vectors["two"]),
                     std::span<const float>(f.topic)) == doctest::Approx(0.85).epsilon(1e-6));
        CHECK(cosine(std::span<const float>(f.vectors["three"]),
                     std::span<const float>(f.topic)) == doctest::Approx(0.2).epsilon(1e-6));
        CHECK(cos("one", "two") == doctest::Approx(0.99).epsilon(1e-6));
        CHECK(cos("one", "three") == doctest::Approx(0.0).scale(1));
        CHECK(cos("two", "three") == doctest::Approx(0.0).scale(1));
    }

    TEST_CASE("moderate diversity keeps the redundant runner-up") {
        Fixture f;
        auto out = mmr_rerank(f.candidates, f.vectors, f.topic, 0.3, 2);
        CHECK(out == std::vector<std::string>{"one", "two"});
    }

    TEST_CASE("high diversity jumps to the orthogonal candidate") {
        Fixture f;
        auto out = mmr_rerank(f.candidates, f.vectors, f.topic, 0.7, 2);
        CHECK(out == std::vector<std::string>{"one", "three"});
    }

    TEST_CASE("top_k 1 is the relevance argmax at any diversity") {
        Fixture f;
        for (double d : {0.0, 0.3, 0.9}) {
            CHECK(mmr_rerank(f.candidates, f.vectors, f.topic, d, 1) ==
                  std::vector<std::string>{"one"});
        }
    }

    TEST_CASE("diversity zero equals relevance ordering (property)") {
        util::Rng rng(7);
        std::vector<TopicKeyword> candidates;
        std::map<std::string, std::vector<float>> vectors;
        std::vector<float> topic(8);
        for (auto& v : topic) v = float(rng.uniform(-1, 1));
        for (int i = 0; i < 20; ++i) {
            std::string term = "term" + std::to_string(i);
            candidates.push_back({term, rng.uniform(0, 5)});
            std::vector<float> vec(8);
            for (auto& v : vec) v = float(rng.uniform(-1, 1));
            vectors[term] = vec;
        }

        std::vector<std::size_t> order(candidates.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return cosine(std::span<const float>(vectors[candidates[a].term]),
                          std::span<const float>(topic)) >
                   cosine(std::span<const float>(vectors[candidates[b].term]),
                          std::span<const float>(topic));
        });
        std::vector<std::string> expected;
        for (std::size_t i = 0; i < 10; ++i) expected.push_back(candidates[order[i]].term);

        CHECK(mmr_rerank(candidates, vectors, topic, 0.0, 10) == expected);

        auto all = mmr_rerank(candidates, vectors, topic, 0.4, 25);
        CHECK(all.size() == 20);
        CHECK(std::set<std::string>(all.begin(), all.end()).size() == 20);
    }

    TEST_CASE("identical candidates resolve by candidate order") {
        std::vector<float> v{1, 0};
        std::map<std::string, std::vector<float>> vectors{{"aa", v}, {"bb", v}};
        std::vector<TopicKeyword> candidates{{"bb", 1.0}, {"aa", 1.0}};
        auto out = mmr_rerank(candidates, vectors, std::vector<float>{1, 0}, 0.5, 2);
        CHECK(out == std::vector<std::string>{"bb", "aa"});
    }

    TEST_CASE("missing term vector is an error") {
        std::vector<TopicKeyword> candidates{{"ghost", 1.0}};
        CHECK_THROWS(mmr_rerank(candidates, {}, std::vector<float>{1, 0}, 0.1, 1));
    }
}

TEST_SUITE("fit-topic-model") {
    TEST_CASE("recovers three disjoint keyword pools") {
        auto corpus = blob_corpus();
        FallbackEmbeddingProvider provider;
        auto embeddings = embed_corpus(corpus, provider);
        TopicModelOptions opts;
        opts.hdbscan.min_cluster_size = 10;
        auto model = fit_topic_model(corpus, corpus, embeddings, provider, opts);

        REQUIRE(model.n_topics == 3);
        CHECK_FALSE(model.degenerate);

        int assigned = 0;
        for (auto label : model.assignments) {
            if (label >= 0) ++assigned;
        }
        CHECK(assigned >= 72); // at least 80% of 90

        auto vocab = build_vocabulary(corpus);
        for (std::int32_t t = 0; t < 3; ++t) {
            // Majority pool of the topic's documents.
            std::vector<int> votes(3, 0);
            for (std::size_t i = 0; i < 90; ++i) {
                if (model.assignments[i] == t) votes[i / 30] += 1;
            }
            auto pool_idx = std::size_t(
                std::max_element(votes.begin(), votes.end()) - votes.begin());
            const auto& pool = keyword_pools()[pool_idx];
            std::set<std::string> pool_set(pool.begin(), pool.end());

            REQUIRE(model.keywords[std::size_t(t)].size() == 10);
            std::set<std::string> seen;
            for (const auto& kw : model.keywords[std::size_t(t)]) {
                CHECK(pool_set.count(kw.term) == 1);
                CHECK(vocab.index_of(kw.term) >= 0);
                CHECK(kw.weight > 0.0);
                seen.insert(kw.term);
            }
            CHECK(seen.size() == 10);
        }
        CHECK(model.reference_oov == 0);
        CHECK(model.params_fingerprint.size() == 64);
    }

    TEST_CASE("is deterministic end to end") {
        auto corpus = blob_corpus();
        FallbackEmbeddingProvider provider;
        auto embeddings = embed_corpus(corpus, provider);
        TopicModelOptions opts;
        opts.hdbscan.min_cluster_size = 10;
        auto a = fit_topic_model(corpus, corpus, embeddings, provider, opts);
        auto b = fit_topic_model(corpus, corpus, embeddings, provider, opts);
        CHECK(a.to_json() == b.to_json());
    }

    TEST_CASE("zero clusters produce a degenerate model, not an error") {
        util::Rng rng(3);
        std::vector<std::string> words;
        for (int i = 0; i < 30; ++i) words.push_back("word" + std::to_string(i));
        std::vector<std::string> texts;
        for (int d = 0; d < 40; ++d) {
            std::string text;
            for (int w = 0; w < 15; ++w) {
                if (!text.empty()) text += ' ';
                text += words[rng.next_bounded(words.size())];
            }
            texts.push_back(text);
        }
        auto corpus = make_corpus(texts, "smear");
        FallbackEmbeddingProvider provider;
        auto embeddings = embed_corpus(corpus, provider);
        TopicModelOptions opts;
        opts.hdbscan.min_cluster_size = 39; // no split can satisfy this
        auto model = fit_topic_model(corpus, corpus, embeddings, provider, opts);
        CHECK(model.degenerate);
        CHECK(model.n_topics == 0);
        CHECK(model.keywords.empty());
        CHECK(!model.params_fingerprint.empty());
        CHECK(model.to_json().find("\"degenerate\": true") != std::string::npos);
    }

    TEST_CASE("json round-trips") {
        auto corpus = blob_corpus();
        FallbackEmbeddingProvider provider;
        auto embeddings = embed_corpus(corpus, provider);
        TopicModelOptions opts;
        opts.hdbscan.min_cluster_size = 10;
        auto model = fit_topic_model(corpus, corpus, embeddings, provider, opts);
        auto text = model.to_json();
        auto reloaded = TopicModel::from_json(text);
        CHECK(reloaded.to_json() == text);
        CHECK(reloaded.n_topics == model.n_topics);
        CHECK(reloaded.doc_assignment == model.doc_assignment);
    }

    TEST_CASE("rejects misaligned embeddings") {
        auto corpus = blob_corpus();
        FallbackEmbeddingProvider provider;
        auto embeddings = embed_corpus(corpus, provider);
        corpus.documents.pop_back();
        TopicModelOptions opts;
        CHECK_THROWS(fit_topic_model(corpus, corpus, embeddings, provider, opts));
    }
}
