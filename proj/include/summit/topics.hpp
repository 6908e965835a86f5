#pragma once

#include "summit/cluster.hpp"
#include "summit/corpus.hpp"
#include "summit/embed.hpp"
#include "summit/reduce.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace summit {

struct TopicKeyword {
    std::string term;
    double weight = 0.0; // c-TF-IDF weight of the term in its topic
};

/// Result of the embed -> reduce -> cluster -> c-TF-IDF -> MMR pipeline.
/// Topics are numbered 0..n_topics-1 (largest first); -1 is the outlier
/// bucket, which carries no keywords and is excluded from metrics.
struct TopicModel {
    std::string input_name;     // corpus the model was fit on
    std::int32_t n_topics = 0;
    bool degenerate = false;    // clustering produced zero topics
    std::vector<std::int32_t> assignments;            // row-aligned with input docs
    std::map<std::string, std::int32_t> doc_assignment; // doc_id -> topic
    std::vector<std::map<std::string, double>> ctfidf;  // per topic, sparse term weights
    std::vector<std::vector<TopicKeyword>> keywords;    // per topic, MMR order
    std::vector<std::int64_t> topic_sizes;              // per topic, member doc count
    /// Keyword terms that never occur in the reference corpus (summaries can
    /// invent words); reported so metric caveats are visible.
    std::int64_t reference_oov = 0;
    std::string params_json;        // canonical parameter echo
    std::string params_fingerprint; // sha256 of params_json

    std::string to_json() const;
    static TopicModel from_json(const std::string& text);
};

/// Class-based TF-IDF: W(t, c) = tf(t, c) * ln(1 + A / f(t)) with tf the
/// term frequency inside class c, f the total frequency across classes and
/// A the average token count per class. Noise documents are excluded from
/// every count. Returns one sparse row per topic holding the nonzero
/// weights. Throws when there are no non-noise clusters.
std::vector<std::map<std::string, double>> class_tfidf(const Corpus& corpus,
                                                       const ClusterLabels& labels,
                                                       const Vocabulary& vocab);

/// Top candidates of a c-TF-IDF row by weight, ties broken lexicographically;
/// fewer than n_candidates when the row has less support.
std::vector<TopicKeyword> top_candidates(const std::map<std::string, double>& row,
                                         std::size_t n_candidates = 30);

/// Greedy maximal-marginal-relevance selection:
///   score(w) = (1 - diversity) * cos(w, topic) - diversity * max_s cos(w, s)
/// The first pick is the plain-relevance argmax; ties keep candidate order.
std::vector<std::string> mmr_rerank(const std::vector<TopicKeyword>& candidates,
                                    const std::map<std::string, std::vector<float>>& term_vectors,
                                    std::span<const float> topic_vector, double diversity,
                                    std::size_t top_k = 10);

struct TopicModelOptions {
    UmapParams umap;
    HdbscanParams hdbscan;
    double diversity = 0.1;
    std::uint64_t seed = 42; // overrides umap.seed so one knob drives the run
    std::size_t n_candidates = 30;
    std::size_t top_k = 10;
};

/// Memoizes UMAP reductions across pipeline runs — a grid varying only
/// diversity or min cluster size reuses the same layout. Thread safe; a
/// racing duplicate computation is wasted work, never a wrong answer.
class ReductionCache {
public:
    const EmbeddingMatrix& get_or_compute(const std::string& key,
                                          const std::function<EmbeddingMatrix()>& compute);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, EmbeddingMatrix> cache_;
};

/// Full pipeline on a precomputed embedding matrix (row-aligned with
/// model_input). Term vectors for MMR come from `provider` applied to
/// single terms; topic vectors are centroids of member document embeddings.
/// reference_corpus is only consulted to count keywords missing from the
/// original dataset's vocabulary. A clustering with zero topics yields a
/// degenerate model instead of an error.
TopicModel fit_topic_model(const Corpus& model_input, const Corpus& reference_corpus,
                           const EmbeddingMatrix& embeddings, EmbeddingProvider& provider,
                           const TopicModelOptions& opts, ReductionCache* cache = nullptr);

} // namespace summit
