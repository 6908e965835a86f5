#pragma once

#include "summit/corpus.hpp"
#include "summit/topics.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace summit {

/// Boolean sliding-window statistics over a reference corpus: how many
/// windows contain a term, and how many contain an unordered term pair.
/// Windows never span documents; a document shorter than the window
/// contributes exactly one whole-document window, and a document with no
/// tokens contributes none.
struct WindowStats {
    int window_size = 110;
    std::int64_t n_windows = 0;
    std::map<std::string, std::int64_t> occurrence;
    std::map<std::pair<std::string, std::string>, std::int64_t> cooccurrence; // key a < b
    double epsilon = 1e-12;

    std::int64_t occurrence_of(const std::string& term) const;
    std::int64_t cooccurrence_of(const std::string& a, const std::string& b) const;
};

/// Full statistics: every term and every co-occurring pair. Quadratic in
/// per-window vocabulary, intended for small corpora and oracle tests.
WindowStats build_window_stats(const Corpus& reference_corpus, int window_size = 110);

/// Restricted statistics: counts only the given target terms and their
/// pairs. n_windows is identical to the full scan, so NPMI values for
/// target terms match the full statistics exactly. This is what production
/// runs use — topic keywords are the only terms the metrics ever query.
WindowStats build_window_stats(const Corpus& reference_corpus, int window_size,
                               const std::vector<std::string>& target_terms);

/// NPMI(a, b) = ln((P(ab) + eps) / (P(a) P(b))) / (-ln(P(ab) + eps)),
/// probabilities = window counts / n_windows. A term that never occurs
/// short-circuits to -1.
double npmi(std::int64_t count_a, std::int64_t count_b, std::int64_t count_ab,
            std::int64_t n_windows, double epsilon = 1e-12);

/// Share of distinct terms across all topic keyword lists.
double topic_diversity(const std::vector<std::vector<std::string>>& keyword_lists);

/// C_V: per topic, each word w maps to the vector of NPMI(w, w_j) over the
/// topic's words (diagonal uses P(w,w) = P(w)); the confirmation of w is
/// the cosine between its vector and the per-topic sum vector; the topic
/// score is the mean confirmation and the corpus score the mean over
/// topics.
double cv_coherence(const std::vector<std::vector<std::string>>& keyword_lists,
                    const WindowStats& stats);

struct MetricsRecord {
    std::string dataset;
    std::string input_type; // "full", "short" or "long"
    double diversity_param = 0.0;
    std::int64_t min_topic_size = 0;
    std::int64_t seed = 0;
    std::int32_t n_topics = 0;
    std::optional<double> diversity;    // absent iff degenerate
    std::optional<double> coherence_cv; // absent iff degenerate
    bool degenerate = false;
    /// Keyword terms never seen in the reference corpus (summaries can
    /// invent words; they enter NPMI as -1). Reported outside the CSV.
    std::int64_t missing_terms = 0;
};

/// CSV column order is fixed; reals use shortest round-trip formatting and
/// degenerate rows leave the metric cells empty.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& record);

/// Fills a record from a fitted model: metrics against the reference
/// corpus' window statistics, parameter echo from the model, input_type
/// inferred from the model's corpus name ("-short"/"-long" suffix).
MetricsRecord evaluate(const TopicModel& topics, const Corpus& reference_corpus,
                       const WindowStats& stats);

} // namespace summit
