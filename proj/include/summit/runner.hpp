#pragma once

#include "summit/corpus.hpp"
#include "summit/embed.hpp"
#include "summit/eval.hpp"
#include "summit/reduce.hpp"
#include "summit/summarize.hpp"
#include "summit/topics.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace summit {

/// Provider selection shared by the CLI subcommands. mode "offline" uses the
/// extractive summarizer and hashed-projection embedder; "http" talks to the
/// configured endpoints.
struct ProviderSettings {
    std::string mode = "offline";
    std::size_t fallback_dim = 256;
    std::uint64_t fallback_seed = 42;
    unsigned summary_concurrency = 4;
    int summary_max_attempts = 3;
    std::size_t embedding_batch_size = 32;
    HttpProviderConfig completion;
    HttpEmbeddingConfig embedding;
};

struct GridConfig {
    std::string dataset_name;
    std::filesystem::path dataset_path;
    SourceFormat dataset_format = SourceFormat::jsonl;
    std::string text_field = "text";
    std::string label_field; // empty = none
    std::size_t truncation_limit = kDefaultTruncationWords;

    std::vector<std::string> input_types{"full", "short", "long"};
    std::vector<double> diversity_values{0.1, 0.2, 0.3};
    std::vector<std::int64_t> min_topic_sizes; // required, dataset-dependent
    int repeats = 3;
    std::uint64_t base_seed = 42;
    int window_size = 110;
    unsigned workers = 1;

    UmapParams umap;          // seed is overridden per repeat
    std::int64_t hdbscan_min_samples = 0; // 0 = follow min_cluster_size

    std::filesystem::path out_dir;
    std::filesystem::path cache_dir;
    ProviderSettings provider;

    /// Strict parse: unknown keys are rejected by name.
    static GridConfig from_ini_file(const std::filesystem::path& path);
    static GridConfig from_ini(const std::string& content);
    void validate() const;
};

struct CellMean {
    std::string input_type;
    double diversity_param = 0.0;
    std::int64_t min_topic_size = 0;
    int n_records = 0;
    int n_excluded = 0; // degenerate records left out of the means
    std::optional<double> mean_diversity;    // absent when every record degenerate
    std::optional<double> mean_coherence_cv;
};

struct InputTypeMean {
    std::string input_type;
    int n_cells = 0;
    int n_defined_cells = 0;
    std::optional<double> mean_diversity;    // mean of defined cell means
    std::optional<double> mean_coherence_cv;
};

struct Aggregation {
    std::vector<CellMean> cells;          // first-encounter order
    std::vector<InputTypeMean> input_types;
};

/// Arithmetic means excluding degenerate records; input-type means average
/// the cell means, not the raw records.
Aggregation aggregate(const std::vector<MetricsRecord>& records);

struct GridResult {
    std::string dataset_name;
    std::vector<std::string> input_types;
    std::vector<double> diversity_values;
    std::vector<std::int64_t> min_topic_sizes;
    int repeats = 0;
    std::uint64_t base_seed = 0;

    std::vector<MetricsRecord> records; // (input_type, diversity, size, repeat) order
    std::vector<CellMean> cell_means;
    std::vector<InputTypeMean> input_type_means;

    std::vector<std::string> notes; // per-run failure notes, index order
    std::int64_t missing_term_events = 0;
    std::string corpus_hash;        // full original corpus
    std::string embedding_provider_id;
    std::map<std::string, double> timings_ms;
};

/// Executes the full grid: per input type the documents are embedded once,
/// UMAP reductions are shared across cells via a ReductionCache, and every
/// run is evaluated against the full original corpus. Per-run failures
/// become degenerate records plus a note; the grid keeps going.
GridResult run_grid(const GridConfig& config, const Corpus& full_corpus,
                    const std::map<std::string, const Corpus*>& summary_corpora,
                    EmbeddingProvider& provider);

/// records.csv, summary.csv, diversity.svg, coherence.svg, run-manifest.json.
/// Everything except the manifest (which carries timings) is byte-identical
/// for identical results.
void emit_report(const GridResult& result, const std::filesystem::path& out_dir);

std::vector<MetricsRecord> load_records_csv(const std::filesystem::path& path);

/// Rebuilds aggregation from a records.csv and rewrites summary.csv and the
/// two charts; the regenerated bytes match the original emit_report output.
void report_from_records(const std::filesystem::path& records_csv,
                         const std::filesystem::path& out_dir);

} // namespace summit
