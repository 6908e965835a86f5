#include <CLI11.hpp>

#include "summit/runner.hpp"
#include "summit/util/fsio.hpp"
#include "summit/util/text.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace summit;
using nlohmann::ordered_json;

struct CorpusArgs {
    std::string path;
    std::string format = "jsonl";
    std::string text_field = "text";
    std::string label_field;
    std::string name;
};

void add_corpus_options(CLI::App* cmd, const std::shared_ptr<CorpusArgs>& args) {
    cmd->add_option("--input", args->path, "corpus file or directory")->required();
    cmd->add_option("--format", args->format, "jsonl, csv, or dir")->capture_default_str();
    cmd->add_option("--text-field", args->text_field, "field holding the document text")
        ->capture_default_str();
    cmd->add_option("--label-field", args->label_field, "optional gold label field");
    cmd->add_option("--name", args->name, "corpus name (default: file stem)");
}

Corpus load_from_args(const CorpusArgs& args) {
    LoadOptions opts;
    opts.text_field = args.text_field;
    if (!args.label_field.empty()) opts.label_field = args.label_field;
    opts.name = args.name;
    return load_corpus(args.path, parse_source_format(args.format), opts);
}

struct CompletionArgs {
    std::string mode = "offline";
    HttpProviderConfig http;
};

void add_completion_options(CLI::App* cmd, const std::shared_ptr<CompletionArgs>& args) {
    cmd->add_option("--mode", args->mode, "offline (extractive) or http")->capture_default_str();
    cmd->add_option("--base-url", args->http.base_url, "completion endpoint base URL");
    cmd->add_option("--endpoint", args->http.endpoint_path, "completion endpoint path")
        ->capture_default_str();
    cmd->add_option("--model", args->http.model, "completion model name");
    cmd->add_option("--temperature", args->http.temperature, "sampling temperature")
        ->capture_default_str();
    cmd->add_option("--max-tokens", args->http.max_tokens, "completion token budget")
        ->capture_default_str();
    cmd->add_option("--auth-header", args->http.auth_header, "header carrying the API key")
        ->capture_default_str();
    cmd->add_option("--api-key-env", args->http.api_key_env,
                    "environment variable holding the API key");
    cmd->add_option("--timeout", args->http.timeout_seconds, "request timeout in seconds")
        ->capture_default_str();
}

std::unique_ptr<CompletionProvider> make_completion_provider(const CompletionArgs& args) {
    if (args.mode == "offline") return std::make_unique<ExtractiveProvider>();
    if (args.mode == "http") {
        if (args.http.base_url.empty()) {
            throw std::runtime_error("http mode requires --base-url");
        }
        return std::make_unique<HttpProvider>(args.http);
    }
    throw std::runtime_error("unknown provider mode '" + args.mode + "'");
}

struct EmbeddingArgs {
    std::string mode = "offline";
    std::size_t dim = 256;
    std::uint64_t seed = 42;
    HttpEmbeddingConfig http;
};

void add_embedding_options(CLI::App* cmd, const std::shared_ptr<EmbeddingArgs>& args) {
    cmd->add_option("--mode", args->mode, "offline (hashed projection) or http")
        ->capture_default_str();
    cmd->add_option("--dim", args->dim, "offline embedding dimension")->capture_default_str();
    cmd->add_option("--seed", args->seed, "offline projection seed")->capture_default_str();
    cmd->add_option("--base-url", args->http.base_url, "embedding endpoint base URL");
    cmd->add_option("--endpoint", args->http.endpoint_path, "embedding endpoint path")
        ->capture_default_str();
    cmd->add_option("--model", args->http.model, "embedding model name");
    cmd->add_option("--auth-header", args->http.auth_header, "header carrying the API key")
        ->capture_default_str();
    cmd->add_option("--api-key-env", args->http.api_key_env,
                    "environment variable holding the API key");
    cmd->add_option("--timeout", args->http.timeout_seconds, "request timeout in seconds")
        ->capture_default_str();
    cmd->add_option("--expect-dim", args->http.dim, "expected http embedding dimension");
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingArgs& args) {
    if (args.mode == "offline") {
        return std::make_unique<FallbackEmbeddingProvider>(args.dim, args.seed);
    }
    if (args.mode == "http") {
        if (args.http.base_url.empty()) {
            throw std::runtime_error("http mode requires --base-url");
        }
        return std::make_unique<HttpEmbeddingProvider>(args.http);
    }
    throw std::runtime_error("unknown provider mode '" + args.mode + "'");
}

std::unique_ptr<CompletionProvider> completion_from_settings(const ProviderSettings& settings) {
    CompletionArgs args;
    args.mode = settings.mode;
    args.http = settings.completion;
    return make_completion_provider(args);
}

std::unique_ptr<EmbeddingProvider> embedding_from_settings(const ProviderSettings& settings) {
    EmbeddingArgs args;
    args.mode = settings.mode;
    args.dim = settings.fallback_dim;
    args.seed = settings.fallback_seed;
    args.http = settings.embedding;
    return make_embedding_provider(args);
}

std::string records_jsonl(const std::vector<SummaryRecord>& records) {
    std::string out;
    for (const auto& record : records) {
        ordered_json line;
        line["doc_id"] = record.doc_id;
        line["variant"] = to_string(record.variant);
        line["text"] = record.text;
        line["word_count"] = record.word_count;
        line["provider_id"] = record.provider_id;
        line["prompt_hash"] = record.prompt_hash;
        line["in_length_range"] = record.in_length_range;
        out += line.dump() + "\n";
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void setup_ingest(CLI::App& app) {
    auto cmd = app.add_subcommand("ingest", "normalize a dataset into canonical JSONL");
    auto corpus_args = std::make_shared<CorpusArgs>();
    auto out = std::make_shared<std::string>();
    add_corpus_options(cmd, corpus_args);
    cmd->add_option("--out", *out, "canonical JSONL destination")->required();
    cmd->callback([corpus_args, out] {
        auto corpus = load_from_args(*corpus_args);
        save_corpus_jsonl(corpus, *out);
        std::size_t words = 0, labeled = 0;
        for (const auto& doc : corpus.documents) {
            words += doc.word_count;
            labeled += doc.label ? 1 : 0;
        }
        std::cout << "corpus: " << corpus.name << "\n"
                  << "documents: " << corpus.size() << "\n"
                  << "labeled: " << labeled << "\n"
                  << "total words: " << words << "\n"
                  << "content hash: " << corpus_content_hash(corpus) << "\n"
                  << "wrote " << *out << "\n";
    });
}

void setup_summarize(CLI::App& app) {
    auto cmd = app.add_subcommand("summarize", "produce short or long summaries for a corpus");
    auto corpus_args = std::make_shared<CorpusArgs>();
    auto completion_args = std::make_shared<CompletionArgs>();
    struct Locals {
        std::string variant = "short";
        std::string out_records;
        std::string out_corpus;
        std::string cache_dir;
        std::string template_path;
        std::size_t truncation = kDefaultTruncationWords;
        unsigned concurrency = 4;
        int max_attempts = 3;
        double max_failure_rate = 0.05;
    };
    auto locals = std::make_shared<Locals>();
    add_corpus_options(cmd, corpus_args);
    add_completion_options(cmd, completion_args);
    cmd->add_option("--variant", locals->variant, "short (20-30 words) or long (60-80 words)")
        ->capture_default_str();
    cmd->add_option("--out-records", locals->out_records, "summary records JSONL")->required();
    cmd->add_option("--out-corpus", locals->out_corpus, "summary corpus JSONL")->required();
    cmd->add_option("--cache-dir", locals->cache_dir, "summary cache root (empty disables)");
    cmd->add_option("--template", locals->template_path, "prompt template JSON override");
    cmd->add_option("--truncation", locals->truncation, "input truncation in words")
        ->capture_default_str();
    cmd->add_option("--concurrency", locals->concurrency, "parallel requests")
        ->capture_default_str();
    cmd->add_option("--max-attempts", locals->max_attempts, "transport retries per document")
        ->capture_default_str();
    cmd->add_option("--max-failure-rate", locals->max_failure_rate,
                    "abort past this failed-document fraction")
        ->capture_default_str();
    cmd->callback([corpus_args, completion_args, locals] {
        auto corpus = load_from_args(*corpus_args);
        auto provider = make_completion_provider(*completion_args);
        auto tmpl = locals->template_path.empty()
                        ? PromptTemplate::default_template()
                        : PromptTemplate::from_json_file(locals->template_path);
        auto variant = SummaryVariant::for_kind(parse_summary_kind(locals->variant));
        SummarizeOptions opts;
        opts.cache_dir = locals->cache_dir;
        opts.concurrency = locals->concurrency;
        opts.max_attempts = locals->max_attempts;
        opts.max_failure_rate = locals->max_failure_rate;
        std::cerr << "summarizing " << corpus.size() << " documents (" << locals->variant
                  << ", provider " << provider->id() << ")\n";
        auto start = std::chrono::steady_clock::now();
        auto result = summarize_corpus(corpus, *provider, tmpl, variant, locals->truncation,
                                       opts);
        result.summary_corpus.name = corpus.name + "-" + locals->variant;
        util::write_file_atomic(locals->out_records, records_jsonl(result.records));
        save_corpus_jsonl(result.summary_corpus, locals->out_corpus);
        std::cout << "summaries: " << result.records.size() << "\n"
                  << "provider failures (fallback substituted): " << result.provider_failures
                  << "\n"
                  << "out of length range: " << result.out_of_range << "\n"
                  << "elapsed: " << util::format_fixed(seconds_since(start), 1) << "s\n"
                  << "wrote " << locals->out_records << "\n"
                  << "wrote " << locals->out_corpus << "\n";
    });
}

void setup_embed(CLI::App& app) {
    auto cmd = app.add_subcommand("embed", "embed a corpus into a binary matrix");
    auto corpus_args = std::make_shared<CorpusArgs>();
    auto embedding_args = std::make_shared<EmbeddingArgs>();
    struct Locals {
        std::string out;
        std::size_t batch_size = 32;
        unsigned concurrency = 2;
    };
    auto locals = std::make_shared<Locals>();
    add_corpus_options(cmd, corpus_args);
    add_embedding_options(cmd, embedding_args);
    cmd->add_option("--out", locals->out, "embedding matrix destination (.bin)")->required();
    cmd->add_option("--batch-size", locals->batch_size, "texts per provider call")
        ->capture_default_str();
    cmd->add_option("--concurrency", locals->concurrency, "parallel batches")
        ->capture_default_str();
    cmd->callback([corpus_args, embedding_args, locals] {
        auto corpus = load_from_args(*corpus_args);
        auto provider = make_embedding_provider(*embedding_args);
        EmbedOptions opts;
        opts.batch_size = locals->batch_size;
        opts.concurrency = locals->concurrency;
        std::cerr << "embedding " << corpus.size() << " documents (provider " << provider->id()
                  << ")\n";
        auto start = std::chrono::steady_clock::now();
        auto matrix = embed_corpus(corpus, *provider, opts);
        save_embeddings(matrix, locals->out);
        std::cout << "rows: " << matrix.size() << "\n"
                  << "dim: " << matrix.dim << "\n"
                  << "provider: " << matrix.provider_id << "\n"
                  << "corpus hash: " << matrix.corpus_hash << "\n"
                  << "zero rows: " << matrix.zero_rows.size() << "\n"
                  << "elapsed: " << util::format_fixed(seconds_since(start), 1) << "s\n"
                  << "wrote " << locals->out << "\n";
    });
}

void setup_model(CLI::App& app) {
    auto cmd = app.add_subcommand("model", "fit one topic model and write its JSON");
    auto corpus_args = std::make_shared<CorpusArgs>();
    auto embedding_args = std::make_shared<EmbeddingArgs>();
    struct Locals {
        std::string reference_path;
        std::string embeddings_path;
        std::string out;
        UmapParams umap;
        std::int64_t min_topic_size = 10;
        std::int64_t min_samples = 0;
        double diversity = 0.1;
        std::uint64_t seed = 42;
        int candidates = 30;
        int top_k = 10;
        int window_size = 110;
        std::string metric = "cosine";
    };
    auto locals = std::make_shared<Locals>();
    add_corpus_options(cmd, corpus_args);
    add_embedding_options(cmd, embedding_args);
    cmd->add_option("--reference", locals->reference_path,
                    "full original corpus for evaluation (default: --input)");
    cmd->add_option("--embeddings", locals->embeddings_path,
                    "precomputed embedding matrix (.bin) matching --input");
    cmd->add_option("--out", locals->out, "topic model JSON destination")->required();
    cmd->add_option("--n-neighbors", locals->umap.n_neighbors)->capture_default_str();
    cmd->add_option("--n-components", locals->umap.n_components)->capture_default_str();
    cmd->add_option("--min-dist", locals->umap.min_dist)->capture_default_str();
    cmd->add_option("--spread", locals->umap.spread)->capture_default_str();
    cmd->add_option("--n-epochs", locals->umap.n_epochs)->capture_default_str();
    cmd->add_option("--negative-sample-rate", locals->umap.negative_sample_rate)
        ->capture_default_str();
    cmd->add_option("--learning-rate", locals->umap.initial_learning_rate)
        ->capture_default_str();
    cmd->add_option("--metric", locals->metric, "euclidean or cosine")->capture_default_str();
    cmd->add_option("--min-topic-size", locals->min_topic_size)->capture_default_str();
    cmd->add_option("--min-samples", locals->min_samples, "0 follows --min-topic-size")
        ->capture_default_str();
    cmd->add_option("--diversity", locals->diversity, "MMR diversity in [0,1]")
        ->capture_default_str();
    cmd->add_option("--model-seed", locals->seed, "layout/model seed")->capture_default_str();
    cmd->add_option("--candidates", locals->candidates, "c-TF-IDF candidates per topic")
        ->capture_default_str();
    cmd->add_option("--top-k", locals->top_k, "keywords per topic")->capture_default_str();
    cmd->add_option("--window-size", locals->window_size, "C_V sliding window")
        ->capture_default_str();
    cmd->callback([corpus_args, embedding_args, locals] {
        auto corpus = load_from_args(*corpus_args);
        Corpus reference_storage;
        const Corpus* reference = &corpus;
        if (!locals->reference_path.empty()) {
            CorpusArgs ref_args = *corpus_args;
            ref_args.path = locals->reference_path;
            ref_args.name.clear();
            reference_storage = load_from_args(ref_args);
            reference = &reference_storage;
        }
        auto provider = make_embedding_provider(*embedding_args);

        EmbeddingMatrix matrix;
        if (locals->embeddings_path.empty()) {
            std::cerr << "embedding " << corpus.size() << " documents (provider "
                      << provider->id() << ")\n";
            matrix = embed_corpus(corpus, *provider);
        } else {
            matrix = load_embeddings(locals->embeddings_path);
            if (matrix.corpus_hash != corpus_content_hash(corpus)) {
                throw std::runtime_error(
                    "embedding matrix was built from a different corpus (hash mismatch)");
            }
        }

        TopicModelOptions opts;
        opts.umap = locals->umap;
        opts.umap.metric = parse_metric(locals->metric);
        opts.hdbscan.min_cluster_size = int(locals->min_topic_size);
        opts.hdbscan.min_samples = int(locals->min_samples);
        opts.diversity = locals->diversity;
        opts.seed = locals->seed;
        opts.n_candidates = locals->candidates;
        opts.top_k = locals->top_k;

        std::cerr << "fitting topic model (min_topic_size " << locals->min_topic_size << ")\n";
        auto start = std::chrono::steady_clock::now();
        auto model = fit_topic_model(corpus, *reference, matrix, *provider, opts);
        util::write_file_atomic(locals->out, model.to_json() + "\n");

        std::cout << "topics: " << model.n_topics << "\n";
        if (model.degenerate) {
            std::cout << "degenerate: true\n";
        } else {
            std::vector<std::string> terms;
            for (const auto& topic : model.keywords) {
                for (const auto& kw : topic) terms.push_back(kw.term);
            }
            auto stats = build_window_stats(*reference, locals->window_size, terms);
            auto record = evaluate(model, *reference, stats);
            for (std::size_t t = 0; t < model.keywords.size(); ++t) {
                std::cout << "topic " << t << " (" << model.topic_sizes[t] << " docs):";
                for (const auto& kw : model.keywords[t]) std::cout << " " << kw.term;
                std::cout << "\n";
            }
            if (record.diversity) {
                std::cout << "topic diversity: " << util::format_double(*record.diversity)
                          << "\n";
            }
            if (record.coherence_cv) {
                std::cout << "coherence (C_V): " << util::format_double(*record.coherence_cv)
                          << "\n";
            }
            if (record.missing_terms > 0) {
                std::cout << "keywords absent from reference corpus: " << record.missing_terms
                          << "\n";
            }
        }
        std::cout << "elapsed: " << util::format_fixed(seconds_since(start), 1) << "s\n"
                  << "wrote " << locals->out << "\n";
    });
}

void run_grid_command(const std::string& config_path, bool offline,
                      const std::string& out_override) {
    auto config = GridConfig::from_ini_file(config_path);
    if (offline) config.provider.mode = "offline";
    if (!out_override.empty()) config.out_dir = out_override;
    if (config.out_dir.empty()) {
        throw std::runtime_error("config: output.dir is required for grid runs (or pass --out)");
    }
    if (config.dataset_path.empty()) {
        throw std::runtime_error("config: dataset.path is required for grid runs");
    }

    LoadOptions load_opts;
    load_opts.text_field = config.text_field;
    if (!config.label_field.empty()) load_opts.label_field = config.label_field;
    load_opts.name = config.dataset_name;
    auto corpus = load_corpus(config.dataset_path, config.dataset_format, load_opts);
    std::cerr << "loaded " << corpus.size() << " documents from "
              << config.dataset_path.string() << "\n";

    std::filesystem::create_directories(config.out_dir);

    std::map<std::string, double> extra_timings;
    std::vector<std::string> extra_notes;
    std::map<std::string, Corpus> summaries_owned;
    bool needs_summaries = false;
    for (const auto& type : config.input_types) {
        if (type != "full") needs_summaries = true;
    }
    if (needs_summaries) {
        auto completion = completion_from_settings(config.provider);
        PromptTemplate tmpl = PromptTemplate::default_template();
        SummarizeOptions opts;
        if (!config.cache_dir.empty()) opts.cache_dir = config.cache_dir / "summaries";
        opts.concurrency = config.provider.summary_concurrency;
        opts.max_attempts = config.provider.summary_max_attempts;
        for (const auto& type : config.input_types) {
            if (type == "full") continue;
            auto variant = SummaryVariant::for_kind(parse_summary_kind(type));
            std::cerr << "summarizing " << corpus.size() << " documents (" << type
                      << ", provider " << completion->id() << ")\n";
            auto start = std::chrono::steady_clock::now();
            auto result = summarize_corpus(corpus, *completion, tmpl, variant,
                                           config.truncation_limit, opts);
            extra_timings["summarize_" + type] = std::chrono::duration<double, std::milli>(
                                                     std::chrono::steady_clock::now() - start)
                                                     .count();
            result.summary_corpus.name = config.dataset_name + "-" + type;
            if (result.provider_failures > 0 || result.out_of_range > 0) {
                extra_notes.push_back(
                    "summarize " + type + ": " + std::to_string(result.provider_failures) +
                    " provider failures, " + std::to_string(result.out_of_range) +
                    " summaries out of length range");
            }
            util::write_file_atomic(config.out_dir / ("summary-records-" + type + ".jsonl"),
                                    records_jsonl(result.records));
            save_corpus_jsonl(result.summary_corpus,
                              config.out_dir / ("corpus-" + type + ".jsonl"));
            summaries_owned.emplace(type, std::move(result.summary_corpus));
        }
    }

    std::map<std::string, const Corpus*> summaries;
    for (const auto& [type, summary] : summaries_owned) summaries[type] = &summary;

    auto embedding = embedding_from_settings(config.provider);
    std::cerr << "running " << config.input_types.size() << "x" << config.diversity_values.size()
              << "x" << config.min_topic_sizes.size() << " grid, " << config.repeats
              << " repeats (" << config.workers << " worker"
              << (config.workers == 1 ? "" : "s") << ")\n";
    auto result = run_grid(config, corpus, summaries, *embedding);
    for (const auto& [stage, ms] : extra_timings) result.timings_ms[stage] = ms;
    for (const auto& note : extra_notes) result.notes.push_back(note);
    emit_report(result, config.out_dir);

    for (const auto& note : result.notes) std::cerr << "note: " << note << "\n";
    std::cout << "records: " << result.records.size() << "\n"
              << "cells: " << result.cell_means.size() << "\n";
    for (const auto& mean : result.input_type_means) {
        std::cout << "input " << mean.input_type << ": mean diversity "
                  << (mean.mean_diversity ? util::format_double(*mean.mean_diversity) : "n/a")
                  << ", mean C_V "
                  << (mean.mean_coherence_cv ? util::format_double(*mean.mean_coherence_cv)
                                             : "n/a")
                  << "\n";
    }
    std::cout << "wrote " << (config.out_dir / "records.csv").string() << "\n"
              << "wrote " << (config.out_dir / "summary.csv").string() << "\n"
              << "wrote " << (config.out_dir / "diversity.svg").string() << "\n"
              << "wrote " << (config.out_dir / "coherence.svg").string() << "\n"
              << "wrote " << (config.out_dir / "run-manifest.json").string() << "\n";
}

void setup_grid(CLI::App& app) {
    auto cmd = app.add_subcommand("grid", "run the full experiment grid from a config file");
    auto config_path = std::make_shared<std::string>();
    auto offline = std::make_shared<bool>(false);
    auto out_override = std::make_shared<std::string>();
    cmd->add_option("--config", *config_path, "grid config INI")->required();
    cmd->add_flag("--offline", *offline, "force offline providers regardless of config");
    cmd->add_option("--out", *out_override, "override output.dir from the config");
    cmd->callback([config_path, offline, out_override] {
        run_grid_command(*config_path, *offline, *out_override);
    });
}

void setup_report(CLI::App& app) {
    auto cmd = app.add_subcommand("report", "rebuild summary.csv and charts from records.csv");
    auto records = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--records", *records, "records.csv produced by a grid run")->required();
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->callback([records, out] {
        report_from_records(*records, *out);
        std::cout << "wrote " << (std::filesystem::path(*out) / "summary.csv").string() << "\n"
                  << "wrote " << (std::filesystem::path(*out) / "diversity.svg").string() << "\n"
                  << "wrote " << (std::filesystem::path(*out) / "coherence.svg").string()
                  << "\n";
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"summit: summarization-augmented topic modeling"};
    app.require_subcommand(1);
    setup_ingest(app);
    setup_summarize(app);
    setup_embed(app);
    setup_model(app);
    setup_grid(app);
    setup_report(app);
    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
