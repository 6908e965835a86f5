#pragma once

#include "summit/corpus.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace summit {

enum class SummaryKind { short_form, long_form };

std::string to_string(SummaryKind kind); // "short" / "long"
SummaryKind parse_summary_kind(std::string_view name);

struct SummaryVariant {
    SummaryKind kind = SummaryKind::short_form;
    int min_words = 20;
    int max_words = 30;

    static SummaryVariant short_variant() { return {SummaryKind::short_form, 20, 30}; }
    static SummaryVariant long_variant() { return {SummaryKind::long_form, 60, 80}; }
    static SummaryVariant for_kind(SummaryKind kind) {
        return kind == SummaryKind::short_form ? short_variant() : long_variant();
    }
};

struct Exemplar {
    std::string document_text;
    std::string summary_text;
};

struct PromptTemplate {
    std::string persona_instruction;
    /// "{min}" and "{max}" are substituted with the variant's word range.
    std::string length_instruction;
    std::array<Exemplar, 2> exemplars;

    static PromptTemplate default_template();
    static PromptTemplate from_json_file(const std::filesystem::path& path);
    void validate() const;
};

struct SummaryRecord {
    std::string doc_id;
    SummaryKind variant = SummaryKind::short_form;
    std::string text;
    std::size_t word_count = 0;
    std::string provider_id;
    std::string prompt_hash;
    bool in_length_range = false;

    std::string to_json() const;
    static SummaryRecord from_json(const std::string& json_text);
};

/// Everything a provider may need. HTTP providers read only the prompt;
/// the extractive fallback reads the document text directly so it does not
/// have to parse prompts.
struct CompletionContext {
    std::string prompt;
    std::string document_text;
    SummaryVariant variant;
};

class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    /// Stable, filesystem-safe identifier; names the cache subdirectory.
    virtual std::string id() const = 0;
    /// Returns the raw completion. Throws on transport failure.
    virtual std::string complete(const CompletionContext& ctx) = 0;
};

/// Leading sentences of doc_text (split on ., !, ?) while the total stays
/// within variant.max_words; a first sentence that alone exceeds the limit is
/// clipped to exactly max_words words.
std::string extractive_fallback(std::string_view doc_text, const SummaryVariant& variant);

class ExtractiveProvider : public CompletionProvider {
public:
    std::string id() const override { return "extractive"; }
    std::string complete(const CompletionContext& ctx) override;
};

struct HttpProviderConfig {
    std::string base_url;                       // "http://host:port" or "https://host"
    std::string endpoint_path = "/v1/completions";
    std::string model;
    double temperature = 0.0;
    int max_tokens = 160;
    std::string auth_header = "Authorization"; // header carrying the key
    std::string api_key_env;                   // env var holding the key; empty = no auth
    int timeout_seconds = 60;
};

class HttpProvider : public CompletionProvider {
public:
    explicit HttpProvider(HttpProviderConfig config);
    std::string id() const override;
    std::string complete(const CompletionContext& ctx) override;

private:
    HttpProviderConfig config_;
};

struct SummarizeOptions {
    /// Cache root; empty disables caching. Layout:
    /// <cache_dir>/<provider_id>/<prompt_hash>.json
    std::filesystem::path cache_dir;
    int max_attempts = 3;          // transport retries with exponential backoff
    double backoff_initial_ms = 100.0;
    unsigned concurrency = 4;      // bounded parallelism in summarize_corpus
    /// When a document still fails after retries, substitute the extractive
    /// fallback instead of dropping it. Runs abort anyway past the failure
    /// rate threshold.
    bool substitute_fallback_on_failure = true;
    double max_failure_rate = 0.05;
};

std::string build_prompt(const Document& doc, const PromptTemplate& tmpl,
                         const SummaryVariant& variant);

SummaryRecord summarize_document(const Document& doc, CompletionProvider& provider,
                                 const PromptTemplate& tmpl, const SummaryVariant& variant,
                                 std::size_t truncation_limit,
                                 const SummarizeOptions& opts = {});

struct SummarizeResult {
    std::vector<SummaryRecord> records; // corpus order
    Corpus summary_corpus;              // same ids/labels, texts are the summaries
    std::size_t provider_failures = 0;  // documents that needed fallback substitution
    std::size_t out_of_range = 0;       // records with in_length_range == false
};

SummarizeResult summarize_corpus(const Corpus& corpus, CompletionProvider& provider,
                                 const PromptTemplate& tmpl, const SummaryVariant& variant,
                                 std::size_t truncation_limit,
                                 const SummarizeOptions& opts = {});

/// Default document truncation before prompting, in words. Approximates the
/// provider context budget left after the template (a 4096-token window
/// holds roughly 3000 words of input).
inline constexpr std::size_t kDefaultTruncationWords = 3000;

} // namespace summit
