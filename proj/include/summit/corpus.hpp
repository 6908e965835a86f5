#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace summit {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> label;
    std::size_t word_count = 0;

    /// word_count is always derived from text (whitespace tokens); construct
    /// through here so the two never drift.
    static Document make(std::string id, std::string text,
                         std::optional<std::string> label = std::nullopt);
};

enum class SourceFormat { jsonl, csv, dir_of_text_files };

SourceFormat parse_source_format(std::string_view name);
std::string to_string(SourceFormat format);

struct Corpus {
    std::string name;
    std::vector<Document> documents;
    SourceFormat source_format = SourceFormat::jsonl;

    std::size_t size() const { return documents.size(); }
};

struct LoadOptions {
    std::string text_field = "text";
    std::optional<std::string> label_field;
    /// Corpus name; defaults to the path stem. Also the prefix for generated
    /// document ids.
    std::string name;
};

Corpus load_corpus(const std::filesystem::path& path, SourceFormat format,
                   const LoadOptions& opts = {});

/// First min(word_count, max_words) whitespace tokens rejoined with single
/// spaces. Id and label are preserved.
Document truncate_words(const Document& doc, std::size_t max_words);

class Stopwords {
public:
    static const Stopwords& default_english();
    static Stopwords from_file(const std::filesystem::path& path);
    static Stopwords from_terms(const std::vector<std::string>& terms);

    bool contains(std::string_view term) const;
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

/// Lowercases, splits on non-alphanumeric characters (bytes >= 0x80 are
/// treated as word characters so UTF-8 sequences survive), drops tokens
/// shorter than 2 characters, purely numeric tokens, and stopwords.
std::vector<std::string> tokenize(std::string_view text);
std::vector<std::string> tokenize(std::string_view text, const Stopwords& stopwords);

struct Vocabulary {
    std::vector<std::string> terms;  // sorted lexicographically, unique
    std::unordered_map<std::string, std::int32_t> term_index;
    std::vector<std::int64_t> doc_freq;    // aligned with terms
    std::vector<std::int64_t> total_freq;  // aligned with terms

    std::int32_t index_of(std::string_view term) const;
    std::int64_t doc_freq_of(std::string_view term) const;
    std::int64_t total_freq_of(std::string_view term) const;

    std::string to_json() const;
};

Vocabulary build_vocabulary(const Corpus& corpus);
Vocabulary build_vocabulary(const Corpus& corpus, const Stopwords& stopwords);

/// Canonical corpus persistence: one JSON object per line with id, text and
/// optional label. Reload through load_corpus(..., jsonl).
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// SHA-256 over ids and texts in order. Identifies corpus content in
/// embedding files and run manifests.
std::string corpus_content_hash(const Corpus& corpus);

} // namespace summit
