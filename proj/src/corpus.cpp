#include "summit/corpus.hpp"

#include "summit/util/csv.hpp"
#include "summit/util/fsio.hpp"
#include "summit/util/sha256.hpp"
#include "summit/util/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace summit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

Document Document::make(std::string id, std::string text, std::optional<std::string> label) {
    Document doc;
    doc.id = std::move(id);
    doc.text = std::move(text);
    doc.label = std::move(label);
    doc.word_count = util::count_words(doc.text);
    return doc;
}

SourceFormat parse_source_format(std::string_view name) {
    if (name == "jsonl") return SourceFormat::jsonl;
    if (name == "csv") return SourceFormat::csv;
    if (name == "dir" || name == "dir_of_text_files") return SourceFormat::dir_of_text_files;
    throw std::invalid_argument("unknown source format: " + std::string(name));
}

std::string to_string(SourceFormat format) {
    switch (format) {
    case SourceFormat::jsonl: return "jsonl";
    case SourceFormat::csv: return "csv";
    case SourceFormat::dir_of_text_files: return "dir";
    }
    return "jsonl";
}

namespace {

std::string default_name(const fs::path& path, const LoadOptions& opts) {
    if (!opts.name.empty()) return opts.name;
    std::string stem = path.stem().string();
    return stem.empty() ? std::string("corpus") : stem;
}

void check_unique_ids(const Corpus& corpus) {
    std::unordered_set<std::string> seen;
    for (const auto& doc : corpus.documents) {
        if (!seen.insert(doc.id).second) {
            throw std::runtime_error("corpus '" + corpus.name + "': duplicate document id '" +
                                     doc.id + "'");
        }
    }
}

Corpus load_jsonl(const fs::path& path, const LoadOptions& opts) {
    Corpus corpus;
    corpus.name = default_name(path, opts);
    corpus.source_format = SourceFormat::jsonl;

    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": malformed JSON record: " + e.what());
        }
        if (!obj.is_object() || !obj.contains(opts.text_field) ||
            !obj[opts.text_field].is_string()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": record has no string field '" + opts.text_field + "'");
        }
        std::string id;
        if (obj.contains("id") && obj["id"].is_string()) {
            id = obj["id"].get<std::string>();
        } else {
            id = corpus.name + "-" + std::to_string(index);
        }
        std::optional<std::string> label;
        if (opts.label_field && obj.contains(*opts.label_field) &&
            !obj[*opts.label_field].is_null()) {
            const auto& lf = obj[*opts.label_field];
            label = lf.is_string() ? lf.get<std::string>() : lf.dump();
        }
        corpus.documents.push_back(
            Document::make(std::move(id), obj[opts.text_field].get<std::string>(), std::move(label)));
        ++index;
    }
    return corpus;
}

Corpus load_csv(const fs::path& path, const LoadOptions& opts) {
    Corpus corpus;
    corpus.name = default_name(path, opts);
    corpus.source_format = SourceFormat::csv;

    auto rows = util::parse_csv(util::read_file(path));
    if (rows.empty()) throw std::runtime_error(path.string() + ": CSV has no header row");

    const auto& header = rows.front();
    auto column_of = [&](const std::string& field) -> std::ptrdiff_t {
        auto it = std::find(header.begin(), header.end(), field);
        return it == header.end() ? -1 : it - header.begin();
    };
    std::ptrdiff_t text_col = column_of(opts.text_field);
    if (text_col < 0) {
        throw std::runtime_error(path.string() + ": CSV header has no column '" +
                                 opts.text_field + "'");
    }
    std::ptrdiff_t label_col = opts.label_field ? column_of(*opts.label_field) : -1;
    if (opts.label_field && label_col < 0) {
        throw std::runtime_error(path.string() + ": CSV header has no column '" +
                                 *opts.label_field + "'");
    }
    std::ptrdiff_t id_col = column_of("id");

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (std::size_t(text_col) >= row.size()) {
            throw std::runtime_error(path.string() + ": record " + std::to_string(r) +
                                     " has too few fields");
        }
        std::string id = (id_col >= 0 && std::size_t(id_col) < row.size() &&
                          !row[id_col].empty())
                             ? row[id_col]
                             : corpus.name + "-" + std::to_string(r - 1);
        std::optional<std::string> label;
        if (label_col >= 0 && std::size_t(label_col) < row.size()) label = row[label_col];
        corpus.documents.push_back(Document::make(std::move(id), row[text_col], std::move(label)));
    }
    return corpus;
}

Corpus load_dir(const fs::path& path, const LoadOptions& opts) {
    Corpus corpus;
    corpus.name = default_name(path, opts);
    corpus.source_format = SourceFormat::dir_of_text_files;

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::unordered_set<std::string> used_ids;
    for (const auto& file : files) {
        std::string id = file.stem().string();
        std::optional<std::string> label;
        if (file.has_parent_path() && file.parent_path() != path) {
            label = file.parent_path().filename().string();
        }
        // File stems can collide across label directories; qualify then number.
        if (used_ids.count(id) && label) id = *label + "-" + id;
        while (used_ids.count(id)) id += "_";
        used_ids.insert(id);
        corpus.documents.push_back(Document::make(std::move(id), util::read_file(file), std::move(label)));
    }
    return corpus;
}

} // namespace

Corpus load_corpus(const fs::path& path, SourceFormat format, const LoadOptions& opts) {
    if (!fs::exists(path)) {
        throw std::runtime_error("path does not exist: " + path.string());
    }
    Corpus corpus;
    switch (format) {
    case SourceFormat::jsonl: corpus = load_jsonl(path, opts); break;
    case SourceFormat::csv: corpus = load_csv(path, opts); break;
    case SourceFormat::dir_of_text_files: corpus = load_dir(path, opts); break;
    }
    if (corpus.documents.empty()) {
        throw std::runtime_error("empty corpus: " + path.string());
    }
    check_unique_ids(corpus);
    return corpus;
}

Document truncate_words(const Document& doc, std::size_t max_words) {
    if (max_words < 1) throw std::invalid_argument("truncate_words: max_words must be >= 1");
    if (doc.word_count <= max_words) return doc;
    return Document::make(doc.id, util::first_words(doc.text, max_words), doc.label);
}

namespace {

inline bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c >= 0x80;
}

inline bool all_digits(std::string_view s) {
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    return tokenize(text, Stopwords::default_english());
}

std::vector<std::string> tokenize(std::string_view text, const Stopwords& stopwords) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 2 && !all_digits(current) && !stopwords.contains(current)) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            current.push_back((c >= 'A' && c <= 'Z') ? char(c + 32) : char(c));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::int32_t Vocabulary::index_of(std::string_view term) const {
    auto it = term_index.find(std::string(term));
    return it == term_index.end() ? -1 : it->second;
}

std::int64_t Vocabulary::doc_freq_of(std::string_view term) const {
    auto i = index_of(term);
    return i < 0 ? 0 : doc_freq[std::size_t(i)];
}

std::int64_t Vocabulary::total_freq_of(std::string_view term) const {
    auto i = index_of(term);
    return i < 0 ? 0 : total_freq[std::size_t(i)];
}

std::string Vocabulary::to_json() const {
    ordered_json out;
    out["terms"] = terms;
    out["doc_freq"] = doc_freq;
    out["total_freq"] = total_freq;
    return out.dump();
}

Vocabulary build_vocabulary(const Corpus& corpus) {
    return build_vocabulary(corpus, Stopwords::default_english());
}

Vocabulary build_vocabulary(const Corpus& corpus, const Stopwords& stopwords) {
    if (corpus.documents.empty()) throw std::invalid_argument("build_vocabulary: empty corpus");

    std::map<std::string, std::pair<std::int64_t, std::int64_t>> counts; // term -> (df, tf)
    for (const auto& doc : corpus.documents) {
        auto tokens = tokenize(doc.text, stopwords);
        std::unordered_set<std::string_view> seen;
        for (const auto& t : tokens) {
            auto& entry = counts[t];
            entry.second += 1;
            if (seen.insert(t).second) entry.first += 1;
        }
    }
    if (counts.empty()) {
        throw std::runtime_error("build_vocabulary: empty vocabulary (no document produced tokens)");
    }

    Vocabulary vocab;
    vocab.terms.reserve(counts.size());
    vocab.doc_freq.reserve(counts.size());
    vocab.total_freq.reserve(counts.size());
    std::int32_t index = 0;
    for (const auto& [term, entry] : counts) {
        vocab.terms.push_back(term);
        vocab.doc_freq.push_back(entry.first);
        vocab.total_freq.push_back(entry.second);
        vocab.term_index.emplace(term, index++);
    }
    return vocab;
}

void save_corpus_jsonl(const Corpus& corpus, const fs::path& path) {
    std::string out;
    for (const auto& doc : corpus.documents) {
        ordered_json obj;
        obj["id"] = doc.id;
        obj["text"] = doc.text;
        if (doc.label) obj["label"] = *doc.label;
        out += obj.dump();
        out.push_back('\n');
    }
    util::write_file_atomic(path, out);
}

std::string corpus_content_hash(const Corpus& corpus) {
    util::Sha256 hasher;
    for (const auto& doc : corpus.documents) {
        hasher.update(doc.id);
        hasher.update("\x1f", 1);
        hasher.update(doc.text);
        hasher.update("\x1e", 1);
    }
    auto digest = hasher.digest();
    return util::to_hex(digest.data(), digest.size());
}

} // namespace summit
