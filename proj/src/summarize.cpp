#include "summit/summarize.hpp"

#include "summit/util/fsio.hpp"
#include "summit/util/parallel.hpp"
#include "summit/util/sha256.hpp"
#include "summit/util/text.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace summit {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(SummaryKind kind) {
    return kind == SummaryKind::short_form ? "short" : "long";
}

SummaryKind parse_summary_kind(std::string_view name) {
    if (name == "short") return SummaryKind::short_form;
    if (name == "long") return SummaryKind::long_form;
    throw std::invalid_argument("unknown summary kind: " + std::string(name));
}

PromptTemplate PromptTemplate::default_template() {
    PromptTemplate tmpl;
    tmpl.persona_instruction =
        "You are a summarization expert. You write faithful, self-contained "
        "summaries of documents, keeping the key entities and events.";
    tmpl.length_instruction =
        "Summarize the document below in {min}-{max} words. Respond with the "
        "summary only.";
    tmpl.exemplars[0] = {
        "The city council approved a plan on Tuesday to convert two downtown "
        "parking lots into public parks. Construction is expected to begin in "
        "the spring and cost about four million dollars, funded through an "
        "existing infrastructure bond. Local businesses raised concerns about "
        "parking capacity, and the council promised a shuttle pilot program.",
        "The city council approved converting two downtown parking lots into "
        "parks, a four million dollar bond-funded project starting in spring, "
        "alongside a shuttle pilot addressing business parking concerns."};
    tmpl.exemplars[1] = {
        "Researchers at a national laboratory reported a new battery "
        "chemistry that retains ninety percent of its capacity after three "
        "thousand charge cycles. The cells use an abundant sodium compound "
        "instead of lithium. The team cautioned that manufacturing at scale "
        "remains unproven and licensing talks are at an early stage.",
        "A national laboratory reported a sodium-based battery chemistry "
        "retaining ninety percent capacity after three thousand cycles, "
        "though large-scale manufacturing and licensing remain early and "
        "unproven."};
    return tmpl;
}

PromptTemplate PromptTemplate::from_json_file(const std::filesystem::path& path) {
    json obj = json::parse(util::read_file(path));
    PromptTemplate tmpl;
    tmpl.persona_instruction = obj.at("persona_instruction").get<std::string>();
    tmpl.length_instruction = obj.at("length_instruction").get<std::string>();
    const auto& ex = obj.at("exemplars");
    if (!ex.is_array() || ex.size() != 2) {
        throw std::runtime_error(path.string() + ": 'exemplars' must be an array of exactly 2");
    }
    for (std::size_t i = 0; i < 2; ++i) {
        tmpl.exemplars[i].document_text = ex[i].at("document").get<std::string>();
        tmpl.exemplars[i].summary_text = ex[i].at("summary").get<std::string>();
    }
    tmpl.validate();
    return tmpl;
}

void PromptTemplate::validate() const {
    if (util::trim(persona_instruction).empty()) {
        throw std::runtime_error("prompt template: persona_instruction is empty");
    }
    if (length_instruction.find("{min}") == std::string::npos ||
        length_instruction.find("{max}") == std::string::npos) {
        throw std::runtime_error(
            "prompt template: length_instruction must contain {min} and {max}");
    }
    for (const auto& ex : exemplars) {
        if (util::trim(ex.document_text).empty() || util::trim(ex.summary_text).empty()) {
            throw std::runtime_error("prompt template: exemplar with empty text");
        }
    }
}

std::string SummaryRecord::to_json() const {
    ordered_json obj;
    obj["doc_id"] = doc_id;
    obj["variant"] = summit::to_string(variant);
    obj["text"] = text;
    obj["word_count"] = word_count;
    obj["provider_id"] = provider_id;
    obj["prompt_hash"] = prompt_hash;
    obj["in_length_range"] = in_length_range;
    return obj.dump(2);
}

SummaryRecord SummaryRecord::from_json(const std::string& json_text) {
    json obj = json::parse(json_text);
    SummaryRecord rec;
    rec.doc_id = obj.at("doc_id").get<std::string>();
    rec.variant = parse_summary_kind(obj.at("variant").get<std::string>());
    rec.text = obj.at("text").get<std::string>();
    rec.word_count = obj.at("word_count").get<std::size_t>();
    rec.provider_id = obj.at("provider_id").get<std::string>();
    rec.prompt_hash = obj.at("prompt_hash").get<std::string>();
    rec.in_length_range = obj.at("in_length_range").get<bool>();
    return rec;
}

namespace {

std::string substitute_range(const std::string& instruction, const SummaryVariant& variant) {
    std::string out = instruction;
    auto replace_all = [&out](std::string_view what, const std::string& with) {
        std::size_t pos = 0;
        while ((pos = out.find(what, pos)) != std::string::npos) {
            out.replace(pos, what.size(), with);
            pos += with.size();
        }
    };
    replace_all("{min}", std::to_string(variant.min_words));
    replace_all("{max}", std::to_string(variant.max_words));
    return out;
}

} // namespace

std::string build_prompt(const Document& doc, const PromptTemplate& tmpl,
                         const SummaryVariant& variant) {
    if (util::trim(doc.text).empty()) {
        throw std::invalid_argument("build_prompt: document '" + doc.id + "' has empty text");
    }
    tmpl.validate();
    std::string prompt;
    prompt.reserve(tmpl.persona_instruction.size() + doc.text.size() + 1024);
    prompt += tmpl.persona_instruction;
    prompt += "\n\n";
    prompt += substitute_range(tmpl.length_instruction, variant);
    prompt += "\n\n";
    for (const auto& ex : tmpl.exemplars) {
        prompt += "Document: ";
        prompt += ex.document_text;
        prompt += "\nSummary: ";
        prompt += ex.summary_text;
        prompt += "\n\n";
    }
    prompt += "Document: ";
    prompt += doc.text;
    prompt += "\nSummary:";
    return prompt;
}

std::string extractive_fallback(std::string_view doc_text, const SummaryVariant& variant) {
    const std::size_t max_words = std::size_t(variant.max_words);

    // Leading sentences while the running total stays within max_words.
    std::size_t taken_end = 0; // byte offset past the last accepted sentence
    std::size_t word_total = 0;
    std::size_t pos = 0;
    bool took_any = false;
    while (pos < doc_text.size()) {
        std::size_t end = doc_text.find_first_of(".!?", pos);
        std::size_t sentence_end = (end == std::string_view::npos) ? doc_text.size() : end + 1;
        std::string_view sentence = doc_text.substr(pos, sentence_end - pos);
        std::size_t wc = util::count_words(sentence);
        if (wc > 0) {
            if (word_total + wc > max_words) break;
            word_total += wc;
            taken_end = sentence_end;
            took_any = true;
        } else {
            // Stray terminator or whitespace-only span; absorb it.
            if (took_any) taken_end = sentence_end;
        }
        pos = sentence_end;
    }
    if (took_any) {
        return util::trim(doc_text.substr(0, taken_end));
    }
    // First sentence alone exceeds the limit: clip it to max_words words.
    std::size_t end = doc_text.find_first_of(".!?");
    std::string_view first =
        doc_text.substr(0, end == std::string_view::npos ? doc_text.size() : end + 1);
    return util::first_words(first, max_words);
}

std::string ExtractiveProvider::complete(const CompletionContext& ctx) {
    return extractive_fallback(ctx.document_text, ctx.variant);
}

namespace {

/// Completion post-processing shared by all providers: trim, then drop a
/// leading "Summary:" label if the model echoed the cue.
std::string clean_completion(std::string_view raw) {
    std::string text = util::trim(raw);
    if (util::starts_with(text, "Summary:")) {
        text = util::trim(std::string_view(text).substr(8));
    }
    return text;
}

std::filesystem::path cache_path(const SummarizeOptions& opts, const std::string& provider_id,
                                 const std::string& prompt_hash) {
    return opts.cache_dir / provider_id / (prompt_hash + ".json");
}

/// Retries transport failures (provider exceptions) with exponential backoff.
std::string call_transport(CompletionProvider& provider, const CompletionContext& ctx,
                           const SummarizeOptions& opts) {
    int attempts = std::max(1, opts.max_attempts);
    double backoff_ms = opts.backoff_initial_ms;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(std::int64_t(backoff_ms)));
            backoff_ms *= 2;
        }
        try {
            return provider.complete(ctx);
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    throw std::runtime_error("provider '" + provider.id() + "' failed after " +
                             std::to_string(attempts) + " attempts: " + last_error);
}

/// An empty completion is data, not a transport error: retried once, then
/// surfaced.
std::string call_provider(CompletionProvider& provider, const CompletionContext& ctx,
                          const SummarizeOptions& opts) {
    std::string completion = clean_completion(call_transport(provider, ctx, opts));
    if (completion.empty()) {
        completion = clean_completion(call_transport(provider, ctx, opts));
        if (completion.empty()) {
            throw std::runtime_error("provider '" + provider.id() +
                                     "' returned an empty completion twice");
        }
    }
    return completion;
}

} // namespace

SummaryRecord summarize_document(const Document& doc, CompletionProvider& provider,
                                 const PromptTemplate& tmpl, const SummaryVariant& variant,
                                 std::size_t truncation_limit, const SummarizeOptions& opts) {
    Document clipped = truncate_words(doc, truncation_limit);
    std::string prompt = build_prompt(clipped, tmpl, variant);
    std::string prompt_hash = util::Sha256::hex_digest(prompt);

    const bool caching = !opts.cache_dir.empty();
    std::filesystem::path entry;
    if (caching) {
        entry = cache_path(opts, provider.id(), prompt_hash);
        if (std::filesystem::exists(entry)) {
            return SummaryRecord::from_json(util::read_file(entry));
        }
    }

    CompletionContext ctx{std::move(prompt), clipped.text, variant};
    std::string completion = call_provider(provider, ctx, opts);

    SummaryRecord rec;
    rec.doc_id = doc.id;
    rec.variant = variant.kind;
    rec.text = std::move(completion);
    rec.word_count = util::count_words(rec.text);
    rec.provider_id = provider.id();
    rec.prompt_hash = std::move(prompt_hash);
    rec.in_length_range = rec.word_count >= std::size_t(variant.min_words) &&
                          rec.word_count <= std::size_t(variant.max_words);
    if (caching) {
        util::write_file_atomic(entry, rec.to_json());
    }
    return rec;
}

SummarizeResult summarize_corpus(const Corpus& corpus, CompletionProvider& provider,
                                 const PromptTemplate& tmpl, const SummaryVariant& variant,
                                 std::size_t truncation_limit, const SummarizeOptions& opts) {
    if (corpus.documents.empty()) {
        throw std::invalid_argument("summarize_corpus: empty corpus");
    }

    SummarizeResult result;
    result.records.resize(corpus.size());
    std::atomic<std::size_t> failures{0};
    ExtractiveProvider fallback;

    unsigned threads = opts.concurrency == 0 ? 4 : opts.concurrency;
    util::parallel_for(corpus.size(), threads, [&](std::size_t i) {
        const Document& doc = corpus.documents[i];
        try {
            result.records[i] =
                summarize_document(doc, provider, tmpl, variant, truncation_limit, opts);
        } catch (const std::exception&) {
            if (!opts.substitute_fallback_on_failure) throw;
            failures.fetch_add(1, std::memory_order_relaxed);
            result.records[i] =
                summarize_document(doc, fallback, tmpl, variant, truncation_limit, opts);
        }
    });

    result.provider_failures = failures.load();
    double rate = double(result.provider_failures) / double(corpus.size());
    if (rate > opts.max_failure_rate) {
        throw std::runtime_error(
            "summarize_corpus: provider failure rate " + util::format_double(rate) +
            " exceeds " + util::format_double(opts.max_failure_rate) + " (" +
            std::to_string(result.provider_failures) + "/" + std::to_string(corpus.size()) +
            " documents)");
    }

    result.summary_corpus.name = corpus.name + "-" + to_string(variant.kind);
    result.summary_corpus.source_format = corpus.source_format;
    result.summary_corpus.documents.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& rec = result.records[i];
        if (!rec.in_length_range) ++result.out_of_range;
        result.summary_corpus.documents.push_back(
            Document::make(corpus.documents[i].id, rec.text, corpus.documents[i].label));
    }
    return result;
}

} // namespace summit
