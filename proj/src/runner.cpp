#include "summit/runner.hpp"

#include "summit/util/csv.hpp"
#include "summit/util/fsio.hpp"
#include "summit/util/ini.hpp"
#include "summit/util/parallel.hpp"
#include "summit/util/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace summit {

using nlohmann::ordered_json;

namespace {

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "dataset.name", "dataset.path", "dataset.format", "dataset.text_field",
        "dataset.label_field", "dataset.truncation_limit",
        "grid.input_types", "grid.diversity_values", "grid.min_topic_sizes", "grid.repeats",
        "grid.base_seed", "grid.window_size", "grid.workers",
        "umap.n_neighbors", "umap.n_components", "umap.min_dist", "umap.spread",
        "umap.n_epochs", "umap.negative_sample_rate", "umap.initial_learning_rate",
        "umap.metric",
        "hdbscan.min_samples",
        "provider.mode", "provider.fallback_dim", "provider.fallback_seed",
        "provider.summary_concurrency", "provider.summary_max_attempts",
        "provider.embedding_batch_size",
        "provider.completion_base_url", "provider.completion_endpoint",
        "provider.completion_model", "provider.completion_temperature",
        "provider.completion_max_tokens", "provider.completion_auth_header",
        "provider.completion_api_key_env", "provider.completion_timeout_seconds",
        "provider.embedding_base_url", "provider.embedding_endpoint",
        "provider.embedding_model", "provider.embedding_auth_header",
        "provider.embedding_api_key_env", "provider.embedding_timeout_seconds",
        "provider.embedding_dim",
        "output.dir", "output.cache_dir",
    };
    return keys;
}

double parse_double_or_throw(const std::string& text, const std::string& key) {
    double value = 0.0;
    if (!util::parse_double(text, value)) {
        throw std::runtime_error("config key '" + key + "' has a non-numeric entry: '" +
                                 text + "'");
    }
    return value;
}

long long parse_int_or_throw(const std::string& text, const std::string& key) {
    long long value = 0;
    if (!util::parse_int(text, value)) {
        throw std::runtime_error("config key '" + key + "' has a non-integer entry: '" +
                                 text + "'");
    }
    return value;
}

} // namespace

GridConfig GridConfig::from_ini(const std::string& content) {
    auto ini = util::IniFile::parse(content);
    for (const auto& key : ini.keys()) {
        if (known_config_keys().count(key) == 0) {
            throw std::runtime_error("unknown config key '" + key + "'");
        }
    }

    GridConfig config;
    config.dataset_name = ini.get("dataset.name", "");
    config.dataset_path = ini.get("dataset.path", "");
    config.dataset_format = parse_source_format(ini.get("dataset.format", "jsonl"));
    config.text_field = ini.get("dataset.text_field", "text");
    config.label_field = ini.get("dataset.label_field", "");
    config.truncation_limit =
        std::size_t(ini.get_int("dataset.truncation_limit", long(kDefaultTruncationWords)));

    if (ini.has("grid.input_types")) {
        config.input_types = ini.get_list("grid.input_types");
    }
    if (ini.has("grid.diversity_values")) {
        config.diversity_values.clear();
        for (const auto& item : ini.get_list("grid.diversity_values")) {
            config.diversity_values.push_back(parse_double_or_throw(item, "grid.diversity_values"));
        }
    }
    for (const auto& item : ini.get_list("grid.min_topic_sizes")) {
        config.min_topic_sizes.push_back(parse_int_or_throw(item, "grid.min_topic_sizes"));
    }
    config.repeats = int(ini.get_int("grid.repeats", 3));
    config.base_seed = std::uint64_t(ini.get_int("grid.base_seed", 42));
    config.window_size = int(ini.get_int("grid.window_size", 110));
    config.workers = unsigned(ini.get_int("grid.workers", 1));

    config.umap.n_neighbors = int(ini.get_int("umap.n_neighbors", config.umap.n_neighbors));
    config.umap.n_components = int(ini.get_int("umap.n_components", config.umap.n_components));
    config.umap.min_dist = ini.get_double("umap.min_dist", config.umap.min_dist);
    config.umap.spread = ini.get_double("umap.spread", config.umap.spread);
    config.umap.n_epochs = int(ini.get_int("umap.n_epochs", config.umap.n_epochs));
    config.umap.negative_sample_rate =
        int(ini.get_int("umap.negative_sample_rate", config.umap.negative_sample_rate));
    config.umap.initial_learning_rate =
        ini.get_double("umap.initial_learning_rate", config.umap.initial_learning_rate);
    config.umap.metric = parse_metric(ini.get("umap.metric", to_string(config.umap.metric)));

    config.hdbscan_min_samples = ini.get_int("hdbscan.min_samples", 0);

    auto& provider = config.provider;
    provider.mode = ini.get("provider.mode", "offline");
    provider.fallback_dim = std::size_t(ini.get_int("provider.fallback_dim", 256));
    provider.fallback_seed = std::uint64_t(ini.get_int("provider.fallback_seed", 42));
    provider.summary_concurrency = unsigned(ini.get_int("provider.summary_concurrency", 4));
    provider.summary_max_attempts = int(ini.get_int("provider.summary_max_attempts", 3));
    provider.embedding_batch_size = std::size_t(ini.get_int("provider.embedding_batch_size", 32));
    provider.completion.base_url = ini.get("provider.completion_base_url", "");
    provider.completion.endpoint_path =
        ini.get("provider.completion_endpoint", provider.completion.endpoint_path);
    provider.completion.model = ini.get("provider.completion_model", "");
    provider.completion.temperature = ini.get_double("provider.completion_temperature", 0.0);
    provider.completion.max_tokens = int(ini.get_int("provider.completion_max_tokens", 160));
    provider.completion.auth_header =
        ini.get("provider.completion_auth_header", provider.completion.auth_header);
    provider.completion.api_key_env = ini.get("provider.completion_api_key_env", "");
    provider.completion.timeout_seconds =
        int(ini.get_int("provider.completion_timeout_seconds", 60));
    provider.embedding.base_url = ini.get("provider.embedding_base_url", "");
    provider.embedding.endpoint_path =
        ini.get("provider.embedding_endpoint", provider.embedding.endpoint_path);
    provider.embedding.model = ini.get("provider.embedding_model", "");
    provider.embedding.auth_header =
        ini.get("provider.embedding_auth_header", provider.embedding.auth_header);
    provider.embedding.api_key_env = ini.get("provider.embedding_api_key_env", "");
    provider.embedding.timeout_seconds =
        int(ini.get_int("provider.embedding_timeout_seconds", 60));
    provider.embedding.dim = std::size_t(ini.get_int("provider.embedding_dim", 0));

    config.out_dir = ini.get("output.dir", "");
    config.cache_dir = ini.get("output.cache_dir", "");

    config.validate();
    return config;
}

GridConfig GridConfig::from_ini_file(const std::filesystem::path& path) {
    return from_ini(util::read_file(path));
}

void GridConfig::validate() const {
    if (dataset_name.empty()) {
        throw std::runtime_error("config: dataset.name is required");
    }
    if (input_types.empty()) {
        throw std::runtime_error("config: grid.input_types must not be empty");
    }
    std::set<std::string> seen;
    for (const auto& type : input_types) {
        if (type != "full" && type != "short" && type != "long") {
            throw std::runtime_error("config: invalid input type '" + type + "'");
        }
        if (!seen.insert(type).second) {
            throw std::runtime_error("config: duplicate input type '" + type + "'");
        }
    }
    if (diversity_values.empty()) {
        throw std::runtime_error("config: grid.diversity_values must not be empty");
    }
    for (double d : diversity_values) {
        if (!(d >= 0.0 && d <= 1.0)) {
            throw std::runtime_error("config: diversity values must lie in [0, 1]");
        }
    }
    if (min_topic_sizes.empty()) {
        throw std::runtime_error("config: grid.min_topic_sizes is required");
    }
    for (auto size : min_topic_sizes) {
        if (size < 2) {
            throw std::runtime_error("config: min topic sizes must be >= 2");
        }
    }
    if (repeats < 1) {
        throw std::runtime_error("config: grid.repeats must be >= 1");
    }
    if (window_size < 1) {
        throw std::runtime_error("config: grid.window_size must be >= 1");
    }
    if (workers < 1) {
        throw std::runtime_error("config: grid.workers must be >= 1");
    }
    if (provider.mode != "offline" && provider.mode != "http") {
        throw std::runtime_error("config: provider.mode must be 'offline' or 'http'");
    }
}

Aggregation aggregate(const std::vector<MetricsRecord>& records) {
    if (records.empty()) {
        throw std::runtime_error("aggregate: no records");
    }

    struct Acc {
        double diversity_sum = 0.0;
        double coherence_sum = 0.0;
        int n = 0;
    };

    Aggregation agg;
    std::map<std::tuple<std::string, double, std::int64_t>, std::size_t> cell_index;
    std::vector<Acc> accs;
    for (const auto& record : records) {
        auto key = std::make_tuple(record.input_type, record.diversity_param,
                                   record.min_topic_size);
        auto it = cell_index.find(key);
        std::size_t idx;
        if (it == cell_index.end()) {
            idx = agg.cells.size();
            cell_index.emplace(key, idx);
            CellMean cell;
            cell.input_type = record.input_type;
            cell.diversity_param = record.diversity_param;
            cell.min_topic_size = record.min_topic_size;
            agg.cells.push_back(cell);
            accs.push_back({});
        } else {
            idx = it->second;
        }
        auto& cell = agg.cells[idx];
        auto& acc = accs[idx];
        cell.n_records += 1;
        if (record.degenerate || !record.diversity || !record.coherence_cv) {
            cell.n_excluded += 1;
        } else {
            acc.diversity_sum += *record.diversity;
            acc.coherence_sum += *record.coherence_cv;
            acc.n += 1;
        }
    }
    for (std::size_t i = 0; i < agg.cells.size(); ++i) {
        if (accs[i].n > 0) {
            agg.cells[i].mean_diversity = accs[i].diversity_sum / accs[i].n;
            agg.cells[i].mean_coherence_cv = accs[i].coherence_sum / accs[i].n;
        }
    }

    std::map<std::string, std::size_t> type_index;
    std::vector<Acc> type_accs;
    for (const auto& cell : agg.cells) {
        auto it = type_index.find(cell.input_type);
        std::size_t idx;
        if (it == type_index.end()) {
            idx = agg.input_types.size();
            type_index.emplace(cell.input_type, idx);
            InputTypeMean mean;
            mean.input_type = cell.input_type;
            agg.input_types.push_back(mean);
            type_accs.push_back({});
        } else {
            idx = it->second;
        }
        agg.input_types[idx].n_cells += 1;
        if (cell.mean_diversity && cell.mean_coherence_cv) {
            agg.input_types[idx].n_defined_cells += 1;
            type_accs[idx].diversity_sum += *cell.mean_diversity;
            type_accs[idx].coherence_sum += *cell.mean_coherence_cv;
            type_accs[idx].n += 1;
        }
    }
    for (std::size_t i = 0; i < agg.input_types.size(); ++i) {
        if (type_accs[i].n > 0) {
            agg.input_types[i].mean_diversity = type_accs[i].diversity_sum / type_accs[i].n;
            agg.input_types[i].mean_coherence_cv = type_accs[i].coherence_sum / type_accs[i].n;
        }
    }
    return agg;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace

GridResult run_grid(const GridConfig& config, const Corpus& full_corpus,
                    const std::map<std::string, const Corpus*>& summary_corpora,
                    EmbeddingProvider& provider) {
    config.validate();
    if (full_corpus.size() == 0) {
        throw std::runtime_error("run_grid: empty corpus");
    }

    std::map<std::string, const Corpus*> inputs;
    for (const auto& type : config.input_types) {
        if (type == "full") {
            inputs[type] = &full_corpus;
            continue;
        }
        auto it = summary_corpora.find(type);
        if (it == summary_corpora.end() || it->second == nullptr) {
            throw std::runtime_error("run_grid: missing summary corpus for input type '" +
                                     type + "'");
        }
        if (it->second->size() != full_corpus.size()) {
            throw std::runtime_error("run_grid: summary corpus for '" + type +
                                     "' is not aligned with the full corpus");
        }
        inputs[type] = it->second;
    }

    GridResult result;
    result.dataset_name = config.dataset_name;
    result.input_types = config.input_types;
    result.diversity_values = config.diversity_values;
    result.min_topic_sizes = config.min_topic_sizes;
    result.repeats = config.repeats;
    result.base_seed = config.base_seed;
    result.corpus_hash = corpus_content_hash(full_corpus);
    result.embedding_provider_id = provider.id();

    std::map<std::string, EmbeddingMatrix> embeddings;
    EmbedOptions embed_opts;
    embed_opts.batch_size = config.provider.embedding_batch_size;
    for (const auto& type : config.input_types) {
        auto start = std::chrono::steady_clock::now();
        embeddings.emplace(type, embed_corpus(*inputs.at(type), provider, embed_opts));
        result.timings_ms["embed_" + type] = elapsed_ms(start);
    }

    struct RunSpec {
        std::string input_type;
        double diversity = 0.0;
        std::int64_t min_topic_size = 0;
        int repeat = 0;
    };
    std::vector<RunSpec> specs;
    for (const auto& type : config.input_types) {
        for (double diversity : config.diversity_values) {
            for (auto size : config.min_topic_sizes) {
                for (int repeat = 0; repeat < config.repeats; ++repeat) {
                    specs.push_back({type, diversity, size, repeat});
                }
            }
        }
    }

    ReductionCache cache;
    result.records.resize(specs.size());
    std::vector<std::string> run_notes(specs.size());
    auto grid_start = std::chrono::steady_clock::now();

    util::parallel_for(specs.size(), config.workers, [&](std::size_t i) {
        const auto& spec = specs[i];
        const Corpus& input = *inputs.at(spec.input_type);
        MetricsRecord record;
        try {
            TopicModelOptions opts;
            opts.umap = config.umap;
            opts.hdbscan.min_cluster_size = int(spec.min_topic_size);
            opts.hdbscan.min_samples = int(config.hdbscan_min_samples);
            opts.diversity = spec.diversity;
            opts.seed = config.base_seed + std::uint64_t(spec.repeat);

            auto model = fit_topic_model(input, full_corpus, embeddings.at(spec.input_type),
                                         provider, opts, &cache);
            WindowStats stats;
            stats.window_size = config.window_size;
            if (!model.degenerate) {
                std::set<std::string> targets;
                for (const auto& topic : model.keywords) {
                    for (const auto& kw : topic) targets.insert(kw.term);
                }
                stats = build_window_stats(
                    full_corpus, config.window_size,
                    std::vector<std::string>(targets.begin(), targets.end()));
            }
            record = evaluate(model, full_corpus, stats);
        } catch (const std::exception& e) {
            record = MetricsRecord{};
            record.diversity_param = spec.diversity;
            record.min_topic_size = spec.min_topic_size;
            record.seed = std::int64_t(config.base_seed) + spec.repeat;
            record.n_topics = 0;
            record.degenerate = true;
            run_notes[i] = "input=" + spec.input_type +
                           " diversity=" + util::format_double(spec.diversity) +
                           " min_topic_size=" + std::to_string(spec.min_topic_size) +
                           " seed=" + std::to_string(config.base_seed + std::uint64_t(spec.repeat)) +
                           " failed: " + e.what();
        }
        record.dataset = config.dataset_name;
        record.input_type = spec.input_type;
        result.records[i] = std::move(record);
    });
    result.timings_ms["grid_runs"] = elapsed_ms(grid_start);

    for (auto& note : run_notes) {
        if (!note.empty()) result.notes.push_back(std::move(note));
    }
    for (const auto& record : result.records) {
        result.missing_term_events += record.missing_terms;
    }

    auto agg = aggregate(result.records);
    result.cell_means = std::move(agg.cells);
    result.input_type_means = std::move(agg.input_types);
    return result;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace {

std::string summary_csv(const GridResult& result) {
    std::string out =
        "scope,input_type,diversity_param,min_topic_size,n_records,n_excluded,"
        "mean_diversity,mean_coherence_cv\n";
    for (const auto& cell : result.cell_means) {
        out += util::csv_join({
                   "cell",
                   cell.input_type,
                   util::format_double(cell.diversity_param),
                   std::to_string(cell.min_topic_size),
                   std::to_string(cell.n_records),
                   std::to_string(cell.n_excluded),
                   cell.mean_diversity ? util::format_double(*cell.mean_diversity) : "",
                   cell.mean_coherence_cv ? util::format_double(*cell.mean_coherence_cv) : "",
               });
    }
    for (const auto& mean : result.input_type_means) {
        out += util::csv_join({
                   "input_type",
                   mean.input_type,
                   "",
                   "",
                   std::to_string(mean.n_defined_cells),
                   std::to_string(mean.n_cells - mean.n_defined_cells),
                   mean.mean_diversity ? util::format_double(*mean.mean_diversity) : "",
                   mean.mean_coherence_cv ? util::format_double(*mean.mean_coherence_cv) : "",
               });
    }
    return out;
}

struct ChartSeries {
    std::string input_type;
    std::vector<std::optional<double>> values; // aligned with cell labels
};

const std::vector<std::string>& chart_palette() {
    static const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c",
                                                     "#9467bd", "#8c564b"};
    return palette;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string svg_chart(const std::string& title, const std::vector<std::string>& cell_labels,
                      const std::vector<ChartSeries>& series) {
    const double width = 760, height = 440;
    const double left = 64, right = width - 180, top = 48, bottom = height - 96;
    const double plot_w = right - left, plot_h = bottom - top;
    const std::size_t n = cell_labels.size();

    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        for (const auto& v : s.values) {
            if (v) {
                ymin = std::min(ymin, *v);
                ymax = std::max(ymax, *v);
            }
        }
    }
    if (!(ymin <= ymax)) {
        ymin = 0.0;
        ymax = 1.0;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.05;
        ymax += 0.05;
    } else {
        double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }

    auto fx = [&](std::size_t i) {
        return left + (double(i) + 0.5) * plot_w / double(n == 0 ? 1 : n);
    };
    auto fy = [&](double v) { return top + (1.0 - (v - ymin) / (ymax - ymin)) * plot_h; };
    auto num = [](double v) { return util::format_fixed(v, 2); };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"440\" "
           "viewBox=\"0 0 760 440\" font-family=\"sans-serif\">\n";
    svg += "  <rect x=\"0\" y=\"0\" width=\"760\" height=\"440\" fill=\"#ffffff\"/>\n";
    svg += "  <text x=\"" + num((left + right) / 2) +
           "\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">" + xml_escape(title) +
           "</text>\n";

    for (int tick = 0; tick <= 4; ++tick) {
        double v = ymin + (ymax - ymin) * double(tick) / 4.0;
        double y = fy(v);
        svg += "  <line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(right) +
               "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + util::format_fixed(v, 3) +
               "</text>\n";
    }
    svg += "  <line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) +
           "\" y2=\"" + num(bottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "  <line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(right) +
           "\" y2=\"" + num(bottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    for (std::size_t i = 0; i < n; ++i) {
        double x = fx(i);
        svg += "  <text x=\"" + num(x) + "\" y=\"" + num(bottom + 16) +
               "\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-40 " + num(x) + " " +
               num(bottom + 16) + ")\">" + xml_escape(cell_labels[i]) + "</text>\n";
    }
    svg += "  <text x=\"" + num((left + right) / 2) + "\" y=\"" + num(height - 12) +
           "\" font-size=\"12\" text-anchor=\"middle\">cell (diversity / min topic size)"
           "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& color = chart_palette()[s % chart_palette().size()];
        const auto& input = series[s].input_type;
        // Polyline segments over consecutive defined cells.
        std::string points;
        auto flush = [&]() {
            if (!points.empty()) {
                svg += "  <polyline fill=\"none\" stroke=\"" + color +
                       "\" stroke-width=\"2\" data-input=\"" + xml_escape(input) +
                       "\" points=\"" + points + "\"/>\n";
                points.clear();
            }
        };
        for (std::size_t i = 0; i < series[s].values.size() && i < n; ++i) {
            const auto& v = series[s].values[i];
            if (!v) {
                flush();
                continue;
            }
            if (!points.empty()) points += ' ';
            points += num(fx(i)) + "," + num(fy(*v));
        }
        flush();
        for (std::size_t i = 0; i < series[s].values.size() && i < n; ++i) {
            const auto& v = series[s].values[i];
            if (!v) continue;
            svg += "  <circle cx=\"" + num(fx(i)) + "\" cy=\"" + num(fy(*v)) +
                   "\" r=\"3\" fill=\"" + color + "\" data-input=\"" + xml_escape(input) +
                   "\" data-cell=\"" + xml_escape(cell_labels[i]) + "\"/>\n";
        }
        double ly = top + 16 + 20 * double(s);
        svg += "  <line x1=\"" + num(right + 16) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
               num(right + 44) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "  <text x=\"" + num(right + 50) + "\" y=\"" + num(ly) +
               "\" font-size=\"12\">" + xml_escape(input) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_summary_and_charts(const GridResult& result, const std::filesystem::path& out_dir) {
    util::write_file_atomic(out_dir / "summary.csv", summary_csv(result));

    // Cell axis: distinct (diversity, size) pairs in first-encounter order.
    std::vector<std::pair<double, std::int64_t>> cells;
    for (const auto& cell : result.cell_means) {
        std::pair<double, std::int64_t> key{cell.diversity_param, cell.min_topic_size};
        if (std::find(cells.begin(), cells.end(), key) == cells.end()) {
            cells.push_back(key);
        }
    }
    std::vector<std::string> labels;
    for (const auto& [diversity, size] : cells) {
        labels.push_back(util::format_double(diversity) + "/" + std::to_string(size));
    }

    std::vector<std::string> input_order;
    for (const auto& mean : result.input_type_means) input_order.push_back(mean.input_type);

    auto series_for = [&](bool coherence) {
        std::vector<ChartSeries> series;
        for (const auto& input : input_order) {
            ChartSeries s;
            s.input_type = input;
            s.values.assign(cells.size(), std::nullopt);
            for (const auto& cell : result.cell_means) {
                if (cell.input_type != input) continue;
                std::pair<double, std::int64_t> key{cell.diversity_param, cell.min_topic_size};
                auto it = std::find(cells.begin(), cells.end(), key);
                auto idx = std::size_t(it - cells.begin());
                s.values[idx] = coherence ? cell.mean_coherence_cv : cell.mean_diversity;
            }
            series.push_back(std::move(s));
        }
        return series;
    };

    util::write_file_atomic(out_dir / "diversity.svg",
                            svg_chart(result.dataset_name + ": topic diversity by cell", labels,
                                      series_for(false)));
    util::write_file_atomic(out_dir / "coherence.svg",
                            svg_chart(result.dataset_name + ": C_V coherence by cell", labels,
                                      series_for(true)));
}

} // namespace

void emit_report(const GridResult& result, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    std::string records = metrics_csv_header() + "\n";
    for (const auto& record : result.records) {
        records += metrics_csv_row(record); // csv_join supplies the newline
    }
    util::write_file_atomic(out_dir / "records.csv", records);

    write_summary_and_charts(result, out_dir);

    ordered_json manifest;
    manifest["dataset"] = result.dataset_name;
    manifest["generator"] = "summit 0.1.0";
    manifest["grid"] = {{"input_types", result.input_types},
                        {"diversity_values", result.diversity_values},
                        {"min_topic_sizes", result.min_topic_sizes},
                        {"repeats", result.repeats},
                        {"base_seed", result.base_seed}};
    manifest["corpus_hash"] = result.corpus_hash;
    manifest["embedding_provider"] = result.embedding_provider_id;
    int degenerate = 0;
    for (const auto& record : result.records) degenerate += record.degenerate ? 1 : 0;
    manifest["records"] = result.records.size();
    manifest["degenerate_records"] = degenerate;
    manifest["missing_term_events"] = result.missing_term_events;
    manifest["notes"] = result.notes;
    ordered_json timings = ordered_json::object();
    for (const auto& [stage, ms] : result.timings_ms) timings[stage] = ms;
    manifest["timings_ms"] = timings;
    util::write_file_atomic(out_dir / "run-manifest.json", manifest.dump(2) + "\n");
}

std::vector<MetricsRecord> load_records_csv(const std::filesystem::path& path) {
    auto rows = util::parse_csv(util::read_file(path));
    if (rows.empty()) {
        throw std::runtime_error("records csv is empty: " + path.string());
    }
    auto header = util::parse_csv(metrics_csv_header());
    if (rows[0] != header[0]) {
        throw std::runtime_error("records csv has an unexpected header: " + path.string());
    }
    std::vector<MetricsRecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != header[0].size()) {
            throw std::runtime_error("records csv row " + std::to_string(i + 1) +
                                     " has the wrong field count");
        }
        MetricsRecord record;
        record.dataset = row[0];
        record.input_type = row[1];
        record.diversity_param = parse_double_or_throw(row[2], "diversity_param");
        record.min_topic_size = parse_int_or_throw(row[3], "min_topic_size");
        record.seed = parse_int_or_throw(row[4], "seed");
        record.n_topics = std::int32_t(parse_int_or_throw(row[5], "n_topics"));
        if (!row[6].empty()) record.diversity = parse_double_or_throw(row[6], "diversity");
        if (!row[7].empty()) record.coherence_cv = parse_double_or_throw(row[7], "coherence_cv");
        if (row[8] != "true" && row[8] != "false") {
            throw std::runtime_error("records csv row " + std::to_string(i + 1) +
                                     " has a non-boolean degenerate flag");
        }
        record.degenerate = row[8] == "true";
        records.push_back(std::move(record));
    }
    return records;
}

void report_from_records(const std::filesystem::path& records_csv,
                         const std::filesystem::path& out_dir) {
    auto records = load_records_csv(records_csv);
    GridResult result;
    result.dataset_name = records.empty() ? "" : records[0].dataset;
    result.records = records;
    auto agg = aggregate(result.records);
    result.cell_means = std::move(agg.cells);
    result.input_type_means = std::move(agg.input_types);
    std::filesystem::create_directories(out_dir);
    write_summary_and_charts(result, out_dir);
}

} // namespace summit
