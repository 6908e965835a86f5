#include "summit/eval.hpp"

#include "summit/embed.hpp"
#include "summit/util/csv.hpp"
#include "summit/util/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace summit {

namespace {

struct Interval {
    std::int64_t lo = 0;
    std::int64_t hi = 0; // inclusive
};

/// Windows containing a token at position p, given nw windows of width w.
Interval window_span(std::int64_t p, std::int64_t w, std::int64_t nw) {
    return {std::max<std::int64_t>(0, p - w + 1), std::min(p, nw - 1)};
}

/// Union of the window spans of sorted positions, as disjoint intervals
/// (adjacent runs merge; the covered size is unaffected).
std::vector<Interval> covered_windows(const std::vector<std::int64_t>& positions,
                                      std::int64_t w, std::int64_t nw) {
    std::vector<Interval> merged;
    for (auto p : positions) {
        auto iv = window_span(p, w, nw);
        if (!merged.empty() && iv.lo <= merged.back().hi + 1) {
            merged.back().hi = std::max(merged.back().hi, iv.hi);
        } else {
            merged.push_back(iv);
        }
    }
    return merged;
}

std::int64_t total_length(const std::vector<Interval>& set) {
    std::int64_t total = 0;
    for (const auto& iv : set) total += iv.hi - iv.lo + 1;
    return total;
}

std::int64_t intersection_length(const std::vector<Interval>& a, const std::vector<Interval>& b) {
    std::int64_t total = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        std::int64_t lo = std::max(a[i].lo, b[j].lo);
        std::int64_t hi = std::min(a[i].hi, b[j].hi);
        if (lo <= hi) total += hi - lo + 1;
        if (a[i].hi < b[j].hi) {
            ++i;
        } else {
            ++j;
        }
    }
    return total;
}

WindowStats build_stats_impl(const Corpus& corpus, int window_size,
                             const std::unordered_set<std::string>* targets) {
    if (corpus.size() == 0) {
        throw std::runtime_error("build_window_stats: empty corpus");
    }
    if (window_size < 1) {
        throw std::runtime_error("build_window_stats: window_size must be >= 1");
    }

    WindowStats stats;
    stats.window_size = window_size;

    for (const auto& doc : corpus.documents) {
        auto tokens = tokenize(doc.text);
        const auto len = std::int64_t(tokens.size());
        if (len == 0) continue; // no tokens, no window
        const std::int64_t nw = len >= window_size ? len - window_size + 1 : 1;
        stats.n_windows += nw;

        std::map<std::string, std::vector<std::int64_t>> positions;
        for (std::int64_t p = 0; p < len; ++p) {
            if (targets != nullptr && targets->count(tokens[std::size_t(p)]) == 0) continue;
            positions[tokens[std::size_t(p)]].push_back(p);
        }

        std::vector<std::pair<std::string, std::vector<Interval>>> covered;
        covered.reserve(positions.size());
        for (const auto& [term, pos] : positions) {
            covered.emplace_back(term, covered_windows(pos, window_size, nw));
        }
        for (const auto& [term, set] : covered) {
            stats.occurrence[term] += total_length(set);
        }
        for (std::size_t a = 0; a < covered.size(); ++a) {
            for (std::size_t b = a + 1; b < covered.size(); ++b) {
                auto shared = intersection_length(covered[a].second, covered[b].second);
                if (shared > 0) {
                    stats.cooccurrence[{covered[a].first, covered[b].first}] += shared;
                }
            }
        }
    }
    return stats;
}

} // namespace

std::int64_t WindowStats::occurrence_of(const std::string& term) const {
    auto it = occurrence.find(term);
    return it == occurrence.end() ? 0 : it->second;
}

std::int64_t WindowStats::cooccurrence_of(const std::string& a, const std::string& b) const {
    if (a == b) return occurrence_of(a);
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = cooccurrence.find(key);
    return it == cooccurrence.end() ? 0 : it->second;
}

WindowStats build_window_stats(const Corpus& reference_corpus, int window_size) {
    return build_stats_impl(reference_corpus, window_size, nullptr);
}

WindowStats build_window_stats(const Corpus& reference_corpus, int window_size,
                               const std::vector<std::string>& target_terms) {
    std::unordered_set<std::string> targets(target_terms.begin(), target_terms.end());
    return build_stats_impl(reference_corpus, window_size, &targets);
}

double npmi(std::int64_t count_a, std::int64_t count_b, std::int64_t count_ab,
            std::int64_t n_windows, double epsilon) {
    if (n_windows < 1) {
        throw std::runtime_error("npmi: no windows");
    }
    if (count_a <= 0 || count_b <= 0) return -1.0;
    const double pa = double(count_a) / double(n_windows);
    const double pb = double(count_b) / double(n_windows);
    const double pab = double(count_ab) / double(n_windows);
    const double numerator = std::log((pab + epsilon) / (pa * pb));
    const double denominator = -std::log(pab + epsilon);
    return numerator / denominator;
}

double topic_diversity(const std::vector<std::vector<std::string>>& keyword_lists) {
    if (keyword_lists.empty()) {
        throw std::runtime_error("topic_diversity: no topics");
    }
    std::set<std::string> distinct;
    std::size_t total = 0;
    for (const auto& list : keyword_lists) {
        distinct.insert(list.begin(), list.end());
        total += list.size();
    }
    if (total == 0) {
        throw std::runtime_error("topic_diversity: empty keyword lists");
    }
    return double(distinct.size()) / double(total);
}

double cv_coherence(const std::vector<std::vector<std::string>>& keyword_lists,
                    const WindowStats& stats) {
    if (keyword_lists.empty()) {
        throw std::runtime_error("cv_coherence: no topics");
    }

    double topic_sum = 0.0;
    for (const auto& words : keyword_lists) {
        const std::size_t m = words.size();
        if (m == 0) {
            throw std::runtime_error("cv_coherence: empty keyword list");
        }
        std::vector<std::int64_t> occ(m);
        for (std::size_t i = 0; i < m; ++i) occ[i] = stats.occurrence_of(words[i]);

        // NPMI word vectors; the diagonal uses P(w,w) = P(w).
        std::vector<std::vector<double>> vec(m, std::vector<double>(m));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                auto pair_count =
                    i == j ? occ[i] : stats.cooccurrence_of(words[i], words[j]);
                vec[i][j] = npmi(occ[i], occ[j], pair_count, stats.n_windows, stats.epsilon);
            }
        }

        std::vector<double> sum_vec(m, 0.0);
        for (const auto& v : vec) {
            for (std::size_t j = 0; j < m; ++j) sum_vec[j] += v[j];
        }

        double confirmation_sum = 0.0;
        for (const auto& v : vec) {
            confirmation_sum += cosine(std::span<const double>(v),
                                       std::span<const double>(sum_vec));
        }
        topic_sum += confirmation_sum / double(m);
    }
    return topic_sum / double(keyword_lists.size());
}

std::string metrics_csv_header() {
    return "dataset,input_type,diversity_param,min_topic_size,seed,n_topics,"
           "diversity,coherence_cv,degenerate";
}

std::string metrics_csv_row(const MetricsRecord& r) {
    std::vector<std::string> fields{
        r.dataset,
        r.input_type,
        util::format_double(r.diversity_param),
        std::to_string(r.min_topic_size),
        std::to_string(r.seed),
        std::to_string(r.n_topics),
        r.diversity ? util::format_double(*r.diversity) : "",
        r.coherence_cv ? util::format_double(*r.coherence_cv) : "",
        r.degenerate ? "true" : "false",
    };
    return util::csv_join(fields);
}

MetricsRecord evaluate(const TopicModel& topics, const Corpus& reference_corpus,
                       const WindowStats& stats) {
    MetricsRecord record;
    record.dataset = reference_corpus.name;
    if (topics.input_name.size() >= 6 &&
        topics.input_name.rfind("-short") == topics.input_name.size() - 6) {
        record.input_type = "short";
    } else if (topics.input_name.size() >= 5 &&
               topics.input_name.rfind("-long") == topics.input_name.size() - 5) {
        record.input_type = "long";
    } else {
        record.input_type = "full";
    }

    if (!topics.params_json.empty()) {
        auto params = nlohmann::json::parse(topics.params_json);
        record.diversity_param = params.value("diversity", 0.0);
        record.seed = params.value("seed", std::int64_t(0));
        if (params.contains("hdbscan")) {
            record.min_topic_size = params["hdbscan"].value("min_cluster_size", std::int64_t(0));
        }
    }

    record.n_topics = topics.n_topics;
    record.degenerate = topics.degenerate || topics.n_topics == 0;
    if (record.degenerate) return record;

    std::vector<std::vector<std::string>> lists;
    for (const auto& topic : topics.keywords) {
        std::vector<std::string> terms;
        for (const auto& kw : topic) terms.push_back(kw.term);
        lists.push_back(std::move(terms));
    }
    for (const auto& list : lists) {
        for (const auto& term : list) {
            if (stats.occurrence_of(term) == 0) record.missing_terms += 1;
        }
    }
    record.diversity = topic_diversity(lists);
    record.coherence_cv = cv_coherence(lists, stats);
    return record;
}

} // namespace summit
