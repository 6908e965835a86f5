#include "summit/topics.hpp"

#include "summit/util/sha256.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace summit {

using nlohmann::ordered_json;

std::vector<std::map<std::string, double>> class_tfidf(const Corpus& corpus,
                                                       const ClusterLabels& labels,
                                                       const Vocabulary& vocab) {
    if (labels.labels.size() != corpus.size()) {
        throw std::runtime_error("class_tfidf: labels are not aligned with the corpus");
    }
    if (labels.n_clusters <= 0) {
        throw std::runtime_error("class_tfidf: no non-noise clusters");
    }

    const auto n_classes = std::size_t(labels.n_clusters);
    std::vector<std::map<std::string, double>> tf(n_classes);
    std::map<std::string, double> term_total;
    double token_total = 0.0;

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto label = labels.labels[i];
        if (label < 0) continue;
        for (const auto& token : tokenize(corpus.documents[i].text)) {
            if (vocab.index_of(token) < 0) continue;
            tf[std::size_t(label)][token] += 1.0;
            term_total[token] += 1.0;
            token_total += 1.0;
        }
    }

    const double avg_per_class = token_total / double(n_classes);
    std::vector<std::map<std::string, double>> weights(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (const auto& [term, count] : tf[c]) {
            double w = count * std::log(1.0 + avg_per_class / term_total[term]);
            if (w > 0.0) weights[c][term] = w;
        }
    }
    return weights;
}

std::vector<TopicKeyword> top_candidates(const std::map<std::string, double>& row,
                                         std::size_t n_candidates) {
    std::vector<TopicKeyword> out;
    out.reserve(row.size());
    for (const auto& [term, weight] : row) out.push_back({term, weight});
    // Map iteration is lexicographic, so a stable sort by weight leaves ties
    // in lexicographic order.
    std::stable_sort(out.begin(), out.end(), [](const TopicKeyword& a, const TopicKeyword& b) {
        return a.weight > b.weight;
    });
    if (out.size() > n_candidates) out.resize(n_candidates);
    return out;
}

std::vector<std::string> mmr_rerank(const std::vector<TopicKeyword>& candidates,
                                    const std::map<std::string, std::vector<float>>& term_vectors,
                                    std::span<const float> topic_vector, double diversity,
                                    std::size_t top_k) {
    const std::size_t n = candidates.size();
    if (n == 0 || top_k == 0) return {};

    std::vector<std::span<const float>> vec(n);
    std::vector<double> relevance(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = term_vectors.find(candidates[i].term);
        if (it == term_vectors.end()) {
            throw std::runtime_error("mmr_rerank: missing vector for term '" +
                                     candidates[i].term + "'");
        }
        vec[i] = it->second;
        relevance[i] = cosine(vec[i], topic_vector);
    }

    std::vector<bool> picked(n, false);
    // Running max cosine to any already-selected term; meaningless until the
    // first pick, which is scored on relevance alone.
    std::vector<double> max_sim(n, 0.0);
    std::vector<std::string> out;
    out.reserve(std::min(top_k, n));

    while (out.size() < top_k && out.size() < n) {
        std::size_t best = n;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (picked[i]) continue;
            double score = out.empty()
                               ? relevance[i]
                               : (1.0 - diversity) * relevance[i] - diversity * max_sim[i];
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        picked[best] = true;
        out.push_back(candidates[best].term);
        for (std::size_t i = 0; i < n; ++i) {
            if (!picked[i]) max_sim[i] = std::max(max_sim[i], cosine(vec[i], vec[best]));
        }
    }
    return out;
}

namespace {

ordered_json params_echo(const Corpus& model_input, const EmbeddingMatrix& embeddings,
                         const TopicModelOptions& opts, const UmapParams& umap) {
    ordered_json p;
    p["input"] = model_input.name;
    p["embedding_provider"] = embeddings.provider_id;
    p["corpus_hash"] = embeddings.corpus_hash;
    p["umap"] = {{"n_neighbors", umap.n_neighbors},
                 {"n_components", umap.n_components},
                 {"min_dist", umap.min_dist},
                 {"spread", umap.spread},
                 {"n_epochs", umap.n_epochs},
                 {"negative_sample_rate", umap.negative_sample_rate},
                 {"initial_learning_rate", umap.initial_learning_rate},
                 {"metric", to_string(umap.metric)},
                 {"seed", umap.seed}};
    p["hdbscan"] = {{"min_cluster_size", opts.hdbscan.min_cluster_size},
                    {"min_samples", opts.hdbscan.effective_min_samples()}};
    p["diversity"] = opts.diversity;
    p["seed"] = opts.seed;
    p["n_candidates"] = opts.n_candidates;
    p["top_k"] = opts.top_k;
    return p;
}

std::vector<float> topic_centroid(const EmbeddingMatrix& embeddings,
                                  const std::vector<std::int32_t>& assignments,
                                  std::int32_t topic) {
    std::vector<double> acc(embeddings.dim, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        if (assignments[i] != topic) continue;
        auto row = embeddings.row(i);
        for (std::size_t d = 0; d < embeddings.dim; ++d) acc[d] += row[d];
        ++count;
    }
    std::vector<float> centroid(embeddings.dim, 0.0f);
    if (count > 0) {
        for (std::size_t d = 0; d < embeddings.dim; ++d) {
            centroid[d] = float(acc[d] / double(count));
        }
    }
    return centroid;
}

} // namespace

const EmbeddingMatrix& ReductionCache::get_or_compute(
    const std::string& key, const std::function<EmbeddingMatrix()>& compute) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    auto value = compute();
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, std::move(value)).first->second;
}

std::size_t ReductionCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
}

TopicModel fit_topic_model(const Corpus& model_input, const Corpus& reference_corpus,
                           const EmbeddingMatrix& embeddings, EmbeddingProvider& provider,
                           const TopicModelOptions& opts, ReductionCache* cache) {
    if (embeddings.size() != model_input.size()) {
        throw std::runtime_error("fit_topic_model: embeddings are not aligned with the corpus");
    }
    for (std::size_t i = 0; i < model_input.size(); ++i) {
        if (embeddings.doc_ids[i] != model_input.documents[i].id) {
            throw std::runtime_error("fit_topic_model: embedding row " + std::to_string(i) +
                                     " does not match document id '" +
                                     model_input.documents[i].id + "'");
        }
    }

    UmapParams umap = opts.umap;
    umap.seed = opts.seed;

    TopicModel model;
    model.input_name = model_input.name;
    auto params = params_echo(model_input, embeddings, opts, umap);
    model.params_json = params.dump();
    model.params_fingerprint = util::Sha256::hex_digest(model.params_json);

    auto reduce = [&] { return umap_fit_transform(embeddings, umap); };
    EmbeddingMatrix reduced_local;
    const EmbeddingMatrix* reduced = nullptr;
    if (cache != nullptr) {
        ordered_json reduction_key;
        reduction_key["corpus_hash"] = embeddings.corpus_hash;
        reduction_key["provider"] = embeddings.provider_id;
        reduction_key["umap"] = params["umap"];
        reduced = &cache->get_or_compute(util::Sha256::hex_digest(reduction_key.dump()), reduce);
    } else {
        reduced_local = reduce();
        reduced = &reduced_local;
    }
    auto labels = hdbscan_fit(*reduced, opts.hdbscan);
    model.n_topics = labels.n_clusters;
    model.assignments = labels.labels;
    for (std::size_t i = 0; i < model_input.size(); ++i) {
        model.doc_assignment[model_input.documents[i].id] = labels.labels[i];
    }

    if (labels.n_clusters == 0) {
        model.degenerate = true;
        return model;
    }

    auto vocab = build_vocabulary(model_input);
    model.ctfidf = class_tfidf(model_input, labels, vocab);
    model.topic_sizes.assign(std::size_t(model.n_topics), 0);
    for (auto label : labels.labels) {
        if (label >= 0) model.topic_sizes[std::size_t(label)] += 1;
    }

    std::vector<std::vector<TopicKeyword>> candidates(std::size_t(model.n_topics));
    std::set<std::string> term_universe;
    for (std::int32_t t = 0; t < model.n_topics; ++t) {
        candidates[std::size_t(t)] = top_candidates(model.ctfidf[std::size_t(t)],
                                                    opts.n_candidates);
        for (const auto& kw : candidates[std::size_t(t)]) term_universe.insert(kw.term);
    }

    // One embedding per distinct candidate term, fetched in modest batches so
    // live providers see bounded requests.
    std::map<std::string, std::vector<float>> term_vectors;
    std::vector<std::string> terms(term_universe.begin(), term_universe.end());
    const std::size_t kTermBatch = 64;
    for (std::size_t start = 0; start < terms.size(); start += kTermBatch) {
        std::size_t stop = std::min(terms.size(), start + kTermBatch);
        std::vector<std::string> batch(terms.begin() + long(start), terms.begin() + long(stop));
        auto vecs = provider.embed_batch(batch);
        if (vecs.size() != batch.size()) {
            throw std::runtime_error("fit_topic_model: term embedding count mismatch");
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            term_vectors[batch[i]] = std::move(vecs[i]);
        }
    }

    model.keywords.resize(std::size_t(model.n_topics));
    for (std::int32_t t = 0; t < model.n_topics; ++t) {
        auto centroid = topic_centroid(embeddings, labels.labels, t);
        auto order = mmr_rerank(candidates[std::size_t(t)], term_vectors, centroid,
                                opts.diversity, opts.top_k);
        auto& row = model.ctfidf[std::size_t(t)];
        for (const auto& term : order) {
            model.keywords[std::size_t(t)].push_back({term, row.at(term)});
        }
    }

    auto reference_vocab = build_vocabulary(reference_corpus);
    for (const auto& topic : model.keywords) {
        for (const auto& kw : topic) {
            if (reference_vocab.index_of(kw.term) < 0) model.reference_oov += 1;
        }
    }
    return model;
}

std::string TopicModel::to_json() const {
    ordered_json j;
    j["input_name"] = input_name;
    j["n_topics"] = n_topics;
    j["degenerate"] = degenerate;
    j["params"] = ordered_json::parse(params_json);
    j["params_fingerprint"] = params_fingerprint;
    j["reference_oov"] = reference_oov;
    ordered_json assign = ordered_json::object();
    for (const auto& [doc_id, topic] : doc_assignment) assign[doc_id] = topic;
    j["assignments"] = assign;
    ordered_json topics = ordered_json::array();
    for (std::int32_t t = 0; t < n_topics; ++t) {
        ordered_json entry;
        entry["topic_id"] = t;
        entry["size"] = topic_sizes[std::size_t(t)];
        ordered_json kws = ordered_json::array();
        for (const auto& kw : keywords[std::size_t(t)]) {
            kws.push_back({{"term", kw.term}, {"weight", kw.weight}});
        }
        entry["keywords"] = kws;
        topics.push_back(entry);
    }
    j["topics"] = topics;
    return j.dump(2);
}

TopicModel TopicModel::from_json(const std::string& text) {
    auto j = ordered_json::parse(text);
    TopicModel model;
    model.input_name = j.at("input_name").get<std::string>();
    model.n_topics = j.at("n_topics").get<std::int32_t>();
    model.degenerate = j.at("degenerate").get<bool>();
    model.params_json = j.at("params").dump();
    model.params_fingerprint = j.at("params_fingerprint").get<std::string>();
    model.reference_oov = j.at("reference_oov").get<std::int64_t>();
    for (const auto& [doc_id, topic] : j.at("assignments").items()) {
        model.doc_assignment[doc_id] = topic.get<std::int32_t>();
    }
    model.keywords.resize(std::size_t(model.n_topics));
    model.topic_sizes.resize(std::size_t(model.n_topics), 0);
    for (const auto& entry : j.at("topics")) {
        auto t = entry.at("topic_id").get<std::int32_t>();
        model.topic_sizes[std::size_t(t)] = entry.at("size").get<std::int64_t>();
        for (const auto& kw : entry.at("keywords")) {
            model.keywords[std::size_t(t)].push_back(
                {kw.at("term").get<std::string>(), kw.at("weight").get<double>()});
        }
    }
    return model;
}

} // namespace summit
