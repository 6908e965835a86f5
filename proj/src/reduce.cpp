#include "summit/reduce.hpp"

#include "summit/util/parallel.hpp"
#include "summit/util/rng.hpp"
#include "summit/util/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace summit {

Metric parse_metric(std::string_view name) {
    if (name == "cosine") return Metric::cosine;
    if (name == "euclidean") return Metric::euclidean;
    throw std::invalid_argument("unknown metric: " + std::string(name));
}

std::string to_string(Metric metric) {
    return metric == Metric::cosine ? "cosine" : "euclidean";
}

void UmapParams::validate(std::size_t n_points) const {
    if (n_neighbors < 2) throw std::invalid_argument("umap: n_neighbors must be >= 2");
    if (std::size_t(n_neighbors) >= n_points) {
        throw std::invalid_argument("umap: n_neighbors (" + std::to_string(n_neighbors) +
                                    ") must be < n_points (" + std::to_string(n_points) + ")");
    }
    if (n_components < 2) throw std::invalid_argument("umap: n_components must be >= 2");
    if (min_dist < 0) throw std::invalid_argument("umap: min_dist must be >= 0");
    if (spread <= 0) throw std::invalid_argument("umap: spread must be > 0");
    if (n_epochs < 1) throw std::invalid_argument("umap: n_epochs must be >= 1");
    if (negative_sample_rate < 0) {
        throw std::invalid_argument("umap: negative_sample_rate must be >= 0");
    }
}

namespace {

double point_distance(std::span<const float> u, std::span<const float> v, Metric metric) {
    if (metric == Metric::cosine) {
        return 1.0 - cosine(u, v);
    }
    double s = 0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        double diff = double(u[d]) - double(v[d]);
        s += diff * diff;
    }
    return std::sqrt(s);
}

} // namespace

KnnGraph knn_exact(const EmbeddingMatrix& X, std::size_t k, Metric metric, unsigned threads) {
    const std::size_t n = X.size();
    if (k >= n) {
        throw std::invalid_argument("knn_exact: k (" + std::to_string(k) +
                                    ") must be < n (" + std::to_string(n) + ")");
    }
    KnnGraph graph;
    graph.n = n;
    graph.k = k;
    graph.indices.resize(n * k);
    graph.distances.resize(n * k);

    util::parallel_for(n, threads, [&](std::size_t i) {
        std::vector<std::pair<double, std::int32_t>> candidates;
        candidates.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            candidates.emplace_back(point_distance(X.row(i), X.row(j), metric),
                                    std::int32_t(j));
        }
        std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end());
        for (std::size_t s = 0; s < k; ++s) {
            graph.distances[i * k + s] = candidates[s].first;
            graph.indices[i * k + s] = candidates[s].second;
        }
    });
    return graph;
}

SmoothKnnResult smooth_knn(std::span<const double> distances, std::size_t k) {
    if (distances.size() != k || k < 2) {
        throw std::invalid_argument("smooth_knn: need k >= 2 ascending distances");
    }
    SmoothKnnResult result;
    double mean = 0;
    for (double d : distances) mean += d;
    mean /= double(k);

    result.rho = 0.0;
    for (double d : distances) {
        if (d > 0) {
            result.rho = d;
            break;
        }
    }

    const double target = std::log2(double(k));
    auto member_sum = [&](double sigma) {
        double s = 0;
        for (double d : distances) {
            s += std::exp(-std::max(0.0, d - result.rho) / sigma);
        }
        return s;
    };

    if (mean == 0.0) {
        // All distances zero: every membership is 1 regardless of sigma.
        result.sigma = 1.0;
        result.clamped = true;
        return result;
    }

    const double lo_clamp = 1e-3 * mean;
    const double hi_clamp = 1e3 * mean;
    double lo = lo_clamp, hi = hi_clamp;

    // member_sum is nondecreasing in sigma; check attainability at the ends.
    if (member_sum(lo) >= target) {
        result.sigma = lo_clamp;
        result.clamped = true;
        return result;
    }
    if (member_sum(hi) <= target) {
        result.sigma = hi_clamp;
        result.clamped = true;
        return result;
    }

    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 64; ++iter) {
        mid = 0.5 * (lo + hi);
        double value = member_sum(mid);
        if (std::abs(value - target) < 1e-5) break;
        if (value > target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    result.sigma = mid;
    return result;
}

std::vector<SmoothKnnResult> smooth_knn_all(const KnnGraph& knn) {
    std::vector<SmoothKnnResult> out(knn.n);
    for (std::size_t i = 0; i < knn.n; ++i) {
        out[i] = smooth_knn(knn.distance_row(i), knn.k);
    }
    return out;
}

FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn,
                                const std::vector<SmoothKnnResult>& smooth) {
    if (smooth.size() != knn.n) {
        throw std::invalid_argument("fuzzy_simplicial_set: smooth size mismatch");
    }
    // Directed memberships keyed by canonical (min, max) pair.
    std::map<std::pair<std::int32_t, std::int32_t>, std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < knn.n; ++i) {
        auto nbrs = knn.neighbor_row(i);
        auto dists = knn.distance_row(i);
        for (std::size_t s = 0; s < knn.k; ++s) {
            std::int32_t j = nbrs[s];
            if (j == std::int32_t(i)) continue;
            double w = std::exp(-std::max(0.0, dists[s] - smooth[i].rho) / smooth[i].sigma);
            std::int32_t lo = std::min<std::int32_t>(std::int32_t(i), j);
            std::int32_t hi = std::max<std::int32_t>(std::int32_t(i), j);
            auto& entry = pairs[{lo, hi}];
            if (std::int32_t(i) == lo) {
                entry.first = w;
            } else {
                entry.second = w;
            }
        }
    }

    FuzzyGraph graph;
    graph.n = knn.n;
    graph.edges.reserve(pairs.size());
    for (const auto& [key, ab] : pairs) {
        double w = ab.first + ab.second - ab.first * ab.second;
        if (w <= 0.0) continue;
        graph.edges.push_back({key.first, key.second, w});
    }
    return graph;
}

namespace {

double ab_rms(double a, double b, double min_dist, double spread,
              const std::vector<double>& xs, const std::vector<double>& ys) {
    double sum_sq = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double d = xs[i];
        double model = 1.0 / (1.0 + a * std::pow(d, 2.0 * b));
        double r = model - ys[i];
        sum_sq += r * r;
    }
    (void)min_dist;
    (void)spread;
    return std::sqrt(sum_sq / double(xs.size()));
}

} // namespace

AbParams fit_ab(double min_dist, double spread) {
    if (spread <= 0) throw std::invalid_argument("fit_ab: spread must be > 0");
    const int n_samples = 300;
    std::vector<double> xs(n_samples), ys(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        double d = 3.0 * spread * double(i) / double(n_samples - 1);
        xs[i] = d;
        ys[i] = d <= min_dist ? 1.0 : std::exp(-(d - min_dist) / spread);
    }

    // Coarse grid, then shrink the window around the best cell.
    double a_lo = 1e-3, a_hi = 20.0;
    double b_lo = 0.05, b_hi = 3.0;
    double best_a = 1.0, best_b = 1.0;
    double best = std::numeric_limits<double>::infinity();
    const int grid = 48;
    for (int round = 0; round < 12; ++round) {
        for (int ia = 0; ia <= grid; ++ia) {
            double a = a_lo + (a_hi - a_lo) * double(ia) / grid;
            for (int ib = 0; ib <= grid; ++ib) {
                double b = b_lo + (b_hi - b_lo) * double(ib) / grid;
                double rms = ab_rms(a, b, min_dist, spread, xs, ys);
                if (rms < best) {
                    best = rms;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        double a_span = (a_hi - a_lo) * 0.25;
        double b_span = (b_hi - b_lo) * 0.25;
        a_lo = std::max(1e-6, best_a - a_span);
        a_hi = best_a + a_span;
        b_lo = std::max(1e-3, best_b - b_span);
        b_hi = best_b + b_span;
    }

    // The piecewise target is not exactly representable; 0.03 accommodates
    // the optimum at min_dist=0 (about 0.0242) while still catching fitter
    // regressions.
    if (best > 0.03) {
        throw std::runtime_error("fit_ab did not converge: RMS " + util::format_double(best) +
                                 " for min_dist " + util::format_double(min_dist) +
                                 ", spread " + util::format_double(spread));
    }
    return {best_a, best_b, best};
}

namespace {

inline double clip4(double v) { return v < -4.0 ? -4.0 : (v > 4.0 ? 4.0 : v); }

} // namespace

std::vector<double> optimize_layout(const FuzzyGraph& graph, const UmapParams& params,
                                    double a, double b) {
    const std::size_t n = graph.n;
    const std::size_t dim = std::size_t(params.n_components);
    if (n == 0 || graph.edges.empty()) {
        throw std::invalid_argument("optimize_layout: empty graph");
    }

    std::vector<double> layout(n * dim);
    util::Rng init_rng(params.seed);
    for (auto& c : layout) c = init_rng.uniform(-10.0, 10.0);

    double max_w = 0;
    for (const auto& e : graph.edges) max_w = std::max(max_w, e.weight);

    // Directed edge list (both orientations), sorted by (head, tail). Edges
    // whose weight would never be sampled within n_epochs are dropped, as in
    // the reference implementation.
    struct DirectedEdge {
        std::int32_t head;
        std::int32_t tail;
        double weight;
    };
    std::vector<DirectedEdge> edges;
    edges.reserve(graph.edges.size() * 2);
    const double weight_floor = max_w / double(params.n_epochs);
    for (const auto& e : graph.edges) {
        if (e.weight < weight_floor) continue;
        edges.push_back({e.i, e.j, e.weight});
        edges.push_back({e.j, e.i, e.weight});
    }
    std::sort(edges.begin(), edges.end(), [](const DirectedEdge& x, const DirectedEdge& y) {
        return x.head != y.head ? x.head < y.head : x.tail < y.tail;
    });
    if (edges.empty()) return layout;

    const std::size_t m = edges.size();
    std::vector<double> epochs_per_sample(m), epoch_of_next_sample(m);
    std::vector<double> epochs_per_negative(m), epoch_of_next_negative(m);
    for (std::size_t e = 0; e < m; ++e) {
        epochs_per_sample[e] = max_w / edges[e].weight;
        epoch_of_next_sample[e] = epochs_per_sample[e];
        epochs_per_negative[e] =
            params.negative_sample_rate > 0
                ? epochs_per_sample[e] / double(params.negative_sample_rate)
                : std::numeric_limits<double>::infinity();
        epoch_of_next_negative[e] = epochs_per_negative[e];
    }

    util::Rng neg_rng(util::mix64(params.seed, 0x756d61706e6567ULL)); // "umapneg"
    const double gamma = 1.0;

    for (int epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double alpha =
            params.initial_learning_rate * (1.0 - double(epoch) / double(params.n_epochs));
        for (std::size_t e = 0; e < m; ++e) {
            if (epoch_of_next_sample[e] > double(epoch)) continue;
            double* current = layout.data() + std::size_t(edges[e].head) * dim;
            double* other = layout.data() + std::size_t(edges[e].tail) * dim;

            double dist_sq = 0;
            for (std::size_t d = 0; d < dim; ++d) {
                double diff = current[d] - other[d];
                dist_sq += diff * diff;
            }
            double grad_coeff = 0;
            if (dist_sq > 0) {
                grad_coeff = -2.0 * a * b * std::pow(dist_sq, b - 1.0);
                grad_coeff /= a * std::pow(dist_sq, b) + 1.0;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                double grad_d = clip4(grad_coeff * (current[d] - other[d]));
                current[d] += grad_d * alpha;
                other[d] -= grad_d * alpha; // move_other
            }
            epoch_of_next_sample[e] += epochs_per_sample[e];

            if (params.negative_sample_rate == 0) continue;
            int n_neg = int((double(epoch) - epoch_of_next_negative[e]) / epochs_per_negative[e]);
            for (int p = 0; p < n_neg; ++p) {
                std::size_t k = std::size_t(neg_rng.next_bounded(n));
                double* sample = layout.data() + k * dim;
                double neg_dist_sq = 0;
                for (std::size_t d = 0; d < dim; ++d) {
                    double diff = current[d] - sample[d];
                    neg_dist_sq += diff * diff;
                }
                double neg_coeff;
                if (neg_dist_sq > 0) {
                    neg_coeff = 2.0 * gamma * b;
                    neg_coeff /= (0.001 + neg_dist_sq) * (a * std::pow(neg_dist_sq, b) + 1.0);
                } else if (std::size_t(edges[e].head) == k) {
                    continue;
                } else {
                    neg_coeff = 0;
                }
                for (std::size_t d = 0; d < dim; ++d) {
                    double grad_d =
                        neg_coeff > 0 ? clip4(neg_coeff * (current[d] - sample[d])) : 4.0;
                    current[d] += grad_d * alpha;
                }
            }
            epoch_of_next_negative[e] += double(n_neg) * epochs_per_negative[e];
        }
    }
    return layout;
}

EmbeddingMatrix umap_fit_transform(const EmbeddingMatrix& X, const UmapParams& params) {
    params.validate(X.size());

    KnnGraph knn = knn_exact(X, std::size_t(params.n_neighbors), params.metric);
    auto smooth = smooth_knn_all(knn);
    FuzzyGraph graph = fuzzy_simplicial_set(knn, smooth);
    AbParams ab = fit_ab(params.min_dist, params.spread);
    std::vector<double> layout = optimize_layout(graph, params, ab.a, ab.b);

    EmbeddingMatrix reduced;
    reduced.doc_ids = X.doc_ids;
    reduced.dim = std::size_t(params.n_components);
    reduced.provider_id = X.provider_id + "+umap";
    reduced.corpus_hash = X.corpus_hash;
    reduced.stage = "reduced";
    reduced.data.resize(layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) reduced.data[i] = float(layout[i]);
    return reduced;
}

} // namespace summit
