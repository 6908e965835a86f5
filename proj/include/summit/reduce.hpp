#pragma once

#include "summit/embed.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace summit {

enum class Metric { cosine, euclidean };

Metric parse_metric(std::string_view name);
std::string to_string(Metric metric);

struct UmapParams {
    int n_neighbors = 15;
    int n_components = 5;
    double min_dist = 0.0;
    double spread = 1.0;
    int n_epochs = 200;
    int negative_sample_rate = 5;
    double initial_learning_rate = 1.0;
    Metric metric = Metric::cosine;
    std::uint64_t seed = 42;

    void validate(std::size_t n_points) const;
};

struct KnnGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::int32_t> indices; // n*k, per row ascending by (distance, index)
    std::vector<double> distances;     // n*k, aligned with indices

    std::span<const std::int32_t> neighbor_row(std::size_t i) const {
        return {indices.data() + i * k, k};
    }
    std::span<const double> distance_row(std::size_t i) const {
        return {distances.data() + i * k, k};
    }
};

/// Exact k nearest neighbors, self excluded, ties broken by lower index.
/// Cosine distance is 1 - cosine similarity.
KnnGraph knn_exact(const EmbeddingMatrix& X, std::size_t k, Metric metric,
                   unsigned threads = 0);

struct SmoothKnnResult {
    double rho = 0.0;
    double sigma = 1.0;
    bool clamped = false;
};

/// rho = smallest nonzero distance; sigma solves
/// sum_j exp(-max(0, d_j - rho) / sigma) = log2(k) by bisection (64
/// iterations, tolerance 1e-5), clamped to [1e-3, 1e3] x mean(d) when the
/// target is unattainable.
SmoothKnnResult smooth_knn(std::span<const double> distances, std::size_t k);

std::vector<SmoothKnnResult> smooth_knn_all(const KnnGraph& knn);

struct FuzzyEdge {
    std::int32_t i = 0; // i < j
    std::int32_t j = 0;
    double weight = 0.0;
};

struct FuzzyGraph {
    std::size_t n = 0;
    std::vector<FuzzyEdge> edges; // canonical orientation, sorted by (i, j)
};

/// Directed memberships w_ij = exp(-max(0, d_ij - rho_i) / sigma_i),
/// symmetrized with the probabilistic t-conorm a + b - a*b.
FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn,
                                const std::vector<SmoothKnnResult>& smooth);

struct AbParams {
    double a = 0.0;
    double b = 0.0;
    double rms = 0.0; // residual of the accepted fit
};

/// Least-squares fit of 1/(1 + a d^(2b)) to the piecewise target
/// (1 for d <= min_dist, exp(-(d - min_dist)/spread) beyond) over 300
/// uniform samples of [0, 3*spread].
AbParams fit_ab(double min_dist, double spread);

/// SGD layout with epochs-per-sample scheduling. Returns row-major
/// n x n_components coordinates; deterministic for a fixed seed.
std::vector<double> optimize_layout(const FuzzyGraph& graph, const UmapParams& params,
                                    double a, double b);

/// knn_exact -> smooth_knn -> fuzzy_simplicial_set -> fit_ab ->
/// optimize_layout. Output keeps doc order; stage is "reduced".
EmbeddingMatrix umap_fit_transform(const EmbeddingMatrix& X, const UmapParams& params);

} // namespace summit
