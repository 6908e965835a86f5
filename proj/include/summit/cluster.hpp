#pragma once

#include "summit/embed.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace summit {

struct HdbscanParams {
    int min_cluster_size = 10;
    /// 0 means "use min_cluster_size" (upstream convention).
    int min_samples = 0;

    int effective_min_samples() const {
        return min_samples > 0 ? min_samples : min_cluster_size;
    }
    void validate(std::size_t n_points) const;
};

struct ClusterLabels {
    std::vector<std::int32_t> labels; // -1 noise, else 0..n_clusters-1
    std::int32_t n_clusters = 0;
};

/// Distance to the k-th nearest neighbor, self excluded. Euclidean.
std::vector<double> core_distances(const EmbeddingMatrix& X, std::size_t k,
                                   unsigned threads = 0);

/// max(core_a, core_b, d(a, b)); the HDBSCAN base metric.
double mutual_reachability_distance(std::span<const float> a, std::span<const float> b,
                                    double core_a, double core_b);

struct MstEdge {
    std::int32_t a = 0;
    std::int32_t b = 0;
    double weight = 0.0;
};

/// Prim's algorithm over the implicit dense mutual-reachability matrix.
std::vector<MstEdge> mst_mutual_reachability(const EmbeddingMatrix& X,
                                             const std::vector<double>& core);

/// One row of the condensed tree: child (point id < n_points, or cluster id
/// >= n_points) leaving parent at the given lambda = 1/distance.
struct CondensedNode {
    std::int32_t parent = 0;
    std::int32_t child = 0;
    double lambda = 0.0;
    std::int32_t child_size = 0;
};

struct CondensedTree {
    std::size_t n_points = 0;
    std::vector<CondensedNode> nodes;
    /// Per-cluster stability: sum over children of
    /// (lambda_child - lambda_birth) * child_size.
    std::map<std::int32_t, double> stability;

    std::string to_json() const; // debug dump
};

/// Builds the single-linkage dendrogram from MST edges (ascending), then
/// condenses it: a split is kept only when both sides have at least
/// min_cluster_size points; smaller sides fall out at the split lambda.
CondensedTree condense(const std::vector<MstEdge>& mst_edges, std::size_t n_points,
                       int min_cluster_size);

/// Excess-of-mass selection. A cluster is selected when its stability
/// exceeds the summed stability of its selected descendants; the root is
/// never selectable. Labels are renumbered by decreasing cluster size.
ClusterLabels extract_eom(const CondensedTree& tree);

ClusterLabels hdbscan_fit(const EmbeddingMatrix& X, const HdbscanParams& params);

/// Lambda cap replacing 1/0 for duplicate points.
inline constexpr double kLambdaMax = 1e12;

} // namespace summit
