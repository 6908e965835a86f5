#include "summit/cluster.hpp"

#include "summit/util/parallel.hpp"
#include "summit/util/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace summit {

using nlohmann::ordered_json;

void HdbscanParams::validate(std::size_t n_points) const {
    if (min_cluster_size < 2) {
        throw std::invalid_argument("hdbscan: min_cluster_size must be >= 2");
    }
    if (min_samples < 0) throw std::invalid_argument("hdbscan: min_samples must be >= 1 or 0");
    if (n_points < std::size_t(min_cluster_size)) {
        throw std::invalid_argument("hdbscan: need at least min_cluster_size points, have " +
                                    std::to_string(n_points));
    }
}

namespace {

double euclidean(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double diff = double(a[d]) - double(b[d]);
        s += diff * diff;
    }
    return std::sqrt(s);
}

} // namespace

std::vector<double> core_distances(const EmbeddingMatrix& X, std::size_t k, unsigned threads) {
    const std::size_t n = X.size();
    if (k >= n) {
        throw std::invalid_argument("core_distances: k (" + std::to_string(k) +
                                    ") must be < n (" + std::to_string(n) + ")");
    }
    if (k < 1) throw std::invalid_argument("core_distances: k must be >= 1");
    std::vector<double> core(n);
    util::parallel_for(n, threads, [&](std::size_t i) {
        std::vector<double> dists;
        dists.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) dists.push_back(euclidean(X.row(i), X.row(j)));
        }
        std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
        core[i] = dists[k - 1];
    });
    return core;
}

double mutual_reachability_distance(std::span<const float> a, std::span<const float> b,
                                    double core_a, double core_b) {
    return std::max({core_a, core_b, euclidean(a, b)});
}

std::vector<MstEdge> mst_mutual_reachability(const EmbeddingMatrix& X,
                                             const std::vector<double>& core) {
    const std::size_t n = X.size();
    if (n < 2) throw std::invalid_argument("mst: need at least 2 points");
    if (core.size() != n) throw std::invalid_argument("mst: core distance size mismatch");

    std::vector<bool> in_tree(n, false);
    std::vector<double> key(n, std::numeric_limits<double>::infinity());
    std::vector<std::int32_t> parent(n, -1);
    std::vector<MstEdge> edges;
    edges.reserve(n - 1);

    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        // Relax edges from the vertex added last.
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            double d = mutual_reachability_distance(X.row(current), X.row(v), core[current],
                                                    core[v]);
            if (d < key[v]) {
                key[v] = d;
                parent[v] = std::int32_t(current);
            }
        }
        // Deterministic pick: smallest (key, index).
        std::size_t best = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] && (best == n || key[v] < key[best])) best = v;
        }
        in_tree[best] = true;
        edges.push_back({parent[best], std::int32_t(best), key[best]});
        current = best;
    }
    return edges;
}

namespace {

/// Single-linkage dendrogram row. Node ids: points 0..n-1, merges n..2n-2.
struct LinkageRow {
    std::int32_t left = 0;
    std::int32_t right = 0;
    double distance = 0.0;
    std::int32_t size = 0;
};

std::vector<LinkageRow> single_linkage(std::vector<MstEdge> edges, std::size_t n) {
    std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
        if (x.weight != y.weight) return x.weight < y.weight;
        auto xmin = std::min(x.a, x.b), ymin = std::min(y.a, y.b);
        if (xmin != ymin) return xmin < ymin;
        return std::max(x.a, x.b) < std::max(y.a, y.b);
    });

    std::vector<std::int32_t> root(2 * n - 1);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](std::int32_t x) {
        while (root[x] != x) {
            root[x] = root[root[x]];
            x = root[x];
        }
        return x;
    };

    std::vector<std::int32_t> size(2 * n - 1, 1);
    std::vector<LinkageRow> rows;
    rows.reserve(n - 1);
    std::int32_t next = std::int32_t(n);
    for (const auto& e : edges) {
        std::int32_t ra = find(e.a), rb = find(e.b);
        rows.push_back({ra, rb, e.weight, size[ra] + size[rb]});
        size[next] = size[ra] + size[rb];
        root[ra] = next;
        root[rb] = next;
        ++next;
    }
    return rows;
}

} // namespace

CondensedTree condense(const std::vector<MstEdge>& mst_edges, std::size_t n_points,
                       int min_cluster_size) {
    if (min_cluster_size < 2) {
        throw std::invalid_argument("condense: min_cluster_size must be >= 2");
    }
    if (mst_edges.size() + 1 != n_points) {
        throw std::invalid_argument("condense: MST must have n-1 edges");
    }
    auto hierarchy = single_linkage(mst_edges, n_points);
    const std::int32_t n = std::int32_t(n_points);
    const std::int32_t root = 2 * n - 2;

    auto node_size = [&](std::int32_t node) {
        return node < n ? 1 : hierarchy[node - n].size;
    };
    auto bfs_from = [&](std::int32_t start) {
        std::vector<std::int32_t> order;
        std::deque<std::int32_t> queue{start};
        while (!queue.empty()) {
            std::int32_t node = queue.front();
            queue.pop_front();
            order.push_back(node);
            if (node >= n) {
                queue.push_back(hierarchy[node - n].left);
                queue.push_back(hierarchy[node - n].right);
            }
        }
        return order;
    };

    CondensedTree tree;
    tree.n_points = n_points;

    std::vector<std::int32_t> relabel(std::size_t(root) + 1, -1);
    relabel[root] = n;
    std::int32_t next_label = n + 1;
    std::vector<bool> ignore(std::size_t(root) + 1, false);

    for (std::int32_t node : bfs_from(root)) {
        if (node < n || ignore[node]) continue;
        const LinkageRow& row = hierarchy[node - n];
        double lambda = row.distance > 0.0 ? std::min(1.0 / row.distance, kLambdaMax)
                                           : kLambdaMax;
        std::int32_t left = row.left, right = row.right;
        std::int32_t left_size = node_size(left), right_size = node_size(right);
        std::int32_t label = relabel[node];

        auto spill = [&](std::int32_t side) {
            for (std::int32_t sub : bfs_from(side)) {
                if (sub < n) {
                    tree.nodes.push_back({label, sub, lambda, 1});
                } else {
                    ignore[sub] = true;
                }
            }
        };

        if (left_size >= min_cluster_size && right_size >= min_cluster_size) {
            relabel[left] = next_label++;
            tree.nodes.push_back({label, relabel[left], lambda, left_size});
            relabel[right] = next_label++;
            tree.nodes.push_back({label, relabel[right], lambda, right_size});
        } else if (left_size < min_cluster_size && right_size < min_cluster_size) {
            spill(left);
            spill(right);
        } else if (left_size < min_cluster_size) {
            relabel[right] = label; // big side continues as the same cluster
            if (right < n) tree.nodes.push_back({label, right, lambda, 1});
            spill(left);
        } else {
            relabel[left] = label;
            if (left < n) tree.nodes.push_back({label, left, lambda, 1});
            spill(right);
        }
    }

    // Stability: births first, then accumulate (lambda - birth) * size.
    std::map<std::int32_t, double> births;
    births[n] = 0.0;
    for (const auto& node : tree.nodes) {
        if (node.child >= n && !births.count(node.child)) {
            births[node.child] = node.lambda;
        }
        if (!tree.stability.count(node.parent)) tree.stability[node.parent] = 0.0;
    }
    for (const auto& node : tree.nodes) {
        tree.stability[node.parent] +=
            (node.lambda - births.at(node.parent)) * double(node.child_size);
    }
    return tree;
}

std::string CondensedTree::to_json() const {
    ordered_json out;
    out["n_points"] = n_points;
    out["nodes"] = ordered_json::array();
    for (const auto& node : nodes) {
        ordered_json entry;
        entry["parent"] = node.parent;
        entry["child"] = node.child;
        entry["lambda"] = node.lambda;
        entry["child_size"] = node.child_size;
        out["nodes"].push_back(entry);
    }
    out["stability"] = ordered_json::object();
    for (const auto& [cluster, value] : stability) {
        out["stability"][std::to_string(cluster)] = value;
    }
    return out.dump(2);
}

ClusterLabels extract_eom(const CondensedTree& tree) {
    const std::int32_t n = std::int32_t(tree.n_points);
    ClusterLabels result;
    result.labels.assign(tree.n_points, -1);

    // Cluster ids, bottom-up (children always carry higher ids than parents).
    std::vector<std::int32_t> cluster_ids;
    for (const auto& [cluster, _] : tree.stability) cluster_ids.push_back(cluster);
    std::sort(cluster_ids.rbegin(), cluster_ids.rend());

    std::map<std::int32_t, std::vector<std::int32_t>> cluster_children;
    std::map<std::int32_t, std::int32_t> cluster_parent;
    for (const auto& node : tree.nodes) {
        if (node.child >= n) {
            cluster_children[node.parent].push_back(node.child);
            cluster_parent[node.child] = node.parent;
        }
    }

    std::map<std::int32_t, double> score = tree.stability;
    std::map<std::int32_t, bool> selected;
    for (std::int32_t cluster : cluster_ids) {
        if (cluster == n) continue; // root is never selectable
        double subtree = 0.0;
        for (std::int32_t child : cluster_children[cluster]) subtree += score[child];
        if (tree.stability.at(cluster) > subtree) {
            selected[cluster] = true;
            // Deselect every descendant.
            std::deque<std::int32_t> queue(cluster_children[cluster].begin(),
                                           cluster_children[cluster].end());
            while (!queue.empty()) {
                std::int32_t d = queue.front();
                queue.pop_front();
                selected[d] = false;
                for (std::int32_t c : cluster_children[d]) queue.push_back(c);
            }
        } else {
            selected[cluster] = false;
            score[cluster] = subtree;
        }
    }

    // A point belongs to the unique selected cluster on its parent chain
    // (selection is an antichain), else it is noise.
    std::map<std::int32_t, std::int32_t> member_count;
    std::vector<std::int32_t> raw(tree.n_points, -1);
    for (const auto& node : tree.nodes) {
        if (node.child >= n) continue;
        std::int32_t walk = node.parent;
        while (true) {
            auto sel = selected.find(walk);
            if (sel != selected.end() && sel->second) {
                raw[node.child] = walk;
                member_count[walk] += 1;
                break;
            }
            auto up = cluster_parent.find(walk);
            if (up == cluster_parent.end()) break;
            walk = up->second;
        }
    }

    // Renumber selected clusters by decreasing size, ties by cluster id.
    std::vector<std::pair<std::int32_t, std::int32_t>> order; // (cluster, count)
    for (const auto& [cluster, count] : member_count) order.emplace_back(cluster, count);
    std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    std::map<std::int32_t, std::int32_t> final_label;
    for (std::size_t i = 0; i < order.size(); ++i) {
        final_label[order[i].first] = std::int32_t(i);
    }
    for (std::size_t p = 0; p < tree.n_points; ++p) {
        if (raw[p] >= 0) result.labels[p] = final_label.at(raw[p]);
    }
    result.n_clusters = std::int32_t(order.size());
    return result;
}

ClusterLabels hdbscan_fit(const EmbeddingMatrix& X, const HdbscanParams& params) {
    params.validate(X.size());
    // Reference behavior: min_samples is capped so the kNN query stays valid.
    std::size_t k = std::min<std::size_t>(std::size_t(params.effective_min_samples()),
                                          X.size() - 1);
    auto core = core_distances(X, k);
    auto edges = mst_mutual_reachability(X, core);
    auto tree = condense(edges, X.size(), params.min_cluster_size);
    return extract_eom(tree);
}

} // namespace summit
