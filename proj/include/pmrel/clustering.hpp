#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmrel/csv.hpp"
#include "pmrel/embedding.hpp"

namespace pmrel {

struct ClusterManifest {
    int cluster_id = 0;
    std::vector<std::string> questions;  // non-empty, sorted on output
};

/// K ≈ ⌊N/10⌋, floored at 1.
inline int choose_k(std::size_t n) {
    if (n < 1) throw std::invalid_argument("choose_k: n must be >= 1");
    return std::max<int>(1, static_cast<int>(n / 10));
}

namespace detail {

// Spherical k-means on unit vectors. Farthest-point init seeded by
// `seed`, assignment by max cosine (ties to the lowest centroid
// index), 100-iteration cap, 1e-6 centroid-shift tolerance.
inline std::vector<int> spherical_kmeans(const std::vector<EmbeddingVector>& vectors, int k,
                                         std::uint64_t seed) {
    const std::size_t n = vectors.size();
    const std::size_t dim = vectors[0].dimension();
    std::vector<EmbeddingVector> centroids;
    centroids.reserve(static_cast<std::size_t>(k));

    centroids.push_back(vectors[seed % n]);
    std::vector<double> best_sim(n, -2.0);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        const auto& latest = centroids.back();
        std::size_t farthest = 0;
        double farthest_sim = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            best_sim[i] = std::max(best_sim[i], vectors[i].dot(latest));
            if (best_sim[i] < farthest_sim) {
                farthest_sim = best_sim[i];
                farthest = i;
            }
        }
        centroids.push_back(vectors[farthest]);
    }

    std::vector<int> assignment(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_dot = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = vectors[i].dot(centroids[c]);
                if (d > best_dot) {  // strict improvement keeps the lowest index on ties
                    best_dot = d;
                    best = c;
                }
            }
            assignment[i] = best;
        }
        double max_shift = 0.0;
        for (int c = 0; c < k; ++c) {
            EmbeddingVector mean;
            mean.values.assign(dim, 0.0);
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (assignment[i] != c) continue;
                ++count;
                for (std::size_t d = 0; d < dim; ++d) mean.values[d] += vectors[i].values[d];
            }
            if (count == 0) continue;  // empty cluster keeps its centroid
            double norm = mean.norm();
            if (norm == 0.0) continue;
            for (auto& x : mean.values) x /= norm;
            double shift = 0.0;
            for (std::size_t d = 0; d < dim; ++d)
                shift += (mean.values[d] - centroids[c].values[d]) * (mean.values[d] - centroids[c].values[d]);
            max_shift = std::max(max_shift, std::sqrt(shift));
            centroids[c] = std::move(mean);
        }
        if (max_shift < 1e-6) break;
    }
    return assignment;
}

}  // namespace detail

/// Partitions questions into at most k clusters. Every question lands
/// in exactly one manifest; empty clusters are dropped and ids are
/// renumbered densely. Inputs are canonicalized by question order, so
/// permuting the input never changes the partition.
inline std::vector<ClusterManifest> cluster(const std::vector<std::string>& questions,
                                            const std::vector<EmbeddingVector>& vectors, int k,
                                            std::uint64_t seed) {
    if (questions.size() != vectors.size())
        throw std::invalid_argument("cluster: questions/vectors size mismatch");
    if (questions.empty()) throw std::invalid_argument("cluster: empty input");
    if (k < 1 || static_cast<std::size_t>(k) > vectors.size())
        throw std::invalid_argument("cluster: k must be in [1, n]");

    std::vector<std::size_t> order(questions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return questions[a] < questions[b]; });

    std::vector<EmbeddingVector> sorted_vectors;
    sorted_vectors.reserve(order.size());
    for (std::size_t i : order) sorted_vectors.push_back(vectors[i]);

    std::vector<int> assignment = detail::spherical_kmeans(sorted_vectors, k, seed);

    std::vector<ClusterManifest> raw(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < order.size(); ++i)
        raw[static_cast<std::size_t>(assignment[i])].questions.push_back(questions[order[i]]);

    std::vector<ClusterManifest> manifests;
    for (auto& m : raw)
        if (!m.questions.empty()) manifests.push_back(std::move(m));
    // Members are already sorted (insertion followed question order);
    // order clusters by their first member so ids are content-derived.
    std::sort(manifests.begin(), manifests.end(),
              [](const ClusterManifest& a, const ClusterManifest& b) {
                  return a.questions.front() < b.questions.front();
              });
    for (std::size_t i = 0; i < manifests.size(); ++i) manifests[i].cluster_id = static_cast<int>(i);
    return manifests;
}

/// Writes cluster_{id}.csv per manifest (header `question`).
inline std::vector<std::filesystem::path> write_manifests(const std::vector<ClusterManifest>& manifests,
                                                          const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    std::vector<std::filesystem::path> paths;
    for (const auto& m : manifests) {
        auto path = directory / ("cluster_" + std::to_string(m.cluster_id) + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("write_manifests: cannot write " + path.string());
        out << "question\n";
        for (const auto& q : m.questions) out << csv::format_row({q});
        paths.push_back(path);
    }
    return paths;
}

inline ClusterManifest read_manifest(const std::filesystem::path& path, int cluster_id) {
    auto table = csv::read_file(path.string());
    int qc = table.column("question");
    if (qc < 0) throw std::runtime_error("read_manifest: no question column in " + path.string());
    ClusterManifest m;
    m.cluster_id = cluster_id;
    for (const auto& row : table.rows) m.questions.push_back(row[static_cast<std::size_t>(qc)]);
    return m;
}

}  // namespace pmrel
