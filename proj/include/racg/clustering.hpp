#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "racg/embedding.hpp"

namespace racg {

/// Result of one k-means run. Vectors indexed by point follow input order.
struct ClusterModel {
    std::size_t t = 0;
    std::vector<Embedding> centroids;
    std::vector<std::string> ids;         // one per point
    std::vector<std::size_t> assignment;  // cluster index per point
    std::vector<double> distance;         // Euclidean distance to the assigned centroid
    double wcss = 0.0;
    std::vector<double> wcss_history;     // after every assignment + update step
    int iterations = 0;
    bool converged = false;

    std::vector<std::size_t> cluster_sizes() const;
};

inline constexpr int kMaxKmeansIterations = 100;

/// Lloyd's algorithm from a seeded k-means++ start. Stops when assignments no
/// longer change or after kMaxKmeansIterations. A cluster that empties is
/// re-seeded with the point farthest from its centroid. `ids` defaults to
/// zero-padded point indexes. Throws std::invalid_argument unless
/// 1 <= t <= points.size().
ClusterModel kmeans(std::span<const Embedding> points, std::size_t t, std::uint64_t seed,
                    std::span<const std::string> ids = {});

struct ElbowResult {
    std::size_t t = 0;
    std::size_t t_min = 0;
    std::size_t t_max = 0;
    std::vector<double> wcss;            // wcss[i] is for t_min + i; empty when skipped
    std::vector<double> chord_distance;  // signed, positive below the chord
};

/// Knee of a WCSS curve: the t with the largest signed perpendicular distance
/// below the chord joining its endpoints; ties go to the smallest t.
/// Fewer than three points yields t_min.
std::size_t knee_from_wcss(std::size_t t_min, std::span<const double> wcss,
                           std::vector<double>* chord_distance = nullptr);

/// Runs k-means for every t in [t_min, t_max] and applies knee_from_wcss.
/// With fewer than three candidates, returns t_min with a warning.
ElbowResult elbow_select_t(std::span<const Embedding> points, std::size_t t_min, std::size_t t_max,
                           std::uint64_t seed, std::size_t max_in_flight = 1);

/// Default candidate range [2, min(20, ceil(sqrt(n)))], clamped to n.
std::pair<std::size_t, std::size_t> default_t_range(std::size_t n);

/// floor(p * n) with p treated as a decimal fraction.
std::size_t representative_count(double p, std::size_t n);

/// Per cluster i of size n_i, the floor(p * n_i) ids closest to its centroid
/// (ties by id). Every cluster index appears in the result.
std::map<std::size_t, std::vector<std::string>> select_representatives(const ClusterModel& model, double p);

}  // namespace racg
