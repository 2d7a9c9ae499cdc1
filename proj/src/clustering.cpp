#include "racg/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "racg/log.hpp"
#include "racg/parallel.hpp"

namespace racg {
namespace {

// mt19937_64 output is fully specified; the standard distributions are not,
// so uniform doubles are derived by hand to stay platform-stable.
double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

std::vector<Embedding> kmeanspp_init(std::span<const Embedding> points, std::size_t t, std::mt19937_64& gen)
{
    const std::size_t n = points.size();
    std::vector<Embedding> centroids;
    std::vector<bool> chosen(n, false);

    std::size_t first = std::min(n - 1, static_cast<std::size_t>(uniform01(gen) * static_cast<double>(n)));
    centroids.push_back(points[first]);
    chosen[first] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_euclidean(points[i], centroids.back());

    while (centroids.size() < t) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = uniform01(gen) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > target) break;
            }
        }
        if (pick == n) {
            // Every point coincides with a centroid; take the first unused one.
            pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
        }
        chosen[pick] = true;
        centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_euclidean(points[i], centroids.back()));
    }
    return centroids;
}

std::size_t nearest(std::span<const double> point, const std::vector<Embedding>& centroids, double* best_d2)
{
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        double d = squared_euclidean(point, centroids[c]);
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    if (best_d2) *best_d2 = best_dist;
    return best;
}

}  // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const
{
    std::vector<std::size_t> sizes(t, 0);
    for (auto c : assignment) ++sizes[c];
    return sizes;
}

ClusterModel kmeans(std::span<const Embedding> points, std::size_t t, std::uint64_t seed,
                    std::span<const std::string> ids)
{
    const std::size_t n = points.size();
    if (t < 1 || t > n)
        throw std::invalid_argument("kmeans: need 1 <= t <= number of points (t=" + std::to_string(t) +
                                    ", n=" + std::to_string(n) + ")");
    if (!ids.empty() && ids.size() != n) throw std::invalid_argument("kmeans: ids must match points");
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) throw std::invalid_argument("kmeans: points have mixed dimensions");
    }

    ClusterModel model;
    model.t = t;
    if (ids.empty()) {
        const int width = static_cast<int>(std::to_string(n).size());
        for (std::size_t i = 0; i < n; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%0*zu", width, i);
            model.ids.emplace_back(buf);
        }
    } else {
        model.ids.assign(ids.begin(), ids.end());
    }

    std::mt19937_64 gen(seed);
    model.centroids = kmeanspp_init(points, t, gen);
    model.assignment.assign(n, std::numeric_limits<std::size_t>::max());
    std::vector<double> d2(n);

    for (int iter = 1; iter <= kMaxKmeansIterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            auto c = nearest(points[i], model.centroids, &d2[i]);
            if (c != model.assignment[i]) {
                model.assignment[i] = c;
                changed = true;
            }
        }

        auto sizes = model.cluster_sizes();
        for (std::size_t c = 0; c < t; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t donor = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[model.assignment[i]] > 1 && (donor == n || d2[i] > d2[donor])) donor = i;
            }
            --sizes[model.assignment[donor]];
            model.assignment[donor] = c;
            sizes[c] = 1;
            d2[donor] = 0.0;
            changed = true;
        }

        for (auto& centroid : model.centroids) std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& centroid = model.centroids[model.assignment[i]];
            for (std::size_t d = 0; d < dim; ++d) centroid[d] += points[i][d];
        }
        for (std::size_t c = 0; c < t; ++c) {
            for (auto& x : model.centroids[c]) x /= static_cast<double>(sizes[c]);
        }

        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) wcss += squared_euclidean(points[i], model.centroids[model.assignment[i]]);
        model.wcss_history.push_back(wcss);
        model.wcss = wcss;
        model.iterations = iter;
        if (!changed) {
            model.converged = true;
            break;
        }
    }
    if (!model.converged)
        log::warn("kmeans did not converge within " + std::to_string(kMaxKmeansIterations) + " iterations");

    model.distance.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        model.distance[i] = std::sqrt(squared_euclidean(points[i], model.centroids[model.assignment[i]]));
    return model;
}

std::size_t knee_from_wcss(std::size_t t_min, std::span<const double> wcss, std::vector<double>* chord_distance)
{
    if (chord_distance) chord_distance->clear();
    if (wcss.size() < 3) return t_min;

    const double x0 = static_cast<double>(t_min);
    const double y0 = wcss.front();
    const double dx = static_cast<double>(wcss.size() - 1);
    const double dy = wcss.back() - y0;
    const double len = std::hypot(dx, dy);

    std::size_t best = 0;
    double best_dist = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < wcss.size(); ++i) {
        const double px = static_cast<double>(t_min + i);
        // Cross product sign: positive when the point lies below the chord.
        const double dist = (dx * (y0 - wcss[i]) - (x0 - px) * dy) / len;
        if (chord_distance) chord_distance->push_back(dist);
        if (dist > best_dist) {
            best_dist = dist;
            best = i;
        }
    }
    return t_min + best;
}

ElbowResult elbow_select_t(std::span<const Embedding> points, std::size_t t_min, std::size_t t_max,
                           std::uint64_t seed, std::size_t max_in_flight)
{
    if (t_min < 1) throw std::invalid_argument("elbow: t_min must be >= 1");
    if (t_max > points.size()) throw std::invalid_argument("elbow: t_max exceeds the number of points");
    if (t_max < t_min) throw std::invalid_argument("elbow: empty t range");

    ElbowResult out;
    out.t_min = t_min;
    out.t_max = t_max;
    const std::size_t candidates = t_max - t_min + 1;
    if (candidates < 3) {
        log::warn("elbow: fewer than 3 candidate cluster counts, using t=" + std::to_string(t_min));
        out.t = t_min;
        return out;
    }
    out.wcss.resize(candidates);
    parallel_for(candidates, max_in_flight,
                 [&](std::size_t i) { out.wcss[i] = kmeans(points, t_min + i, seed).wcss; });
    out.t = knee_from_wcss(t_min, out.wcss, &out.chord_distance);
    return out;
}

std::pair<std::size_t, std::size_t> default_t_range(std::size_t n)
{
    if (n == 0) throw std::invalid_argument("elbow: no points");
    const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    const std::size_t t_max = std::max<std::size_t>(1, std::min({std::size_t{20}, root, n}));
    return {std::min<std::size_t>(2, t_max), t_max};
}

std::size_t representative_count(double p, std::size_t n)
{
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("poisoning proportion p must lie in [0, 1]");
    // The epsilon absorbs binary representation error of decimal p (0.1 * 10 etc.).
    return std::min(n, static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 1e-9)));
}

std::map<std::size_t, std::vector<std::string>> select_representatives(const ClusterModel& model, double p)
{
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t c = 0; c < model.t; ++c) members[c];
    for (std::size_t i = 0; i < model.assignment.size(); ++i) members[model.assignment[i]].push_back(i);

    std::map<std::size_t, std::vector<std::string>> out;
    for (auto& [cluster, idx] : members) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (model.distance[a] != model.distance[b]) return model.distance[a] < model.distance[b];
            return model.ids[a] < model.ids[b];
        });
        auto& chosen = out[cluster];
        const auto count = representative_count(p, idx.size());
        for (std::size_t j = 0; j < count; ++j) chosen.push_back(model.ids[idx[j]]);
    }
    return out;
}

}  // namespace racg
