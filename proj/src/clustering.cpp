#include "audit/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "audit/common.hpp"

namespace audit::clustering {

double squared_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

namespace {

int nearest_centroid(const Vec& x, const std::vector<Vec>& centroids) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(x, centroids[c]);
        if (d < best_d) {  // strict: lowest index wins on ties
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::vector<Vec> kmeanspp_seed(const std::vector<Vec>& vectors, int k, std::mt19937_64& rng) {
    const size_t n = vectors.size();
    std::vector<Vec> centroids;
    centroids.reserve(k);
    std::uniform_int_distribution<size_t> first(0, n - 1);
    centroids.push_back(vectors[first(rng)]);

    std::vector<double> dist2(n);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& ctr : centroids) best = std::min(best, squared_distance(vectors[i], ctr));
            dist2[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        centroids.push_back(vectors[pick]);
    }
    return centroids;
}

ClusterModel lloyd(const std::vector<Vec>& vectors, int k, uint64_t restart_seed,
                   const KMeansParams& params) {
    const size_t n = vectors.size();
    const size_t dim = vectors.front().size();
    auto rng = make_rng(restart_seed);

    ClusterModel model;
    model.k = k;
    model.centroids = kmeanspp_seed(vectors, k, rng);
    model.assignments.assign(n, 0);

    for (int iter = 0; iter < params.max_iter; ++iter) {
        double sse = 0.0;
        for (size_t i = 0; i < n; ++i) {
            model.assignments[i] = nearest_centroid(vectors[i], model.centroids);
            sse += squared_distance(vectors[i], model.centroids[model.assignments[i]]);
        }
        model.iteration_sse.push_back(sse);

        std::vector<Vec> sums(k, Vec(dim, 0.0));
        std::vector<size_t> counts(k, 0);
        for (size_t i = 0; i < n; ++i) {
            const int c = model.assignments[i];
            ++counts[c];
            for (size_t d = 0; d < dim; ++d) sums[c][d] += vectors[i][d];
        }

        double max_move2 = 0.0;
        for (int c = 0; c < k; ++c) {
            Vec next(dim);
            if (counts[c] > 0) {
                for (size_t d = 0; d < dim; ++d) next[d] = sums[c][d] / counts[c];
            } else {
                // Reseed an empty cluster to the point farthest from its centroid.
                size_t far_i = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    const double d = squared_distance(vectors[i], model.centroids[model.assignments[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                next = vectors[far_i];
            }
            max_move2 = std::max(max_move2, squared_distance(next, model.centroids[c]));
            model.centroids[c] = std::move(next);
        }
        if (std::sqrt(max_move2) < params.tol) break;
    }

    // Final assignment against converged centroids.
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
        model.assignments[i] = nearest_centroid(vectors[i], model.centroids);
        sse += squared_distance(vectors[i], model.centroids[model.assignments[i]]);
    }
    model.sse = sse;
    if (model.iteration_sse.empty() || sse < model.iteration_sse.back())
        model.iteration_sse.push_back(sse);
    return model;
}

}  // namespace

ClusterModel kmeans(const std::vector<Vec>& vectors, int k, uint64_t seed,
                    const KMeansParams& params) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (vectors.empty() || static_cast<size_t>(k) > vectors.size())
        throw std::invalid_argument("kmeans: need at least k vectors");
    const size_t dim = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != dim) throw std::invalid_argument("kmeans: dimension mismatch");

    ClusterModel best;
    bool have = false;
    for (int r = 0; r < std::max(1, params.n_restarts); ++r) {
        ClusterModel m = lloyd(vectors, k, derive_seed(seed, "restart-" + std::to_string(r)), params);
        if (!have || m.sse < best.sse) {
            best = std::move(m);
            have = true;
        }
    }
    best.seed = seed;
    best.n_restarts = std::max(1, params.n_restarts);
    return best;
}

double silhouette(const std::vector<Vec>& vectors, const std::vector<int>& assignments) {
    const size_t n = vectors.size();
    if (assignments.size() != n) throw std::invalid_argument("silhouette: size mismatch");
    int k = 0;
    for (int a : assignments) k = std::max(k, a + 1);
    if (k < 2) throw std::invalid_argument("silhouette: requires k >= 2");
    std::vector<size_t> counts(k, 0);
    for (int a : assignments) ++counts[a];
    for (int c = 0; c < k; ++c)
        if (counts[c] == 0) throw std::invalid_argument("silhouette: empty cluster");

    double total = 0.0;
    std::vector<double> mean_dist(k);
    for (size_t i = 0; i < n; ++i) {
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            mean_dist[assignments[j]] += std::sqrt(squared_distance(vectors[i], vectors[j]));
        }
        const int own = assignments[i];
        if (counts[own] == 1) continue;  // singleton scores 0
        const double a = mean_dist[own] / (counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own) continue;
            b = std::min(b, mean_dist[c] / counts[c]);
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / n;
}

KSelectionDiagnostics select_k(const std::vector<Vec>& vectors, int k_min, int k_max,
                               uint64_t seed, const KMeansParams& params) {
    if (k_min < 1 || k_max < k_min || static_cast<size_t>(k_max) > vectors.size())
        throw std::invalid_argument("select_k: invalid k range");

    KSelectionDiagnostics diag;
    double best_sil = -std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        ClusterModel m = kmeans(vectors, k, derive_seed(seed, "k-" + std::to_string(k)), params);
        double sil = std::numeric_limits<double>::quiet_NaN();
        if (k >= 2) {
            // Degenerate data can leave clusters unused; relabel densely
            // and score 0 when fewer than two survive.
            std::map<int, int> dense;
            std::vector<int> labels(m.assignments.size());
            for (size_t i = 0; i < m.assignments.size(); ++i) {
                auto [it, _] = dense.emplace(m.assignments[i], static_cast<int>(dense.size()));
                labels[i] = it->second;
            }
            sil = dense.size() < 2 ? 0.0 : silhouette(vectors, labels);
            if (sil > best_sil) {  // strict: ties keep the smaller k
                best_sil = sil;
                diag.chosen_k = k;
            }
        }
        diag.per_k.push_back({k, m.sse, sil});
    }
    if (diag.chosen_k == 0) diag.chosen_k = k_min;  // only k = 1 was in range
    return diag;
}

std::vector<ClusterEvidence> label_clusters(
    const ClusterModel& model, const std::vector<Vec>& vectors,
    const std::vector<std::vector<std::string>>& tokens_per_point, int top_n) {
    std::vector<ClusterEvidence> out(model.k);
    for (int c = 0; c < model.k; ++c) {
        std::vector<std::pair<double, size_t>> by_dist;
        std::map<std::string, int> freq;
        for (size_t i = 0; i < vectors.size(); ++i) {
            if (model.assignments[i] != c) continue;
            by_dist.emplace_back(squared_distance(vectors[i], model.centroids[c]), i);
            if (i < tokens_per_point.size())
                for (const auto& t : tokens_per_point[i]) ++freq[t];
        }
        std::sort(by_dist.begin(), by_dist.end());
        for (size_t i = 0; i < by_dist.size() && static_cast<int>(i) < top_n; ++i)
            out[c].nearest_ids.push_back(by_dist[i].second);
        std::vector<std::pair<std::string, int>> tokens(freq.begin(), freq.end());
        std::sort(tokens.begin(), tokens.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (static_cast<int>(tokens.size()) > top_n) tokens.resize(top_n);
        out[c].top_tokens = std::move(tokens);
    }
    return out;
}

}  // namespace audit::clustering
