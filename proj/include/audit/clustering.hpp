#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace audit::clustering {

using Vec = std::vector<double>;

struct KMeansParams {
    int n_restarts = 10;
    int max_iter = 300;
    double tol = 1e-6;
};

struct ClusterModel {
    int k = 1;
    std::vector<Vec> centroids;
    std::vector<int> assignments;  // index-aligned with the input vectors
    double sse = 0.0;
    uint64_t seed = 0;
    int n_restarts = 0;
    // SSE after each Lloyd iteration of the winning restart.
    std::vector<double> iteration_sse;
};

// Lloyd iterations from k-means++ seeding, best of n_restarts by SSE.
// Deterministic for fixed (seed, data order). Ties in assignment break
// to the lowest cluster index. Empty clusters are reseeded to the point
// farthest from its centroid.
ClusterModel kmeans(const std::vector<Vec>& vectors, int k, uint64_t seed,
                    const KMeansParams& params = {});

// Mean silhouette score over all points; requires k >= 2 and every
// cluster non-empty. Points in singleton clusters score 0.
double silhouette(const std::vector<Vec>& vectors, const std::vector<int>& assignments);

struct KSelectionDiagnostics {
    struct PerK {
        int k;
        double sse;
        double mean_silhouette;  // NaN for k = 1
    };
    std::vector<PerK> per_k;
    int chosen_k = 0;
};

// Runs kmeans for each k in [k_min, k_max], records SSE and silhouette,
// and picks the k with the highest mean silhouette (ties -> smaller k).
KSelectionDiagnostics select_k(const std::vector<Vec>& vectors, int k_min, int k_max,
                               uint64_t seed, const KMeansParams& params = {});

struct ClusterEvidence {
    std::vector<size_t> nearest_ids;              // indices of nearest-to-centroid points
    std::vector<std::pair<std::string, int>> top_tokens;
};

// Surfaces evidence for manual cluster naming: per cluster, the top_n
// points nearest the centroid and the most frequent tokens.
std::vector<ClusterEvidence> label_clusters(
    const ClusterModel& model, const std::vector<Vec>& vectors,
    const std::vector<std::vector<std::string>>& tokens_per_point, int top_n);

double squared_distance(const Vec& a, const Vec& b);

}  // namespace audit::clustering
