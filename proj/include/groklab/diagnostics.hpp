#pragma once

#include <string>
#include <vector>

#include "groklab/task.hpp"
#include "groklab/tensor.hpp"

namespace groklab {

// Mean Euclidean distance between cyclically consecutive embedding rows
// (row p wraps to row 0). With raw=true the 1/p factor is omitted, matching
// the un-normalized curves some reports prefer.
double med(const Matrix& embedding_rows, bool raw = false);

// Per-residue-class geometry of the pair sums phi(i)+phi(j) over train pairs:
// centroid, dispersion (max member distance to centroid), and the scalar
// separation_ratio = max dispersion / min centroid gap. Ratios below 1 mean
// every class's cloud is tighter than the gap to its nearest neighbour.
struct UniformityReport {
    Matrix centroids;                // one row per class; excluded rows are zero
    std::vector<double> dispersion;  // per class
    std::vector<long long> counts;   // train pairs per class
    std::vector<int> excluded;       // classes with no train pair
    double max_dispersion = 0.0;
    double min_centroid_gap = 0.0;
    double separation_ratio = 0.0;
};
UniformityReport class_uniformity(const Matrix& embedding_rows,
                                  const std::vector<Pair>& train_pairs,
                                  const ResidueClasses& classes);
// Centroids are omitted from the JSON (dump them via save_matrix if needed).
std::string uniformity_report_to_json(const UniformityReport& report);

// Distance between the convex hulls of two point sets (rows = points),
// computed as the minimum-norm point of the Minkowski difference via
// Wolfe's corral algorithm (support steps + exact affine projections).
// Zero means the hulls intersect within tol; on success the estimate
// exceeds the true distance by at most tol.
struct HullDistance {
    double distance = 0.0;
    bool converged = false;
    int iterations = 0;
};
HullDistance hull_distance(const Matrix& a_points, const Matrix& b_points, double tol = 1e-7,
                           int max_iters = 20000);

// Orthogonally project both sets onto the subspace spanned by basis_rows
// (k x d, rows orthonormal within 1e-8), then measure hull distance.
struct Separability {
    bool separable = false;
    double distance = 0.0;
    bool converged = false;
};
Separability projected_separability(const Matrix& a_points, const Matrix& b_points,
                                    const Matrix& basis_rows, double tol = 1e-7);

// Top-k principal directions of a point cloud (rows = points), returned as
// k orthonormal rows ordered by decreasing variance.
Matrix top_principal_components(const Matrix& points, int k);

}  // namespace groklab
