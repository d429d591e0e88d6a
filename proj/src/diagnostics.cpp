#include "groklab/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace groklab {

double med(const Matrix& rows, bool raw) {
    const Eigen::Index p = rows.rows();
    if (p < 2) throw std::invalid_argument("med: need at least 2 rows");
    double total = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        total += (rows.row((i + 1) % p) - rows.row(i)).norm();
    return raw ? total : total / static_cast<double>(p);
}

UniformityReport class_uniformity(const Matrix& embedding_rows,
                                  const std::vector<Pair>& train_pairs,
                                  const ResidueClasses& classes) {
    const int p = static_cast<int>(embedding_rows.rows());
    const int num_classes = static_cast<int>(classes.classes.size());
    const Eigen::Index d = embedding_rows.cols();

    UniformityReport report;
    report.centroids = Matrix::Zero(num_classes, d);
    report.dispersion.assign(num_classes, 0.0);
    report.counts.assign(num_classes, 0);

    for (const auto& pr : train_pairs) {
        if (pr.i < 0 || pr.i >= p || pr.j < 0 || pr.j >= p)
            throw std::invalid_argument("class_uniformity: pair outside embedding range");
        const int c = classes.class_of(pr, p);
        report.centroids.row(c) += embedding_rows.row(pr.i) + embedding_rows.row(pr.j);
        report.counts[c] += 1;
    }
    for (int c = 0; c < num_classes; ++c) {
        if (report.counts[c] == 0) {
            report.excluded.push_back(c);
            continue;
        }
        report.centroids.row(c) /= static_cast<double>(report.counts[c]);
    }
    for (const auto& pr : train_pairs) {
        const int c = classes.class_of(pr, p);
        const double dist =
            (embedding_rows.row(pr.i) + embedding_rows.row(pr.j) - report.centroids.row(c)).norm();
        report.dispersion[c] = std::max(report.dispersion[c], dist);
    }

    report.min_centroid_gap = std::numeric_limits<double>::infinity();
    for (int a = 0; a < num_classes; ++a) {
        if (report.counts[a] == 0) continue;
        report.max_dispersion = std::max(report.max_dispersion, report.dispersion[a]);
        for (int b = a + 1; b < num_classes; ++b) {
            if (report.counts[b] == 0) continue;
            report.min_centroid_gap = std::min(
                report.min_centroid_gap, (report.centroids.row(a) - report.centroids.row(b)).norm());
        }
    }
    if (!std::isfinite(report.min_centroid_gap)) {  // fewer than two populated classes
        report.min_centroid_gap = 0.0;
        report.separation_ratio = 0.0;
    } else {
        report.separation_ratio =
            report.min_centroid_gap > 0.0
                ? report.max_dispersion / report.min_centroid_gap
                : std::numeric_limits<double>::infinity();
    }
    return report;
}

std::string uniformity_report_to_json(const UniformityReport& report) {
    nlohmann::ordered_json out;
    out["separation_ratio"] = report.separation_ratio;
    out["max_dispersion"] = report.max_dispersion;
    out["min_centroid_gap"] = report.min_centroid_gap;
    out["dispersion"] = report.dispersion;
    out["counts"] = report.counts;
    out["excluded"] = report.excluded;
    return out.dump();
}

namespace {

// Support point of the Minkowski difference Conv(A) - Conv(B) in direction v.
Eigen::RowVectorXd support_diff(const Matrix& a, const Matrix& b, const Eigen::RowVectorXd& v) {
    Eigen::Index best_a = 0, best_b = 0;
    (a * v.transpose()).maxCoeff(&best_a);
    (b * v.transpose()).minCoeff(&best_b);
    return a.row(best_a) - b.row(best_b);
}

}  // namespace

HullDistance hull_distance(const Matrix& a_points, const Matrix& b_points, double tol,
                           int max_iters) {
    if (a_points.rows() == 0 || b_points.rows() == 0)
        throw std::invalid_argument("hull_distance: empty point set");
    if (a_points.cols() != b_points.cols())
        throw std::invalid_argument("hull_distance: dimension mismatch");

    HullDistance result;
    const Eigen::Index dim = a_points.cols();

    // Wolfe's minimum-norm-point algorithm: keep a corral of difference
    // vertices whose convex combination is the current iterate; each outer
    // iteration adds the support vertex, then the minor cycle projects onto
    // the affine hull of the corral, shedding vertices until the affine
    // minimizer is a convex combination. Unlike plain support-function
    // descent this terminates on a face instead of zigzagging toward it.
    Matrix corral(1, dim);
    corral.row(0) = a_points.row(0) - b_points.row(0);
    Eigen::VectorXd lambda = Eigen::VectorXd::Ones(1);
    Eigen::RowVectorXd x = corral.row(0);

    const auto drop_vertex = [&](Eigen::Index gone) {
        const Eigen::Index k = corral.rows();
        for (Eigen::Index r = gone; r + 1 < k; ++r) {
            corral.row(r) = corral.row(r + 1);
            lambda(r) = lambda(r + 1);
        }
        corral.conservativeResize(k - 1, dim);
        lambda.conservativeResize(k - 1);
    };

    for (int it = 1; it <= max_iters; ++it) {
        result.iterations = it;
        const double nx = x.norm();
        if (nx <= tol) {  // hulls intersect
            result.distance = 0.0;
            result.converged = true;
            return result;
        }
        const Eigen::RowVectorXd s = support_diff(a_points, b_points, Eigen::RowVectorXd(-x));
        // nx is an upper bound on the distance, dot(x,s)/nx a lower bound.
        const double gap = nx - std::max(0.0, x.dot(s) / nx);
        if (gap <= tol) {
            result.distance = nx;
            result.converged = true;
            return result;
        }
        // No progress is possible if the support vertex is already corralled;
        // report the (still gap-bounded) estimate honestly as unconverged.
        bool duplicate = false;
        for (Eigen::Index r = 0; r < corral.rows() && !duplicate; ++r)
            duplicate = (corral.row(r) - s).squaredNorm() <= 1e-30 * (1.0 + s.squaredNorm());
        if (duplicate) break;

        corral.conservativeResize(corral.rows() + 1, dim);
        corral.row(corral.rows() - 1) = s;
        lambda.conservativeResize(lambda.size() + 1);
        lambda(lambda.size() - 1) = 0.0;

        // Minor cycle: affine minimum-norm point, clipped back into the hull.
        while (true) {
            const Eigen::Index k = corral.rows();
            Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(k + 1, k + 1);
            sys.topLeftCorner(k, k) = corral * corral.transpose();
            sys.topRightCorner(k, 1).setOnes();
            sys.bottomLeftCorner(1, k).setOnes();
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
            rhs(k) = 1.0;
            Eigen::VectorXd sol = sys.fullPivLu().solve(rhs);
            if (!sol.allFinite() || (sys * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) {
                // Degenerate (affinely dependent) corral: shed the weakest
                // vertex and retry; with one vertex the system is never
                // singular, so this loop terminates.
                Eigen::Index weakest = 0;
                lambda.minCoeff(&weakest);
                drop_vertex(weakest);
                continue;
            }
            Eigen::VectorXd mu = sol.head(k);
            if ((mu.array() >= -1e-12).all()) {
                lambda = mu.cwiseMax(0.0);
                lambda /= lambda.sum();
                break;
            }
            // Walk from lambda toward mu until the first coefficient hits
            // zero, then drop every vertex that reached the boundary.
            double theta = 1.0;
            for (Eigen::Index r = 0; r < k; ++r)
                if (mu(r) < 0.0) theta = std::min(theta, lambda(r) / (lambda(r) - mu(r)));
            lambda = (1.0 - theta) * lambda + theta * mu;
            for (Eigen::Index r = k - 1; r >= 0; --r)
                if (lambda(r) <= 1e-12) drop_vertex(r);
            if (lambda.size() == 0) {  // numerical collapse; restart from s
                corral.conservativeResize(1, dim);
                corral.row(0) = s;
                lambda = Eigen::VectorXd::Ones(1);
                break;
            }
            lambda /= lambda.sum();
        }
        x = (lambda.transpose() * corral).row(0);
    }
    result.distance = std::max(0.0, x.norm());
    result.converged = false;
    return result;
}

Separability projected_separability(const Matrix& a_points, const Matrix& b_points,
                                    const Matrix& basis_rows, double tol) {
    if (basis_rows.rows() == 0) throw std::invalid_argument("projected_separability: empty basis");
    if (basis_rows.cols() != a_points.cols() || basis_rows.cols() != b_points.cols())
        throw std::invalid_argument("projected_separability: basis dimension mismatch");
    const Matrix gram = basis_rows * basis_rows.transpose();
    const double defect =
        (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (defect > 1e-8)
        throw std::invalid_argument("projected_separability: basis is not orthonormal");

    const Matrix a_proj = a_points * basis_rows.transpose();
    const Matrix b_proj = b_points * basis_rows.transpose();
    const HullDistance hd = hull_distance(a_proj, b_proj, tol);
    return {hd.converged && hd.distance > tol, hd.distance, hd.converged};
}

Matrix top_principal_components(const Matrix& points, int k) {
    if (points.rows() < 1) throw std::invalid_argument("top_principal_components: no points");
    const Eigen::Index d = points.cols();
    if (k < 1 || k > d) throw std::invalid_argument("top_principal_components: bad k");

    const Eigen::RowVectorXd mean = points.colwise().mean();
    const Matrix centered = points.rowwise() - mean;
    const Matrix cov = centered.transpose() * centered / static_cast<double>(points.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("top_principal_components: eigensolver failed");

    // Eigenvalues come back ascending; take the last k, largest first.
    Matrix basis(k, d);
    for (int i = 0; i < k; ++i) basis.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
    return basis;
}

}  // namespace groklab
