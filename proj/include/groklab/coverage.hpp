#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groklab/split.hpp"
#include "groklab/task.hpp"

namespace groklab {

// Manhattan-distance coverage of the test set by the train set, on the plain
// grid or on the torus (coordinates wrap mod p). A test point is covered when
// some train point lies at distance strictly less than `radius`.
enum class Metric { grid, torus };

struct CoverageConfig {
    int radius = 1;
    Metric metric = Metric::torus;
};

struct CoverageReport {
    double prop = 0.0;
    long long ball_size = 0;
    double alpha_threshold = 0.0;
    double full_coverage_bound = 0.0;
    int radius = 1;
    Metric metric = Metric::torus;
    size_t train_size = 0;
    size_t test_size = 0;
    // Minimum distance from each test point to the train set; -1 bucket
    // collects points with no train point reachable (empty train set).
    std::map<int, long long> min_distance_histogram;
};

// Closed-form count of grid points at Manhattan distance < radius from a
// fixed point: 1 + sum_{d=1}^{radius-1} 4d = 2 radius^2 - 2 radius + 1.
// Exact on the torus while radius <= floor(p/2); on the plain grid it is the
// interior-point count (boundary truncation is handled by the exact scan in
// coverage_proportion, not here).
long long ball_size(int radius, Metric metric, int p);

// Exact minimum Manhattan distance from every grid cell to the train set,
// via multi-source BFS over the 4-neighbour graph. Row-major p*p layout;
// unreachable cells (empty train set) hold -1.
std::vector<int> distance_transform(const std::vector<Pair>& train, int p, Metric metric);

// Fraction of test points covered at distance < config.radius. An empty test
// set is vacuously fully covered (1.0) as long as the train set is non-empty;
// both sets empty is rejected.
double coverage_proportion(const Split& split, int p, const CoverageConfig& config);

CoverageReport coverage_report(const Split& split, int p, const CoverageConfig& config);
std::string coverage_report_to_json(const CoverageReport& report);

// Nearest-neighbour audit restricted to residue classes: a test pair is
// satisfied when some train pair of the same class lies at Manhattan
// distance < d1. Classes with no test pairs count as vacuously satisfied.
struct ConditionReport {
    int d1 = 1;
    double overall = 0.0;
    std::vector<double> per_class;
    std::vector<long long> class_test_counts;
};

ConditionReport condition_i_report(const Split& split, const ResidueClasses& classes, int p,
                                   int d1, Metric metric);

// 2 ln(p) / C: the train-fraction threshold above which full coverage is
// expected with probability -> 1.
double alpha_threshold(int p, long long C);

// max(0, 1 - N (1 - C/N)^m) with N = p^2: union-bound lower bound on the
// probability that m uniformly drawn train points cover every cell.
double full_coverage_bound(int p, long long C, long long m);

struct MonteCarloProp {
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean coverage proportion over `trials` independent uniform train sets of
// size floor(alpha * p^2). Each trial derives its own RNG stream from
// (seed, trial index), so results do not depend on evaluation order.
MonteCarloProp monte_carlo_expected_prop(int p, double alpha, int radius, Metric metric,
                                         int trials, uint64_t seed);

}  // namespace groklab
