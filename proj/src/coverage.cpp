#include "groklab/coverage.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "groklab/rng.hpp"
#include "json.hpp"

namespace groklab {

long long ball_size(int radius, Metric, int) {
    if (radius < 1) throw std::invalid_argument("ball_size: radius must be >= 1");
    return 2LL * radius * radius - 2LL * radius + 1;
}

std::vector<int> distance_transform(const std::vector<Pair>& train, int p, Metric metric) {
    const size_t n = static_cast<size_t>(p) * p;
    std::vector<int> dist(n, -1);
    std::deque<int> queue;
    for (const auto& pr : train) {
        const size_t idx = static_cast<size_t>(pr.i) * p + pr.j;
        if (dist[idx] == 0) continue;
        dist[idx] = 0;
        queue.push_back(static_cast<int>(idx));
    }
    const bool wrap = metric == Metric::torus;
    while (!queue.empty()) {
        const int idx = queue.front();
        queue.pop_front();
        const int i = idx / p;
        const int j = idx % p;
        const int d = dist[idx];
        auto visit = [&](int ni, int nj) {
            if (wrap) {
                ni = (ni + p) % p;
                nj = (nj + p) % p;
            } else if (ni < 0 || ni >= p || nj < 0 || nj >= p) {
                return;
            }
            const size_t nidx = static_cast<size_t>(ni) * p + nj;
            if (dist[nidx] == -1) {
                dist[nidx] = d + 1;
                queue.push_back(static_cast<int>(nidx));
            }
        };
        visit(i - 1, j);
        visit(i + 1, j);
        visit(i, j - 1);
        visit(i, j + 1);
    }
    return dist;
}

double coverage_proportion(const Split& split, int p, const CoverageConfig& config) {
    if (config.radius < 1) throw std::invalid_argument("coverage_proportion: radius must be >= 1");
    if (split.test.empty()) {
        if (split.train.empty())
            throw std::invalid_argument("coverage_proportion: empty split");
        return 1.0;
    }
    const auto dist = distance_transform(split.train, p, config.metric);
    long long covered = 0;
    for (const auto& pr : split.test) {
        const int d = dist[static_cast<size_t>(pr.i) * p + pr.j];
        if (d >= 0 && d < config.radius) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(split.test.size());
}

CoverageReport coverage_report(const Split& split, int p, const CoverageConfig& config) {
    CoverageReport report;
    report.radius = config.radius;
    report.metric = config.metric;
    report.train_size = split.train.size();
    report.test_size = split.test.size();
    report.ball_size = ball_size(config.radius, config.metric, p);
    report.alpha_threshold = alpha_threshold(p, report.ball_size);
    report.full_coverage_bound =
        full_coverage_bound(p, report.ball_size, static_cast<long long>(split.train.size()));
    report.prop = coverage_proportion(split, p, config);
    if (!split.test.empty()) {
        const auto dist = distance_transform(split.train, p, config.metric);
        for (const auto& pr : split.test)
            report.min_distance_histogram[dist[static_cast<size_t>(pr.i) * p + pr.j]] += 1;
    }
    return report;
}

std::string coverage_report_to_json(const CoverageReport& report) {
    nlohmann::ordered_json out;
    out["prop"] = report.prop;
    out["ball_size"] = report.ball_size;
    out["alpha_threshold"] = report.alpha_threshold;
    out["full_coverage_bound"] = report.full_coverage_bound;
    out["radius"] = report.radius;
    out["metric"] = report.metric == Metric::torus ? "torus" : "grid";
    out["train_size"] = report.train_size;
    out["test_size"] = report.test_size;
    nlohmann::ordered_json hist = nlohmann::ordered_json::object();
    for (const auto& [d, count] : report.min_distance_histogram)
        hist[std::to_string(d)] = count;
    out["min_distance_histogram"] = hist;
    return out.dump();
}

ConditionReport condition_i_report(const Split& split, const ResidueClasses& classes, int p,
                                   int d1, Metric metric) {
    if (d1 < 1) throw std::invalid_argument("condition_i_report: d1 must be >= 1");
    const int num_classes = static_cast<int>(classes.classes.size());

    std::vector<std::vector<Pair>> train_by_class(num_classes);
    for (const auto& pr : split.train)
        train_by_class[classes.class_of(pr, p)].push_back(pr);
    std::vector<std::vector<Pair>> test_by_class(num_classes);
    for (const auto& pr : split.test)
        test_by_class[classes.class_of(pr, p)].push_back(pr);

    ConditionReport report;
    report.d1 = d1;
    report.per_class.assign(num_classes, 1.0);
    report.class_test_counts.assign(num_classes, 0);
    long long satisfied = 0;
    for (int c = 0; c < num_classes; ++c) {
        report.class_test_counts[c] = static_cast<long long>(test_by_class[c].size());
        if (test_by_class[c].empty()) continue;
        const auto dist = distance_transform(train_by_class[c], p, metric);
        long long ok = 0;
        for (const auto& pr : test_by_class[c]) {
            const int d = dist[static_cast<size_t>(pr.i) * p + pr.j];
            if (d >= 0 && d < d1) ++ok;
        }
        satisfied += ok;
        report.per_class[c] = static_cast<double>(ok) / static_cast<double>(test_by_class[c].size());
    }
    report.overall = split.test.empty()
                         ? 1.0
                         : static_cast<double>(satisfied) / static_cast<double>(split.test.size());
    return report;
}

double alpha_threshold(int p, long long C) {
    if (C < 1) throw std::invalid_argument("alpha_threshold: C must be >= 1");
    return 2.0 * std::log(static_cast<double>(p)) / static_cast<double>(C);
}

double full_coverage_bound(int p, long long C, long long m) {
    const double N = static_cast<double>(p) * p;
    if (m < 0 || static_cast<double>(m) > N)
        throw std::invalid_argument("full_coverage_bound: m must lie in [0, p^2]");
    if (C < 0 || static_cast<double>(C) > N)
        throw std::invalid_argument("full_coverage_bound: C must lie in [0, p^2]");
    const double bound = 1.0 - N * std::pow(1.0 - static_cast<double>(C) / N, static_cast<double>(m));
    return bound < 0.0 ? 0.0 : bound;
}

MonteCarloProp monte_carlo_expected_prop(int p, double alpha, int radius, Metric metric,
                                         int trials, uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("monte_carlo_expected_prop: trials must be >= 1");
    if (!(alpha >= 0.0) || alpha > 1.0)
        throw std::invalid_argument("monte_carlo_expected_prop: alpha must lie in [0,1]");
    const size_t N = static_cast<size_t>(p) * p;
    const auto m = static_cast<size_t>(std::floor(alpha * static_cast<double>(N)));
    const CoverageConfig config{radius, metric};

    std::vector<double> props(trials);
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<Pair> cells;
        cells.reserve(N);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) cells.push_back({i, j});
        Rng rng = Rng::stream(seed, StreamTag::monte_carlo, static_cast<uint64_t>(trial));
        rng.shuffle(cells);
        Split split;
        split.train.assign(cells.begin(), cells.begin() + static_cast<ptrdiff_t>(m));
        split.test.assign(cells.begin() + static_cast<ptrdiff_t>(m), cells.end());
        props[trial] = m == 0 ? 0.0 : coverage_proportion(split, p, config);
    }

    MonteCarloProp result;
    for (double v : props) result.mean += v;
    result.mean /= trials;
    if (trials > 1) {
        double ss = 0.0;
        for (double v : props) ss += (v - result.mean) * (v - result.mean);
        result.std_error = std::sqrt(ss / (trials - 1)) / std::sqrt(static_cast<double>(trials));
    }
    return result;
}

}  // namespace groklab
