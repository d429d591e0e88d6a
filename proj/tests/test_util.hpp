#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "groklab/rng.hpp"
#include "groklab/tensor.hpp"

namespace testutil {

// Self-cleaning scratch directory, unique per instance.
class TempDir {
public:
    explicit TempDir(const std::string& stem = "groklab-test") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (stem + "-" + std::to_string(counter.fetch_add(1)) + "-" +
                 std::to_string(reinterpret_cast<uintptr_t>(this) & 0xffff));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline groklab::Matrix random_matrix(int rows, int cols, groklab::Rng& rng, double scale = 1.0) {
    groklab::Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.gaussian();
    return m;
}

}  // namespace testutil

#include "groklab/trainer.hpp"

namespace testutil {

// Fixed synthetic training curve shared by the SVG golden test and the
// generator that produced the golden file. Any change here invalidates
// tests/golden/report.svg.
inline std::vector<groklab::MetricsRow> demo_metrics_rows() {
    std::vector<groklab::MetricsRow> rows;
    for (int k = 0; k < 24; ++k) {
        groklab::MetricsRow r;
        r.epoch = 1 + k * k * 4;
        r.train_loss = 4.5 * std::exp(-0.35 * k) + 1e-4;
        r.test_loss = 4.6 * std::exp(-0.11 * k) + 2e-3;
        r.train_acc = 1.0 - std::exp(-0.4 * k);
        r.test_acc = k < 12 ? 0.02 + 0.01 * k : 1.0 - std::exp(-0.5 * (k - 10));
        r.med = 1.8 * std::exp(-0.07 * k) + 0.2;
        r.weight_norm_sum = 30.0 - 0.5 * k;
        r.weight_sq_sum = (30.0 - 0.5 * k) * (30.0 - 0.5 * k) / 12.0;
        r.wall_ms = 100 + 17 * k;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace testutil
