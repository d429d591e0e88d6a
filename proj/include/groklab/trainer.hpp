#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "groklab/model.hpp"
#include "groklab/split.hpp"
#include "groklab/task.hpp"

namespace groklab {

// Initialization variants. Circulant fills the embedding matrix with cyclic
// shifts of one random vector (row i is v rotated right by i, wrapping for
// vocab rows past d_model); every other matrix is drawn exactly as Standard
// would with the same train seed, so paired runs differ only in w_e.
struct StandardInit {
    double std = 0.02;
};
struct CirculantInit {
    uint64_t seed = 0;
    double std = 0.02;
};
using InitVariant = std::variant<StandardInit, CirculantInit>;

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    double weight_decay = 1.0;
    long long epochs = 1;
    int batch_size = 0;  // 0 = full batch
    uint64_t seed = 0;
    InitVariant init = StandardInit{};
    int eval_every = 10;
    // Optional controls used by long experiments; both off by default.
    double stop_at_test_acc = -1.0;  // stop once test accuracy reaches this (>0 enables)
    int snapshot_every = 0;          // keep embedding rows every k-th eval (0 = off)
    void validate() const;
};

struct MetricsRow {
    long long epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double med = 0.0;
    double weight_norm_sum = 0.0;  // sum of Frobenius norms
    double weight_sq_sum = 0.0;    // sum of squared Frobenius norms (the decayed quantity)
    long long wall_ms = 0;
};

struct GrokkingParams {
    double train_thresh = 0.99;
    int window = 50;  // evals of sustained memorization
    double rise_frac = 0.5;
};

struct GrokkingReport {
    std::optional<long long> memorization_epoch;
    std::optional<long long> go_epoch;  // absent = the rise never happens
    double u_acc = 0.0;                 // best test accuracy
    double l_acc = 0.0;                 // worst test accuracy after first reaching ~u_acc
};

ModelParams init_params(const ModelConfig& config, const InitVariant& init, uint64_t seed);

struct AdamWState {
    std::vector<Matrix> m, v;  // one slot per named matrix
    long long t = 0;
};

// Decoupled decay: theta <- theta - lr*mhat/(sqrt(vhat)+eps) - lr*lambda*theta,
// applied to every matrix including the embeddings.
void adamw_step(ModelParams& params, const std::vector<Matrix>& grads, AdamWState& state,
                const TrainConfig& config);

using MetricsSink = std::function<void(const MetricsRow&)>;

struct TrainResult {
    std::vector<MetricsRow> metrics;
    ModelParams params;
    GrokkingReport grokking;
    bool diverged = false;
    long long final_epoch = 0;
    std::vector<std::pair<long long, Matrix>> embedding_snapshots;  // (epoch, p x d rows)
};

// Full training loop. Metric rows are recorded on eval epochs (first epoch,
// every eval_every-th, and the last); train loss/accuracy come from the
// training pass itself and test metrics are computed with the same
// pre-update parameters, so a row describes one parameter state.
// Divergence (non-finite loss or gradient) stops the run, keeping the rows
// gathered so far and setting `diverged`.
TrainResult train(const TaskSpec& task, const Split& split, const ModelConfig& model_config,
                  const TrainConfig& train_config, const MetricsSink& sink = {});

GrokkingReport detect_grokking(const std::vector<MetricsRow>& rows,
                               const GrokkingParams& params = {});

}  // namespace groklab
