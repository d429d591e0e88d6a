#include "groklab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "groklab/diagnostics.hpp"
#include "groklab/rng.hpp"

namespace groklab {

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 0");
    if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("TrainConfig: betas must lie in [0,1)");
    if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be > 0");
}

ModelParams init_params(const ModelConfig& config, const InitVariant& init, uint64_t seed) {
    ModelParams params = zero_params(config);
    const double std = std::visit([](const auto& v) { return v.std; }, init);

    Rng rng = Rng::stream(seed, StreamTag::init);
    for (auto& [name, m] : named_matrices(params)) {
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = std * rng.gaussian();
    }

    if (const auto* circ = std::get_if<CirculantInit>(&init)) {
        Rng vrng = Rng::stream(circ->seed, StreamTag::init, 1);
        const int d = config.d_model;
        std::vector<double> v(d);
        for (double& x : v) x = std * vrng.gaussian();
        for (Eigen::Index i = 0; i < params.w_e.rows(); ++i)
            for (int j = 0; j < d; ++j)
                params.w_e(i, j) = v[((j - static_cast<int>(i)) % d + d) % d];
    }
    return params;
}

void adamw_step(ModelParams& params, const std::vector<Matrix>& grads, AdamWState& state,
                const TrainConfig& config) {
    auto named = named_matrices(params);
    if (grads.size() != named.size())
        throw std::invalid_argument("adamw_step: gradient count mismatch");
    if (state.m.empty()) {
        state.m.reserve(named.size());
        state.v.reserve(named.size());
        for (auto& [name, m] : named) {
            state.m.push_back(Matrix::Zero(m->rows(), m->cols()));
            state.v.push_back(Matrix::Zero(m->rows(), m->cols()));
        }
    }

    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));

    for (size_t i = 0; i < named.size(); ++i) {
        const Matrix& g = grads[i];
        Matrix& theta = *named[i].second;
        if (g.rows() != theta.rows() || g.cols() != theta.cols())
            throw std::invalid_argument("adamw_step: gradient shape mismatch for " + named[i].first);
        if (!g.allFinite())
            throw std::runtime_error("adamw_step: non-finite gradient for " + named[i].first);

        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g.cwiseProduct(g);
        const Matrix mhat = state.m[i] / bc1;
        const Matrix vhat = state.v[i] / bc2;
        theta -= config.lr *
                     (mhat.array() / (vhat.array().sqrt() + config.eps)).matrix() +
                 (config.lr * config.weight_decay) * theta;
    }
}

namespace {

struct Batch {
    TokenBatch tokens;
    std::vector<int> labels;
};

Batch make_batch(const TaskSpec& task, const std::vector<Pair>& pairs) {
    Batch b;
    b.tokens.reserve(pairs.size());
    b.labels.reserve(pairs.size());
    for (const auto& pr : pairs) {
        b.tokens.push_back(tokenize(task, pr));
        b.labels.push_back(eval_f_mod(task, pr));
    }
    return b;
}

double accuracy_from_logits(const Matrix& logits, const std::vector<int>& labels) {
    long long correct = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        int best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c)
            if (logits(r, c) > logits(r, best)) best = static_cast<int>(c);
        if (best == labels[static_cast<size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace

TrainResult train(const TaskSpec& task, const Split& split, const ModelConfig& model_config,
                  const TrainConfig& train_config, const MetricsSink& sink) {
    model_config.validate();
    train_config.validate();
    if (model_config.out_classes != task.p)
        throw std::invalid_argument("train: out_classes must equal the task's p");
    if (model_config.vocab_size != task.vocab_size())
        throw std::invalid_argument("train: vocab_size must match the task tokenizer");
    if (split.train.empty()) throw std::invalid_argument("train: empty train set");

    const Batch train_set = make_batch(task, split.train);
    const Batch test_set = make_batch(task, split.test);

    TrainResult result;
    result.params = init_params(model_config, train_config.init, train_config.seed);
    AdamWState opt_state;
    Rng batch_rng = Rng::stream(train_config.seed, StreamTag::batch);

    const auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    std::vector<size_t> order(train_set.tokens.size());
    std::iota(order.begin(), order.end(), size_t{0});

    // One recorded forward/backward; returns (loss, acc) and the gradients.
    auto run_tape = [&](const TokenBatch& tokens, const std::vector<int>& labels,
                        std::vector<Matrix>& grads) -> std::pair<double, double> {
        Tape tape;
        ForwardGraph graph = build_graph(tape, result.params, model_config, tokens);
        const NodeId loss = tape.cross_entropy_from_logits(graph.logits, labels);
        const double loss_value = tape.value(loss)(0, 0);
        const double acc = accuracy_from_logits(tape.value(graph.logits), labels);
        tape.backward(loss);
        grads.clear();
        grads.reserve(graph.params.size());
        for (NodeId id : graph.params) grads.push_back(tape.grad(id));
        return {loss_value, acc};
    };

    auto record_row = [&](long long epoch, double train_loss, double train_acc) {
        MetricsRow row;
        row.epoch = epoch;
        row.train_loss = train_loss;
        row.train_acc = train_acc;
        if (test_set.tokens.empty()) {
            row.test_loss = 0.0;
            row.test_acc = 1.0;  // vacuously: nothing to get wrong
        } else {
            const EvalResult test =
                loss_and_accuracy(result.params, model_config, test_set.tokens, test_set.labels);
            row.test_loss = test.loss;
            row.test_acc = test.accuracy;
        }
        row.med = med(embedding_rows(result.params, task.p));
        for (const auto& [name, m] : named_matrices(result.params)) {
            const double f = m->norm();
            row.weight_norm_sum += f;
            row.weight_sq_sum += f * f;
        }
        row.wall_ms = wall_ms();
        result.metrics.push_back(row);
        if (sink) sink(row);
        return row;
    };

    const bool full_batch = train_config.batch_size == 0 ||
                            static_cast<size_t>(train_config.batch_size) >= train_set.tokens.size();
    long long eval_count = 0;
    bool stop = false;
    std::vector<Matrix> grads;
    for (long long epoch = 1; epoch <= train_config.epochs && !stop; ++epoch) {
        const bool eval_epoch =
            epoch == 1 || epoch % train_config.eval_every == 0 || epoch == train_config.epochs;
        double train_loss = 0.0;
        double train_acc = 0.0;

        try {
            if (full_batch) {
                // Metrics snapshot lands between forward and update, so a row
                // describes a single parameter state.
                std::tie(train_loss, train_acc) =
                    run_tape(train_set.tokens, train_set.labels, grads);
                if (eval_epoch) {
                    const MetricsRow row = record_row(epoch, train_loss, train_acc);
                    ++eval_count;
                    if (train_config.snapshot_every > 0 &&
                        (eval_count - 1) % train_config.snapshot_every == 0)
                        result.embedding_snapshots.emplace_back(
                            epoch, embedding_rows(result.params, task.p));
                    if (train_config.stop_at_test_acc > 0.0 &&
                        row.test_acc >= train_config.stop_at_test_acc)
                        stop = true;
                }
                adamw_step(result.params, grads, opt_state, train_config);
            } else {
                batch_rng.shuffle(order);
                const auto bs = static_cast<size_t>(train_config.batch_size);
                size_t done = 0;
                while (done < order.size()) {
                    const size_t take = std::min(bs, order.size() - done);
                    TokenBatch tokens(take);
                    std::vector<int> labels(take);
                    for (size_t k = 0; k < take; ++k) {
                        tokens[k] = train_set.tokens[order[done + k]];
                        labels[k] = train_set.labels[order[done + k]];
                    }
                    auto [l, a] = run_tape(tokens, labels, grads);
                    adamw_step(result.params, grads, opt_state, train_config);
                    train_loss += l * static_cast<double>(take);
                    train_acc += a * static_cast<double>(take);
                    done += take;
                }
                train_loss /= static_cast<double>(order.size());
                train_acc /= static_cast<double>(order.size());
                if (eval_epoch) {
                    const MetricsRow row = record_row(epoch, train_loss, train_acc);
                    ++eval_count;
                    if (train_config.snapshot_every > 0 &&
                        (eval_count - 1) % train_config.snapshot_every == 0)
                        result.embedding_snapshots.emplace_back(
                            epoch, embedding_rows(result.params, task.p));
                    if (train_config.stop_at_test_acc > 0.0 &&
                        row.test_acc >= train_config.stop_at_test_acc)
                        stop = true;
                }
            }
        } catch (const std::runtime_error&) {
            result.diverged = true;  // non-finite loss or gradient; keep partial logs
            result.final_epoch = epoch;
            break;
        }
        result.final_epoch = epoch;
    }

    result.grokking = detect_grokking(result.metrics);
    return result;
}

GrokkingReport detect_grokking(const std::vector<MetricsRow>& rows, const GrokkingParams& gp) {
    if (rows.empty()) throw std::invalid_argument("detect_grokking: empty metrics stream");
    GrokkingReport report;

    report.u_acc = rows[0].test_acc;
    for (const auto& r : rows) report.u_acc = std::max(report.u_acc, r.test_acc);

    size_t peak_idx = rows.size();
    for (size_t i = 0; i < rows.size(); ++i)
        if (rows[i].test_acc >= 0.98 * report.u_acc) {
            peak_idx = i;
            break;
        }
    report.l_acc = report.u_acc;
    for (size_t i = peak_idx; i < rows.size(); ++i)
        report.l_acc = std::min(report.l_acc, rows[i].test_acc);

    const auto window = static_cast<size_t>(gp.window);
    size_t mem_idx = rows.size();
    for (size_t i = 0; i + window <= rows.size(); ++i) {
        bool sustained = true;
        for (size_t k = i; k < i + window; ++k)
            if (rows[k].train_acc < gp.train_thresh) {
                sustained = false;
                break;
            }
        if (sustained) {
            mem_idx = i;
            break;
        }
    }
    if (mem_idx == rows.size()) return report;  // never memorized: go/memorization absent
    report.memorization_epoch = rows[mem_idx].epoch;

    std::vector<double> window_accs;
    window_accs.reserve(window);
    for (size_t k = mem_idx; k < mem_idx + window; ++k) window_accs.push_back(rows[k].test_acc);
    std::sort(window_accs.begin(), window_accs.end());
    const size_t half = window_accs.size() / 2;
    const double baseline = window_accs.size() % 2 == 1
                                ? window_accs[half]
                                : 0.5 * (window_accs[half - 1] + window_accs[half]);

    if (report.u_acc - baseline < 0.05) return report;  // accuracy never rises: "disappear"

    const double rise = baseline + gp.rise_frac * (report.u_acc - baseline);
    for (size_t i = mem_idx; i < rows.size(); ++i)
        if (rows[i].test_acc >= rise) {
            report.go_epoch = rows[i].epoch;
            break;
        }
    return report;
}

}  // namespace groklab
