#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "groklab/model.hpp"
#include "groklab/rng.hpp"
#include "groklab/task.hpp"
#include "groklab/trainer.hpp"
#include "test_util.hpp"

using namespace groklab;

namespace {

ModelConfig tiny_config(int p, int d_model, int n_heads) {
    ModelConfig config;
    config.vocab_size = p + 1;
    config.d_model = d_model;
    config.n_heads = n_heads;
    config.out_classes = p;
    return config;
}

TokenBatch sample_batch(const TaskSpec& task, std::vector<int>* labels) {
    TokenBatch batch;
    for (int i = 0; i < task.p; ++i) {
        const Pair pr{i, (i * 2 + 1) % task.p};
        batch.push_back(tokenize(task, pr));
        if (labels) labels->push_back(eval_f_mod(task, pr));
    }
    return batch;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig config = tiny_config(5, 8, 2);
    CHECK_NOTHROW(config.validate());
    config.n_heads = 3;  // 8 % 3 != 0
    CHECK_THROWS(config.validate());
    config = tiny_config(5, 8, 2);
    config.vocab_size = 0;
    CHECK_THROWS(config.validate());
    config = tiny_config(5, 8, 2);
    config.out_classes = 0;
    CHECK_THROWS(config.validate());
}

TEST_CASE("named matrices enumerate every parameter once with stable names") {
    const ModelConfig config = tiny_config(5, 8, 2);
    ModelParams params = zero_params(config);
    const auto named = named_matrices(params);
    REQUIRE(named.size() == 2 + 2 * 3 + 3 + 1);  // w_e, w_p, QKV x2 heads, w_o, w_in, w_out, w_u
    CHECK(named.front().first == "w_e");
    CHECK(named[1].first == "w_p");
    CHECK(named[2].first == "layer0.head0.w_q");
    CHECK(named.back().first == "w_u");
    CHECK(named.front().second->rows() == 6);
    CHECK(named.front().second->cols() == 8);
}

TEST_CASE("zero parameters predict the uniform distribution") {
    const TaskSpec task(97, parse_polynomial("i+j"));
    ModelConfig config = tiny_config(97, 16, 4);
    const ModelParams params = zero_params(config);
    std::vector<int> labels;
    const TokenBatch batch = sample_batch(task, &labels);
    const EvalResult result = loss_and_accuracy(params, config, batch, labels);
    CHECK(result.loss == doctest::Approx(std::log(97.0)).epsilon(1e-12));
    // Argmax of equal logits picks class 0.
    double zero_label_frac = 0.0;
    for (const int label : labels) zero_label_frac += label == 0 ? 1.0 : 0.0;
    CHECK(result.accuracy == doctest::Approx(zero_label_frac / labels.size()));
}

TEST_CASE("zeroing the attention and MLP output projections leaves the residual stream") {
    const TaskSpec task(5, parse_polynomial("i+j"));
    const ModelConfig config = tiny_config(5, 8, 2);
    ModelParams params = init_params(config, StandardInit{}, 3);
    params.layers[0].w_o.setZero();
    params.layers[0].w_out.setZero();

    const TokenBatch batch = sample_batch(task, nullptr);
    const Matrix logits = forward_logits(params, config, batch);
    for (size_t b = 0; b < batch.size(); ++b) {
        const Matrix residual = params.w_e.row(batch[b][2]) + params.w_p.row(2);
        const Matrix expect = residual * params.w_u;
        CHECK(logits.row(b).isApprox(expect.row(0), 1e-12));
    }
}

TEST_CASE("permuting unembedding columns permutes logits") {
    const TaskSpec task(5, parse_polynomial("i+j"));
    const ModelConfig config = tiny_config(5, 8, 2);
    ModelParams params = init_params(config, StandardInit{}, 4);
    const TokenBatch batch = sample_batch(task, nullptr);
    const Matrix base = forward_logits(params, config, batch);

    const std::vector<int> perm{3, 0, 4, 1, 2};
    ModelParams permuted = params;
    for (int c = 0; c < 5; ++c) permuted.w_u.col(c) = params.w_u.col(perm[c]);
    const Matrix swapped = forward_logits(permuted, config, batch);
    for (int r = 0; r < base.rows(); ++r)
        for (int c = 0; c < 5; ++c)
            CHECK(swapped(r, c) == doctest::Approx(base(r, perm[c])).epsilon(1e-14));
}

TEST_CASE("tape forward and plain forward agree") {
    const TaskSpec task(5, parse_polynomial("i+j"));
    for (const bool layer_norm : {false, true}) {
        for (const bool causal : {true, false}) {
            ModelConfig config = tiny_config(5, 8, 2);
            config.use_layer_norm = layer_norm;
            config.causal_mask = causal;
            config.n_layers = 2;
            const ModelParams params = init_params(config, StandardInit{}, 5);
            const TokenBatch batch = sample_batch(task, nullptr);

            Tape tape;
            const ForwardGraph graph = build_graph(tape, params, config, batch);
            const Matrix plain = forward_logits(params, config, batch);
            CHECK(tape.value(graph.logits).isApprox(plain, 1e-12));
        }
    }
}

// Fully independent forward pass: plain loops and std::vector arithmetic only.
TEST_CASE("hand-rolled single-example forward oracle") {
    const int p = 5, d = 8, heads = 2, dh = d / heads;
    ModelConfig config = tiny_config(p, d, heads);
    const ModelParams params = init_params(config, StandardInit{}, 0);
    const std::array<int, 3> tokens{1, 2, 5};

    // Embedding + positions.
    double x[3][8];
    for (int t = 0; t < 3; ++t)
        for (int c = 0; c < d; ++c) x[t][c] = params.w_e(tokens[t], c) + params.w_p(t, c);

    // Attention with causal masking.
    double attn_out[3][8] = {};
    for (int t = 0; t < 3; ++t) {
        double concat[8];
        for (int h = 0; h < heads; ++h) {
            double q[4], k[3][4], v[3][4];
            for (int c = 0; c < dh; ++c) {
                q[c] = 0.0;
                for (int a = 0; a < d; ++a) q[c] += x[t][a] * params.layers[0].w_q[h](a, c);
            }
            for (int s = 0; s <= t; ++s)
                for (int c = 0; c < dh; ++c) {
                    k[s][c] = 0.0;
                    v[s][c] = 0.0;
                    for (int a = 0; a < d; ++a) {
                        k[s][c] += x[s][a] * params.layers[0].w_k[h](a, c);
                        v[s][c] += x[s][a] * params.layers[0].w_v[h](a, c);
                    }
                }
            double scores[3], max_score = -1e300;
            for (int s = 0; s <= t; ++s) {
                scores[s] = 0.0;
                for (int c = 0; c < dh; ++c) scores[s] += q[c] * k[s][c];
                scores[s] /= std::sqrt(static_cast<double>(dh));
                max_score = std::max(max_score, scores[s]);
            }
            double z = 0.0;
            for (int s = 0; s <= t; ++s) z += std::exp(scores[s] - max_score);
            double head_out[4] = {};
            for (int s = 0; s <= t; ++s) {
                const double w = std::exp(scores[s] - max_score) / z;
                for (int c = 0; c < dh; ++c) head_out[c] += w * v[s][c];
            }
            for (int c = 0; c < dh; ++c) concat[h * dh + c] = head_out[c];
        }
        for (int c = 0; c < d; ++c)
            for (int a = 0; a < d; ++a) attn_out[t][c] += concat[a] * params.layers[0].w_o(a, c);
    }
    for (int t = 0; t < 3; ++t)
        for (int c = 0; c < d; ++c) x[t][c] += attn_out[t][c];

    // MLP on the cls position (the only one the head reads).
    const int d_mlp = config.mlp_width();
    std::vector<double> hidden(d_mlp, 0.0);
    for (int c = 0; c < d_mlp; ++c) {
        for (int a = 0; a < d; ++a) hidden[c] += x[2][a] * params.layers[0].w_in(a, c);
        hidden[c] = std::max(0.0, hidden[c]);
    }
    double final_x[8];
    for (int c = 0; c < d; ++c) {
        final_x[c] = x[2][c];
        for (int a = 0; a < d_mlp; ++a) final_x[c] += hidden[a] * params.layers[0].w_out(a, c);
    }
    std::vector<double> logits(p, 0.0);
    for (int c = 0; c < p; ++c)
        for (int a = 0; a < d; ++a) logits[c] += final_x[a] * params.w_u(a, c);

    const Matrix got = forward_logits(params, config, {tokens});
    REQUIRE(got.rows() == 1);
    for (int c = 0; c < p; ++c) CHECK(got(0, c) == doctest::Approx(logits[c]).epsilon(1e-12));
}

TEST_CASE("changing an operand token changes the cls logits") {
    const ModelConfig config = tiny_config(5, 8, 2);
    const ModelParams params = init_params(config, StandardInit{}, 6);
    const Matrix a = forward_logits(params, config, {{{1, 2, 5}}});
    const Matrix b = forward_logits(params, config, {{{3, 2, 5}}});
    CHECK((a - b).cwiseAbs().maxCoeff() > 1e-9);
}

TEST_CASE("full-model gradient matches finite differences") {
    const TaskSpec task(5, parse_polynomial("i+j"));
    ModelConfig config = tiny_config(5, 4, 2);
    ModelParams params = init_params(config, StandardInit{0.5}, 7);

    std::vector<int> labels;
    const TokenBatch batch = sample_batch(task, &labels);

    const auto loss_at = [&](const ModelParams& pv) {
        Tape tape;
        const ForwardGraph graph = build_graph(tape, pv, config, batch);
        const NodeId loss = tape.cross_entropy_from_logits(graph.logits, labels);
        return tape.value(loss)(0, 0);
    };

    Tape tape;
    const ForwardGraph graph = build_graph(tape, params, config, batch);
    const NodeId loss = tape.cross_entropy_from_logits(graph.logits, labels);
    tape.backward(loss);

    const auto named = named_matrices(params);
    const double h = 1e-5;
    for (size_t which = 0; which < named.size(); ++which) {
        Matrix& m = *named[which].second;
        const Matrix& analytic = tape.grad(graph.params[which]);
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c) {
                const double keep = m(r, c);
                m(r, c) = keep + h;
                const double up = loss_at(params);
                m(r, c) = keep - h;
                const double down = loss_at(params);
                m(r, c) = keep;
                const double fd = (up - down) / (2.0 * h);
                const double rel = std::abs(fd - analytic(r, c)) /
                                   std::max({std::abs(fd), std::abs(analytic(r, c)), 1.0});
                if (rel >= 1e-4) {
                    CAPTURE(named[which].first);
                    CAPTURE(r);
                    CAPTURE(c);
                }
                REQUIRE(rel < 1e-4);
            }
    }
}

TEST_CASE("accuracy ties break toward the smaller class") {
    ModelConfig config = tiny_config(5, 4, 2);
    const ModelParams params = zero_params(config);  // all logits equal
    const EvalResult zero_wins = loss_and_accuracy(params, config, {{{0, 0, 5}}}, {0});
    CHECK(zero_wins.accuracy == 1.0);
    const EvalResult other = loss_and_accuracy(params, config, {{{0, 0, 5}}}, {3});
    CHECK(other.accuracy == 0.0);
}

TEST_CASE("embedding rows expose only the first p word embeddings") {
    const ModelConfig config = tiny_config(5, 8, 2);
    const ModelParams params = init_params(config, StandardInit{}, 8);
    const Matrix rows = embedding_rows(params, 5);
    CHECK(rows.rows() == 5);
    CHECK(rows == params.w_e.topRows(5));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    testutil::TempDir dir("ckpt");
    ModelConfig config = tiny_config(5, 8, 2);
    config.use_layer_norm = true;
    const ModelParams params = init_params(config, StandardInit{}, 9);
    const std::array<uint64_t, 4> rng_state{1, 2, 3, 4};
    save_checkpoint(dir.str(), config, params, 123, rng_state);

    const Checkpoint loaded = load_checkpoint(dir.str());
    CHECK(loaded.epoch == 123);
    CHECK(loaded.rng_state == rng_state);
    CHECK(loaded.config.d_model == 8);
    CHECK(loaded.config.use_layer_norm);
    const auto a = named_matrices(params);
    ModelParams loaded_params = loaded.params;
    const auto b = named_matrices(loaded_params);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(*a[i].second == *b[i].second);
    }
    CHECK_THROWS(load_checkpoint(dir.file("missing")));
}
