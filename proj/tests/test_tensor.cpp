#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "groklab/rng.hpp"
#include "groklab/tensor.hpp"
#include "test_util.hpp"

using namespace groklab;

namespace {

// Builds a scalar-loss graph over leaves created from `inputs`; returns the
// loss node. Used both for the analytic pass and for finite differences.
using GraphBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

double eval_loss(const std::vector<Matrix>& inputs, const GraphBuilder& build,
                 std::vector<Matrix>* grads = nullptr) {
    Tape tape;
    std::vector<NodeId> leaves;
    leaves.reserve(inputs.size());
    for (const Matrix& m : inputs) leaves.push_back(tape.leaf(m));
    const NodeId loss = build(tape, leaves);
    REQUIRE(tape.value(loss).rows() == 1);
    REQUIRE(tape.value(loss).cols() == 1);
    if (grads) {
        tape.backward(loss);
        grads->clear();
        for (const NodeId leaf : leaves) grads->push_back(tape.grad(leaf));
    }
    return tape.value(loss)(0, 0);
}

// Central-difference check of every entry of every input.
void check_gradients(std::vector<Matrix> inputs, const GraphBuilder& build, double tol = 1e-6,
                     double h = 1e-5) {
    std::vector<Matrix> grads;
    eval_loss(inputs, build, &grads);
    for (size_t which = 0; which < inputs.size(); ++which) {
        for (int r = 0; r < inputs[which].rows(); ++r) {
            for (int c = 0; c < inputs[which].cols(); ++c) {
                const double keep = inputs[which](r, c);
                inputs[which](r, c) = keep + h;
                const double up = eval_loss(inputs, build);
                inputs[which](r, c) = keep - h;
                const double down = eval_loss(inputs, build);
                inputs[which](r, c) = keep;
                const double fd = (up - down) / (2.0 * h);
                const double an = grads[which](r, c);
                const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1.0});
                if (rel >= tol) {
                    CAPTURE(which);
                    CAPTURE(r);
                    CAPTURE(c);
                    CAPTURE(fd);
                    CAPTURE(an);
                }
                REQUIRE(rel < tol);
            }
        }
    }
}

// Random-weighted scalar readout so gradients are generic, not all-ones.
NodeId weighted_sum(Tape& tape, NodeId node, uint64_t seed) {
    const Matrix& v = tape.value(node);
    Rng rng(seed);
    Matrix w(v.rows(), v.cols());
    for (int r = 0; r < w.rows(); ++r)
        for (int c = 0; c < w.cols(); ++c) w(r, c) = rng.gaussian() + 0.1;
    return tape.sum(tape.rowwise_dot(node, tape.constant(w)));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor container and binary round-trip
// ---------------------------------------------------------------------------

TEST_CASE("tensor shape bookkeeping and matrix conversion") {
    Matrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const Tensor t = Tensor::from_matrix(m);
    CHECK(t.rank() == 2);
    CHECK(t.shape() == std::vector<uint32_t>{2, 3});
    CHECK(t.size() == 6);
    CHECK(t.to_matrix() == m);
    CHECK(t.all_finite());

    Tensor vec({4});
    for (int i = 0; i < 4; ++i) vec.data()[i] = i;
    const Matrix row = vec.to_matrix();
    CHECK(row.rows() == 1);
    CHECK(row.cols() == 4);
    CHECK(row(0, 3) == 3.0);

    const Tensor cube({2, 2, 2});
    CHECK(cube.rank() == 3);
    CHECK_THROWS(cube.to_matrix());
}

TEST_CASE("tensor binary files round-trip exactly") {
    testutil::TempDir dir("tensor-io");
    Rng rng(1);

    Tensor t({3, 4, 2});
    for (size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.gaussian();
    save_tensor(dir.file("t.bin"), t);
    const Tensor back = load_tensor(dir.file("t.bin"));
    REQUIRE(back.shape() == t.shape());
    for (size_t i = 0; i < t.size(); ++i) CHECK(back.data()[i] == t.data()[i]);

    const Matrix m = testutil::random_matrix(5, 7, rng);
    save_matrix(dir.file("m.bin"), m);
    CHECK(load_matrix(dir.file("m.bin")) == m);

    CHECK_THROWS(load_tensor(dir.file("missing.bin")));
}

// ---------------------------------------------------------------------------
// Forward semantics
// ---------------------------------------------------------------------------

TEST_CASE("matmul with identity returns the operand") {
    Tape tape;
    Rng rng(2);
    const Matrix a = testutil::random_matrix(2, 2, rng);
    const NodeId out = tape.matmul(tape.leaf(Matrix::Identity(2, 2)), tape.leaf(a));
    CHECK(tape.value(out).isApprox(a, 1e-15));
}

TEST_CASE("row softmax of zeros is uniform and rows always sum to one") {
    Tape tape;
    const NodeId uniform = tape.row_softmax(tape.leaf(Matrix::Zero(1, 3)));
    CHECK(tape.value(uniform)(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-14));

    Rng rng(3);
    const Matrix logits = testutil::random_matrix(6, 9, rng, 4.0);
    Tape tape2;
    const NodeId soft = tape2.row_softmax(tape2.leaf(logits));
    const Matrix& probs = tape2.value(soft);
    for (int r = 0; r < probs.rows(); ++r) {
        CHECK(std::abs(probs.row(r).sum() - 1.0) < 1e-12);
        for (int c = 0; c < probs.cols(); ++c) CHECK(probs(r, c) >= 0.0);
    }
}

TEST_CASE("softmax is shift invariant") {
    Rng rng(4);
    const Matrix logits = testutil::random_matrix(3, 5, rng, 2.0);
    Matrix shifted = logits;
    shifted.array() += 300.0;  // would overflow exp without max subtraction
    Tape tape;
    const Matrix a = tape.value(tape.row_softmax(tape.leaf(logits)));
    const Matrix b = tape.value(tape.row_softmax(tape.leaf(shifted)));
    CHECK(a.isApprox(b, 1e-12));
}

TEST_CASE("cross entropy of uniform two-way logits is ln 2") {
    Tape tape;
    const NodeId loss = tape.cross_entropy_from_logits(tape.leaf(Matrix::Zero(1, 2)), {0});
    CHECK(tape.value(loss)(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("embed gather selects the right rows") {
    Rng rng(5);
    const Matrix table = testutil::random_matrix(6, 3, rng);
    Tape tape;
    const NodeId out = tape.embed_gather(tape.leaf(table), {4, 0, 4});
    const Matrix& got = tape.value(out);
    CHECK(got.row(0) == table.row(4));
    CHECK(got.row(1) == table.row(0));
    CHECK(got.row(2) == table.row(4));
}

TEST_CASE("shape mismatches are rejected") {
    Tape tape;
    const NodeId a = tape.leaf(Matrix::Zero(2, 3));
    const NodeId b = tape.leaf(Matrix::Zero(2, 3));
    CHECK_THROWS(tape.matmul(a, b));
    CHECK_THROWS(tape.rowwise_dot(a, tape.leaf(Matrix::Zero(3, 3))));
    CHECK_THROWS(tape.add(a, tape.leaf(Matrix::Zero(3, 3))));
}

// ---------------------------------------------------------------------------
// Gradients: one finite-difference suite per op
// ---------------------------------------------------------------------------

TEST_CASE("gradient: sum of a matrix is all ones") {
    Rng rng(6);
    std::vector<Matrix> grads;
    eval_loss({testutil::random_matrix(3, 4, rng)},
              [](Tape& t, const std::vector<NodeId>& in) { return t.sum(in[0]); }, &grads);
    CHECK(grads[0] == Matrix::Ones(3, 4));
}

TEST_CASE("gradient: half squared norm of W x against the closed form") {
    Rng rng(7);
    const Matrix w = testutil::random_matrix(4, 3, rng);
    const Matrix x = testutil::random_matrix(3, 1, rng);
    std::vector<Matrix> grads;
    eval_loss({w}, [&](Tape& t, const std::vector<NodeId>& in) {
        const NodeId y = t.matmul(in[0], t.constant(x));
        return t.scale(t.sum(t.rowwise_dot(y, y)), 0.5);
    }, &grads);
    const Matrix expect = (w * x) * x.transpose();  // (Wx) x^T
    CHECK(grads[0].isApprox(expect, 1e-12));
}

TEST_CASE("gradient: matmul") {
    Rng rng(8);
    check_gradients({testutil::random_matrix(3, 4, rng), testutil::random_matrix(4, 2, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.matmul(in[0], in[1]), 80);
                    });
}

TEST_CASE("gradient: add and scale") {
    Rng rng(9);
    check_gradients({testutil::random_matrix(3, 3, rng), testutil::random_matrix(3, 3, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.scale(t.add(in[0], in[1]), -1.7), 90);
                    });
}

TEST_CASE("gradient: transpose") {
    Rng rng(10);
    check_gradients({testutil::random_matrix(2, 5, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.transpose(in[0]), 100);
                    });
}

TEST_CASE("gradient: relu away from the kink") {
    Rng rng(11);
    Matrix m = testutil::random_matrix(4, 4, rng);
    // Keep entries clear of zero so finite differences see one linear piece.
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (std::abs(m(r, c)) < 1e-3) m(r, c) = 0.5;
    check_gradients({m}, [](Tape& t, const std::vector<NodeId>& in) {
        return weighted_sum(t, t.relu(in[0]), 110);
    });
}

TEST_CASE("gradient: row softmax") {
    Rng rng(12);
    check_gradients({testutil::random_matrix(3, 5, rng, 2.0)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.row_softmax(in[0]), 120);
                    });
}

TEST_CASE("gradient: cross entropy from logits") {
    Rng rng(13);
    check_gradients({testutil::random_matrix(4, 6, rng, 2.0)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return t.cross_entropy_from_logits(in[0], {5, 0, 3, 3});
                    });
}

TEST_CASE("gradient: embed gather with a repeated id accumulates") {
    Rng rng(14);
    check_gradients({testutil::random_matrix(5, 3, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.embed_gather(in[0], {2, 2, 0, 4}), 140);
                    });
}

TEST_CASE("gradient: add_row broadcast") {
    Rng rng(15);
    check_gradients({testutil::random_matrix(4, 3, rng), testutil::random_matrix(3, 3, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.add_row(in[0], in[1], 1), 150);
                    });
}

TEST_CASE("gradient: rowwise dot both sides") {
    Rng rng(16);
    check_gradients({testutil::random_matrix(4, 3, rng), testutil::random_matrix(4, 3, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.rowwise_dot(in[0], in[1]), 160);
                    });
}

TEST_CASE("gradient: concat_cols") {
    Rng rng(17);
    check_gradients({testutil::random_matrix(3, 2, rng), testutil::random_matrix(3, 1, rng),
                     testutil::random_matrix(3, 4, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.concat_cols({in[0], in[1], in[2]}), 170);
                    });
}

TEST_CASE("gradient: attend over per-position values") {
    Rng rng(18);
    check_gradients({testutil::random_matrix(3, 4, rng, 0.8),  // weights (pre-softmax use is fine)
                     testutil::random_matrix(3, 5, rng), testutil::random_matrix(3, 5, rng),
                     testutil::random_matrix(3, 5, rng), testutil::random_matrix(3, 5, rng)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.attend(in[0], {in[1], in[2], in[3], in[4]}), 180);
                    });
}

TEST_CASE("gradient: layer norm") {
    Rng rng(19);
    check_gradients({testutil::random_matrix(4, 6, rng, 1.5)},
                    [](Tape& t, const std::vector<NodeId>& in) {
                        return weighted_sum(t, t.layer_norm(in[0]), 190);
                    });
}

TEST_CASE("gradient: random three-op compositions") {
    Rng rng(20);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = testutil::random_matrix(3, 4, rng);
        const Matrix b = testutil::random_matrix(4, 4, rng);
        check_gradients({a, b}, [trial](Tape& t, const std::vector<NodeId>& in) {
            const NodeId prod = t.matmul(in[0], in[1]);       // 3x4
            const NodeId soft = t.row_softmax(prod);          // 3x4
            const NodeId mix = t.add(soft, in[0]);            // 3x4
            return weighted_sum(t, mix, 200 + trial);
        });
    }
}

TEST_CASE("constants never accumulate gradient but pass values through") {
    Rng rng(21);
    const Matrix c = testutil::random_matrix(2, 2, rng);
    Tape tape;
    const NodeId leaf = tape.leaf(Matrix::Identity(2, 2));
    const NodeId konst = tape.constant(c);
    const NodeId loss = tape.sum(tape.matmul(leaf, konst));
    tape.backward(loss);
    CHECK(tape.grad(konst) == Matrix::Zero(2, 2));
    CHECK(tape.grad(leaf).isApprox(Matrix::Ones(2, 2) * c.transpose(), 1e-14));
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    const NodeId a = tape.leaf(Matrix::Zero(2, 2));
    CHECK_THROWS(tape.backward(a));
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

TEST_CASE("norms of a diagonal matrix") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = 4.0;
    CHECK(frobenius_norm(m) == doctest::Approx(5.0).epsilon(1e-14));
    const SpectralNorm s = spectral_norm(m);
    CHECK(s.converged);
    CHECK(s.value == doctest::Approx(4.0).epsilon(1e-11));

    const Matrix zero = Matrix::Zero(3, 5);
    CHECK(frobenius_norm(zero) == 0.0);
    CHECK(spectral_norm(zero).value == 0.0);
}

TEST_CASE("spectral norm matches full SVD on random matrices") {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const int rows = 1 + static_cast<int>(rng.below(8));
        const int cols = 1 + static_cast<int>(rng.below(5));
        const Matrix m = testutil::random_matrix(rows, cols, rng);
        const Eigen::JacobiSVD<Matrix> svd(m);
        const double want = svd.singularValues()(0);
        const SpectralNorm got = spectral_norm(m, 20000, 1e-15, 7);
        CHECK(std::abs(got.value - want) < 1e-9 * std::max(1.0, want));
    }
}

TEST_CASE("norm inequality holds on random shapes") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const int rows = 1 + static_cast<int>(rng.below(8));
        const int cols = 1 + static_cast<int>(rng.below(5));
        const Matrix m = testutil::random_matrix(rows, cols, rng);
        const double fro = frobenius_norm(m);
        const double sigma = spectral_norm(m, 20000, 1e-15, 11).value;
        const double root = std::sqrt(static_cast<double>(std::min(rows, cols)));
        CHECK(sigma <= fro + 1e-9);
        CHECK(fro <= root * sigma + 1e-9);
    }
}
