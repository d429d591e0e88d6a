#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace groklab {

// All math runs on row-major doubles; Eigen expressions are the lingua franca
// and this alias is the concrete type the tape stores.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = MatrixX<double>;

// Rank <= 3 carrier for binary I/O. Compute happens on Matrix; Tensor exists
// to pin the on-disk layout: little-endian u32 rank, u32 dims[rank], then the
// row-major f64 payload.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<uint32_t> shape);
    static Tensor from_matrix(const Matrix& m);

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<uint32_t>& shape() const { return shape_; }
    size_t size() const { return values_.size(); }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    bool all_finite() const;

    // rank-1 becomes a single row; rank-3 is rejected.
    Matrix to_matrix() const;

private:
    std::vector<uint32_t> shape_;
    std::vector<double> values_;
};

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

// ---------------------------------------------------------------------------
// Recorded-operation reverse-mode differentiation.
//
// Build a graph by calling op methods; node ids index an append-only list, so
// inputs always precede consumers and backward() is a single reverse sweep
// with a fixed accumulation order. Values are immutable once recorded.
// ---------------------------------------------------------------------------

using NodeId = int;

class Tape {
public:
    // Leaves. Constants never receive gradients.
    NodeId leaf(Matrix value);
    NodeId constant(Matrix value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId transpose(NodeId a);
    NodeId relu(NodeId a);
    // Shift-invariant: subtracts the row max before exponentiating.
    NodeId row_softmax(NodeId a);
    // Rows of `table` selected by id; output is ids.size() x d.
    NodeId embed_gather(NodeId table, std::vector<int> ids);
    // Mean over rows of log-sum-exp(logits_r) - logits_r[label_r]; 1x1 output.
    NodeId cross_entropy_from_logits(NodeId logits, std::vector<int> labels);

    // Batched-sequence helpers: a sequence position lives in its own B x d
    // matrix, so attention never needs a rank-3 value.
    NodeId add_row(NodeId a, NodeId rows, int row);           // a + broadcast rows.row(row)
    NodeId rowwise_dot(NodeId a, NodeId b);                   // (B x d, B x d) -> B x 1
    NodeId concat_cols(const std::vector<NodeId>& parts);     // horizontal concat
    // weights: B x S; values: S matrices B x d. Output row r is
    // sum_s weights(r,s) * values[s].row(r).
    NodeId attend(NodeId weights, const std::vector<NodeId>& values);
    NodeId sum(NodeId a);                                     // 1x1 total
    // Row-wise (x - mean) / sqrt(var + eps), no learned affine.
    NodeId layer_norm(NodeId a, double eps = 1e-5);

    const Matrix& value(NodeId id) const { return nodes_[id].value; }
    size_t node_count() const { return nodes_.size(); }

    // Reverse sweep from a scalar loss; deterministic accumulation order.
    void backward(NodeId loss);
    // Zero matrix when no gradient reached the node.
    const Matrix& grad(NodeId id) const;

private:
    enum class Op {
        leaf,
        matmul,
        add,
        scale,
        transpose,
        relu,
        row_softmax,
        embed_gather,
        cross_entropy,
        add_row,
        rowwise_dot,
        concat_cols,
        attend,
        sum_all,
        layer_norm,
    };

    struct Node {
        Op op = Op::leaf;
        Matrix value;
        Matrix grad;
        Matrix aux;               // softmax probs, layer-norm inv-std, ...
        std::vector<NodeId> inputs;
        std::vector<int> ids;     // gather ids / labels
        double scalar = 0.0;      // scale factor, layer-norm eps, broadcast row
        bool wants_grad = true;
        bool has_grad = false;
    };

    NodeId push(Node&& node);
    Matrix& grad_ref(NodeId id);
    void check(NodeId id) const;

    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

template <typename Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& m) {
    return m.norm();
}

struct SpectralNorm {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // last relative change of the Rayleigh quotient
};

// Largest singular value by power iteration on M^T M (or M M^T, whichever is
// smaller), started from a seeded random vector. On budget exhaustion the
// best estimate is still returned with converged=false and the residual.
SpectralNorm spectral_norm(const Matrix& m, int max_iters = 500, double tol = 1e-13,
                           uint64_t seed = 0);

}  // namespace groklab
