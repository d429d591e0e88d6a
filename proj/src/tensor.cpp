#include "groklab/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "groklab/rng.hpp"

namespace groklab {

// ---------------------------------------------------------------------------
// Tensor I/O
// ---------------------------------------------------------------------------

Tensor::Tensor(std::vector<uint32_t> shape) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 3)
        throw std::invalid_argument("Tensor: rank must be 1..3");
    size_t n = 1;
    for (uint32_t d : shape_) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
        n *= d;
    }
    values_.assign(n, 0.0);
}

Tensor Tensor::from_matrix(const Matrix& m) {
    Tensor t({static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())});
    std::memcpy(t.values_.data(), m.data(), sizeof(double) * t.values_.size());
    return t;
}

bool Tensor::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix Tensor::to_matrix() const {
    if (rank() == 1) {
        Matrix m(1, shape_[0]);
        std::memcpy(m.data(), values_.data(), sizeof(double) * values_.size());
        return m;
    }
    if (rank() == 2) {
        Matrix m(shape_[0], shape_[1]);
        std::memcpy(m.data(), values_.data(), sizeof(double) * values_.size());
        return m;
    }
    throw std::invalid_argument("Tensor::to_matrix: rank-3 tensor");
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_tensor: cannot open " + path);
    const auto rank = static_cast<uint32_t>(t.rank());
    out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
    for (uint32_t d : t.shape()) out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(sizeof(double) * t.size()));
    if (!out) throw std::runtime_error("save_tensor: write failed for " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_tensor: cannot open " + path);
    uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
    if (!in || rank < 1 || rank > 3)
        throw std::runtime_error("load_tensor: bad header in " + path);
    std::vector<uint32_t> shape(rank);
    for (auto& d : shape) in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (!in) throw std::runtime_error("load_tensor: truncated header in " + path);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double) * t.size()));
    if (!in) throw std::runtime_error("load_tensor: truncated payload in " + path);
    return t;
}

void save_matrix(const std::string& path, const Matrix& m) {
    save_tensor(path, Tensor::from_matrix(m));
}

Matrix load_matrix(const std::string& path) { return load_tensor(path).to_matrix(); }

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

NodeId Tape::push(Node&& node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw std::out_of_range("Tape: bad node id");
}

NodeId Tape::leaf(Matrix value) {
    if (!value.allFinite()) throw std::invalid_argument("Tape::leaf: non-finite values");
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::constant(Matrix value) {
    if (!value.allFinite()) throw std::invalid_argument("Tape::constant: non-finite values");
    Node n;
    n.value = std::move(value);
    n.wants_grad = false;
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    check(a);
    check(b);
    const Matrix& va = nodes_[a].value;
    const Matrix& vb = nodes_[b].value;
    if (va.cols() != vb.rows()) throw std::invalid_argument("Tape::matmul: inner dims differ");
    Node n;
    n.op = Op::matmul;
    n.inputs = {a, b};
    n.value = va * vb;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    check(a);
    check(b);
    const Matrix& va = nodes_[a].value;
    const Matrix& vb = nodes_[b].value;
    if (va.rows() != vb.rows() || va.cols() != vb.cols())
        throw std::invalid_argument("Tape::add: shape mismatch");
    Node n;
    n.op = Op::add;
    n.inputs = {a, b};
    n.value = va + vb;
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
    check(a);
    Node n;
    n.op = Op::scale;
    n.inputs = {a};
    n.scalar = factor;
    n.value = factor * nodes_[a].value;
    return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
    check(a);
    Node n;
    n.op = Op::transpose;
    n.inputs = {a};
    n.value = nodes_[a].value.transpose();
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    check(a);
    Node n;
    n.op = Op::relu;
    n.inputs = {a};
    n.value = nodes_[a].value.cwiseMax(0.0);
    return push(std::move(n));
}

NodeId Tape::row_softmax(NodeId a) {
    check(a);
    const Matrix& v = nodes_[a].value;
    Node n;
    n.op = Op::row_softmax;
    n.inputs = {a};
    n.value.resize(v.rows(), v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double mx = v.row(r).maxCoeff();
        Eigen::Array<double, 1, Eigen::Dynamic> e = (v.row(r).array() - mx).exp();
        n.value.row(r) = (e / e.sum()).matrix();
    }
    return push(std::move(n));
}

NodeId Tape::embed_gather(NodeId table, std::vector<int> ids) {
    check(table);
    const Matrix& t = nodes_[table].value;
    Node n;
    n.op = Op::embed_gather;
    n.inputs = {table};
    n.value.resize(static_cast<Eigen::Index>(ids.size()), t.cols());
    for (size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0 || ids[r] >= t.rows())
            throw std::invalid_argument("Tape::embed_gather: id out of range");
        n.value.row(static_cast<Eigen::Index>(r)) = t.row(ids[r]);
    }
    n.ids = std::move(ids);
    return push(std::move(n));
}

NodeId Tape::cross_entropy_from_logits(NodeId logits, std::vector<int> labels) {
    check(logits);
    const Matrix& z = nodes_[logits].value;
    if (static_cast<Eigen::Index>(labels.size()) != z.rows())
        throw std::invalid_argument("Tape::cross_entropy_from_logits: label count != rows");
    Node n;
    n.op = Op::cross_entropy;
    n.inputs = {logits};
    n.aux.resize(z.rows(), z.cols());  // softmax probabilities, reused in backward
    double total = 0.0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const int label = labels[r];
        if (label < 0 || label >= z.cols())
            throw std::invalid_argument("Tape::cross_entropy_from_logits: label out of range");
        const double mx = z.row(r).maxCoeff();
        Eigen::Array<double, 1, Eigen::Dynamic> e = (z.row(r).array() - mx).exp();
        const double denom = e.sum();
        n.aux.row(r) = (e / denom).matrix();
        total += std::log(denom) + mx - z(r, label);
    }
    n.ids = std::move(labels);
    n.value = Matrix::Constant(1, 1, total / static_cast<double>(z.rows()));
    if (!n.value.allFinite())
        throw std::runtime_error("Tape::cross_entropy_from_logits: non-finite loss");
    return push(std::move(n));
}

NodeId Tape::add_row(NodeId a, NodeId rows, int row) {
    check(a);
    check(rows);
    const Matrix& va = nodes_[a].value;
    const Matrix& vr = nodes_[rows].value;
    if (row < 0 || row >= vr.rows()) throw std::invalid_argument("Tape::add_row: row out of range");
    if (va.cols() != vr.cols()) throw std::invalid_argument("Tape::add_row: width mismatch");
    Node n;
    n.op = Op::add_row;
    n.inputs = {a, rows};
    n.ids = {row};
    n.value = va.rowwise() + vr.row(row);
    return push(std::move(n));
}

NodeId Tape::rowwise_dot(NodeId a, NodeId b) {
    check(a);
    check(b);
    const Matrix& va = nodes_[a].value;
    const Matrix& vb = nodes_[b].value;
    if (va.rows() != vb.rows() || va.cols() != vb.cols())
        throw std::invalid_argument("Tape::rowwise_dot: shape mismatch");
    Node n;
    n.op = Op::rowwise_dot;
    n.inputs = {a, b};
    n.value = (va.array() * vb.array()).rowwise().sum().matrix();
    return push(std::move(n));
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw std::invalid_argument("Tape::concat_cols: no inputs");
    Eigen::Index rows = -1, cols = 0;
    for (NodeId id : parts) {
        check(id);
        const Matrix& v = nodes_[id].value;
        if (rows == -1) rows = v.rows();
        if (v.rows() != rows) throw std::invalid_argument("Tape::concat_cols: row mismatch");
        cols += v.cols();
    }
    Node n;
    n.op = Op::concat_cols;
    n.inputs = parts;
    n.value.resize(rows, cols);
    Eigen::Index at = 0;
    for (NodeId id : parts) {
        const Matrix& v = nodes_[id].value;
        n.value.middleCols(at, v.cols()) = v;
        at += v.cols();
    }
    return push(std::move(n));
}

NodeId Tape::attend(NodeId weights, const std::vector<NodeId>& values) {
    check(weights);
    const Matrix& w = nodes_[weights].value;
    if (w.cols() != static_cast<Eigen::Index>(values.size()))
        throw std::invalid_argument("Tape::attend: weight cols != value count");
    Node n;
    n.op = Op::attend;
    n.inputs.reserve(values.size() + 1);
    n.inputs.push_back(weights);
    for (size_t s = 0; s < values.size(); ++s) {
        check(values[s]);
        const Matrix& v = nodes_[values[s]].value;
        if (v.rows() != w.rows()) throw std::invalid_argument("Tape::attend: batch mismatch");
        if (s == 0)
            n.value = (v.array().colwise() * w.col(0).array()).matrix();
        else
            n.value.array() += v.array().colwise() * w.col(static_cast<Eigen::Index>(s)).array();
        n.inputs.push_back(values[s]);
    }
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    check(a);
    Node n;
    n.op = Op::sum_all;
    n.inputs = {a};
    n.value = Matrix::Constant(1, 1, nodes_[a].value.sum());
    return push(std::move(n));
}

NodeId Tape::layer_norm(NodeId a, double eps) {
    check(a);
    const Matrix& v = nodes_[a].value;
    Node n;
    n.op = Op::layer_norm;
    n.inputs = {a};
    n.scalar = eps;
    n.value.resize(v.rows(), v.cols());
    n.aux.resize(v.rows(), 1);  // 1/sqrt(var + eps) per row
    const auto d = static_cast<double>(v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double mean = v.row(r).mean();
        const double var = (v.row(r).array() - mean).square().sum() / d;
        const double inv_std = 1.0 / std::sqrt(var + eps);
        n.aux(r, 0) = inv_std;
        n.value.row(r) = ((v.row(r).array() - mean) * inv_std).matrix();
    }
    return push(std::move(n));
}

Matrix& Tape::grad_ref(NodeId id) {
    Node& n = nodes_[id];
    if (!n.wants_grad) {
        // Constants absorb accumulation into a scratch buffer; has_grad stays
        // false so they report zero gradient and stop propagation.
        static thread_local Matrix discard;
        discard = Matrix::Zero(n.value.rows(), n.value.cols());
        return discard;
    }
    if (!n.has_grad) {
        n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
        n.has_grad = true;
    }
    return n.grad;
}

const Matrix& Tape::grad(NodeId id) const {
    check(id);
    const Node& n = nodes_[id];
    if (!n.has_grad) {
        static thread_local Matrix zero;
        zero = Matrix::Zero(n.value.rows(), n.value.cols());
        return zero;
    }
    return n.grad;
}

void Tape::backward(NodeId loss) {
    check(loss);
    if (nodes_[loss].value.rows() != 1 || nodes_[loss].value.cols() != 1)
        throw std::invalid_argument("Tape::backward: loss must be 1x1");
    for (auto& n : nodes_) {
        n.has_grad = false;
        n.grad.resize(0, 0);
    }
    grad_ref(loss)(0, 0) = 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.has_grad) continue;
        const Matrix& g = n.grad;
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::matmul: {
                const Matrix& a = nodes_[n.inputs[0]].value;
                const Matrix& b = nodes_[n.inputs[1]].value;
                grad_ref(n.inputs[0]).noalias() += g * b.transpose();
                grad_ref(n.inputs[1]).noalias() += a.transpose() * g;
                break;
            }
            case Op::add:
                grad_ref(n.inputs[0]) += g;
                grad_ref(n.inputs[1]) += g;
                break;
            case Op::scale:
                grad_ref(n.inputs[0]) += n.scalar * g;
                break;
            case Op::transpose:
                grad_ref(n.inputs[0]) += g.transpose();
                break;
            case Op::relu: {
                const Matrix& a = nodes_[n.inputs[0]].value;
                grad_ref(n.inputs[0]).array() += (a.array() > 0.0).cast<double>() * g.array();
                break;
            }
            case Op::row_softmax: {
                const Matrix& y = n.value;
                Matrix& da = grad_ref(n.inputs[0]);
                for (Eigen::Index r = 0; r < y.rows(); ++r) {
                    const double dot = (g.row(r).array() * y.row(r).array()).sum();
                    da.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
                }
                break;
            }
            case Op::embed_gather: {
                Matrix& dt = grad_ref(n.inputs[0]);
                for (size_t r = 0; r < n.ids.size(); ++r)
                    dt.row(n.ids[r]) += g.row(static_cast<Eigen::Index>(r));
                break;
            }
            case Op::cross_entropy: {
                const Matrix& probs = n.aux;
                Matrix& dz = grad_ref(n.inputs[0]);
                const double go = g(0, 0) / static_cast<double>(probs.rows());
                dz += go * probs;
                for (Eigen::Index r = 0; r < probs.rows(); ++r) dz(r, n.ids[r]) -= go;
                break;
            }
            case Op::add_row: {
                grad_ref(n.inputs[0]) += g;
                grad_ref(n.inputs[1]).row(n.ids[0]) += g.colwise().sum();
                break;
            }
            case Op::rowwise_dot: {
                const Matrix& a = nodes_[n.inputs[0]].value;
                const Matrix& b = nodes_[n.inputs[1]].value;
                grad_ref(n.inputs[0]).array() += b.array().colwise() * g.col(0).array();
                grad_ref(n.inputs[1]).array() += a.array().colwise() * g.col(0).array();
                break;
            }
            case Op::concat_cols: {
                Eigen::Index at = 0;
                for (NodeId in : n.inputs) {
                    const Eigen::Index w = nodes_[in].value.cols();
                    grad_ref(in) += g.middleCols(at, w);
                    at += w;
                }
                break;
            }
            case Op::attend: {
                const Matrix& w = nodes_[n.inputs[0]].value;
                Matrix& dw = grad_ref(n.inputs[0]);
                for (size_t s = 0; s + 1 < n.inputs.size(); ++s) {
                    const NodeId vid = n.inputs[s + 1];
                    const Matrix& v = nodes_[vid].value;
                    const auto sc = static_cast<Eigen::Index>(s);
                    dw.col(sc).array() += (g.array() * v.array()).rowwise().sum();
                    grad_ref(vid).array() += g.array().colwise() * w.col(sc).array();
                }
                break;
            }
            case Op::sum_all: {
                grad_ref(n.inputs[0]).array() += g(0, 0);
                break;
            }
            case Op::layer_norm: {
                // dx = inv_std * (dy - mean(dy) - y * mean(dy .* y)), row-wise.
                const Matrix& y = n.value;
                Matrix& da = grad_ref(n.inputs[0]);
                const auto d = static_cast<double>(y.cols());
                for (Eigen::Index r = 0; r < y.rows(); ++r) {
                    const double mean_g = g.row(r).mean();
                    const double mean_gy = (g.row(r).array() * y.row(r).array()).sum() / d;
                    da.row(r).array() +=
                        n.aux(r, 0) * (g.row(r).array() - mean_g - y.row(r).array() * mean_gy);
                }
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

SpectralNorm spectral_norm(const Matrix& m, int max_iters, double tol, uint64_t seed) {
    SpectralNorm result;
    if (m.size() == 0 || m.isZero(0.0)) {
        result.converged = true;
        return result;
    }
    // Iterate on the smaller Gram matrix.
    const bool tall = m.rows() >= m.cols();
    const Matrix gram = tall ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());

    Rng rng = Rng::stream(seed, StreamTag::power_iteration);
    Eigen::VectorXd v(gram.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.gaussian();
    v.normalize();

    double lambda = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        Eigen::VectorXd gv = gram * v;
        const double next = v.dot(gv);  // Rayleigh quotient of the unit vector v
        const double norm = gv.norm();
        result.iterations = it;
        result.residual = std::abs(next - lambda) / std::max(1.0, std::abs(next));
        lambda = next;
        if (norm == 0.0) {  // v landed in the kernel; sigma estimate is 0
            result.converged = true;
            break;
        }
        v = gv / norm;
        if (it > 1 && result.residual <= tol) {
            result.converged = true;
            break;
        }
    }
    result.value = std::sqrt(std::max(0.0, lambda));
    return result;
}

}  // namespace groklab
