#include "groklab/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace groklab {

void ModelConfig::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("ModelConfig: vocab_size must be >= 2");
    if (d_model < 1) throw std::invalid_argument("ModelConfig: d_model must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0)
        throw std::invalid_argument("ModelConfig: d_model must be divisible by n_heads");
    if (n_layers < 1) throw std::invalid_argument("ModelConfig: n_layers must be >= 1");
    if (d_mlp < 0) throw std::invalid_argument("ModelConfig: d_mlp must be >= 0");
    if (out_classes < 2) throw std::invalid_argument("ModelConfig: out_classes must be >= 2");
}

std::vector<std::pair<std::string, Matrix*>> named_matrices(ModelParams& params) {
    std::vector<std::pair<std::string, Matrix*>> out;
    out.emplace_back("w_e", &params.w_e);
    out.emplace_back("w_p", &params.w_p);
    for (size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (size_t h = 0; h < layer.w_q.size(); ++h) {
            const std::string head = prefix + "head" + std::to_string(h) + ".";
            out.emplace_back(head + "w_q", &layer.w_q[h]);
            out.emplace_back(head + "w_k", &layer.w_k[h]);
            out.emplace_back(head + "w_v", &layer.w_v[h]);
        }
        out.emplace_back(prefix + "w_o", &layer.w_o);
        out.emplace_back(prefix + "w_in", &layer.w_in);
        out.emplace_back(prefix + "w_out", &layer.w_out);
    }
    out.emplace_back("w_u", &params.w_u);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> named_matrices(const ModelParams& params) {
    auto mut = named_matrices(const_cast<ModelParams&>(params));
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(mut.size());
    for (auto& [name, m] : mut) out.emplace_back(std::move(name), m);
    return out;
}

ModelParams zero_params(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    p.w_e = Matrix::Zero(config.vocab_size, config.d_model);
    p.w_p = Matrix::Zero(3, config.d_model);
    p.layers.resize(config.n_layers);
    for (auto& layer : p.layers) {
        layer.w_q.assign(config.n_heads, Matrix::Zero(config.d_model, config.d_head()));
        layer.w_k.assign(config.n_heads, Matrix::Zero(config.d_model, config.d_head()));
        layer.w_v.assign(config.n_heads, Matrix::Zero(config.d_model, config.d_head()));
        layer.w_o = Matrix::Zero(config.n_heads * config.d_head(), config.d_model);
        layer.w_in = Matrix::Zero(config.d_model, config.mlp_width());
        layer.w_out = Matrix::Zero(config.mlp_width(), config.d_model);
    }
    p.w_u = Matrix::Zero(config.d_model, config.out_classes);
    return p;
}

namespace {

void check_tokens(const TokenBatch& tokens, int vocab_size) {
    if (tokens.empty()) throw std::invalid_argument("model: empty token batch");
    for (const auto& t : tokens)
        for (int tok : t)
            if (tok < 0 || tok >= vocab_size)
                throw std::invalid_argument("model: token out of vocabulary range");
}

std::vector<int> column_ids(const TokenBatch& tokens, int pos) {
    std::vector<int> ids(tokens.size());
    for (size_t r = 0; r < tokens.size(); ++r) ids[r] = tokens[r][pos];
    return ids;
}

}  // namespace

ForwardGraph build_graph(Tape& tape, const ModelParams& params, const ModelConfig& config,
                         const TokenBatch& tokens) {
    config.validate();
    check_tokens(tokens, config.vocab_size);

    ForwardGraph graph;
    auto named = named_matrices(params);
    graph.params.reserve(named.size());
    for (auto& [name, m] : named) graph.params.push_back(tape.leaf(*m));

    // Leaf order: w_e, w_p, then per layer 3 per head + w_o, w_in, w_out, then w_u.
    const NodeId w_e = graph.params[0];
    const NodeId w_p = graph.params[1];
    const int per_layer = 3 * config.n_heads + 3;
    auto layer_base = [&](int l) { return 2 + l * per_layer; };
    const NodeId w_u = graph.params.back();

    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(config.d_head()));

    std::array<NodeId, 3> x{};
    for (int t = 0; t < 3; ++t)
        x[t] = tape.add_row(tape.embed_gather(w_e, column_ids(tokens, t)), w_p, t);

    for (int l = 0; l < config.n_layers; ++l) {
        const NodeId base = layer_base(l);
        auto head_mat = [&](int h, int which) { return base + 3 * h + which; };  // 0=q,1=k,2=v
        const NodeId w_o = base + 3 * config.n_heads;
        const NodeId w_in = w_o + 1;
        const NodeId w_out = w_o + 2;

        const bool last = l == config.n_layers - 1;
        const int first_pos = last ? 2 : 0;  // downstream of the last layer only cls is read

        std::array<NodeId, 3> src = x;
        if (config.use_layer_norm)
            for (int t = 0; t < 3; ++t) src[t] = tape.layer_norm(x[t]);

        // Keys/values are shared across query positions.
        std::vector<std::array<NodeId, 3>> keys(config.n_heads), vals(config.n_heads);
        for (int h = 0; h < config.n_heads; ++h)
            for (int s = 0; s < 3; ++s) {
                keys[h][s] = tape.matmul(src[s], head_mat(h, 1));
                vals[h][s] = tape.matmul(src[s], head_mat(h, 2));
            }

        std::array<NodeId, 3> att_out = x;
        for (int t = first_pos; t < 3; ++t) {
            const int attended = config.causal_mask ? t + 1 : 3;
            std::vector<NodeId> head_outs;
            head_outs.reserve(config.n_heads);
            for (int h = 0; h < config.n_heads; ++h) {
                const NodeId q = tape.matmul(src[t], head_mat(h, 0));
                std::vector<NodeId> score_cols, attended_vals;
                score_cols.reserve(attended);
                attended_vals.reserve(attended);
                for (int s = 0; s < attended; ++s) {
                    score_cols.push_back(tape.scale(tape.rowwise_dot(q, keys[h][s]), inv_sqrt_dh));
                    attended_vals.push_back(vals[h][s]);
                }
                const NodeId probs = tape.row_softmax(tape.concat_cols(score_cols));
                head_outs.push_back(tape.attend(probs, attended_vals));
            }
            const NodeId proj = tape.matmul(tape.concat_cols(head_outs), w_o);
            att_out[t] = tape.add(x[t], proj);
        }
        x = att_out;

        for (int t = first_pos; t < 3; ++t) {
            const NodeId mlp_src = config.use_layer_norm ? tape.layer_norm(x[t]) : x[t];
            const NodeId hidden = tape.relu(tape.matmul(mlp_src, w_in));
            x[t] = tape.add(x[t], tape.matmul(hidden, w_out));
        }
    }

    const NodeId head_in = config.use_layer_norm ? tape.layer_norm(x[2]) : x[2];
    graph.logits = tape.matmul(head_in, w_u);
    return graph;
}

namespace {

Matrix plain_layer_norm(const Matrix& v, double eps = 1e-5) {
    Matrix out(v.rows(), v.cols());
    const auto d = static_cast<double>(v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double mean = v.row(r).mean();
        const double var = (v.row(r).array() - mean).square().sum() / d;
        out.row(r) = ((v.row(r).array() - mean) / std::sqrt(var + eps)).matrix();
    }
    return out;
}

Matrix plain_row_softmax(const Matrix& v) {
    Matrix out(v.rows(), v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double mx = v.row(r).maxCoeff();
        Eigen::Array<double, 1, Eigen::Dynamic> e = (v.row(r).array() - mx).exp();
        out.row(r) = (e / e.sum()).matrix();
    }
    return out;
}

}  // namespace

Matrix forward_logits(const ModelParams& params, const ModelConfig& config,
                      const TokenBatch& tokens) {
    config.validate();
    check_tokens(tokens, config.vocab_size);
    const auto B = static_cast<Eigen::Index>(tokens.size());
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(config.d_head()));

    std::array<Matrix, 3> x;
    for (int t = 0; t < 3; ++t) {
        x[t].resize(B, config.d_model);
        for (Eigen::Index r = 0; r < B; ++r) x[t].row(r) = params.w_e.row(tokens[r][t]);
        x[t].rowwise() += params.w_p.row(t);
    }

    for (int l = 0; l < config.n_layers; ++l) {
        const LayerParams& layer = params.layers[l];
        const bool last = l == config.n_layers - 1;
        const int first_pos = last ? 2 : 0;

        std::array<Matrix, 3> src;
        for (int t = 0; t < 3; ++t)
            src[t] = config.use_layer_norm ? plain_layer_norm(x[t]) : x[t];

        std::array<Matrix, 3> att = x;
        for (int t = first_pos; t < 3; ++t) {
            const int attended = config.causal_mask ? t + 1 : 3;
            Matrix concat(B, config.d_model);
            for (int h = 0; h < config.n_heads; ++h) {
                const Matrix q = src[t] * layer.w_q[h];
                Matrix scores(B, attended);
                for (int s = 0; s < attended; ++s)
                    scores.col(s) =
                        ((q.array() * (src[s] * layer.w_k[h]).array()).rowwise().sum() *
                         inv_sqrt_dh)
                            .matrix();
                const Matrix probs = plain_row_softmax(scores);
                Matrix head_out = Matrix::Zero(B, config.d_head());
                for (int s = 0; s < attended; ++s)
                    head_out.array() +=
                        (src[s] * layer.w_v[h]).array().colwise() * probs.col(s).array();
                concat.middleCols(static_cast<Eigen::Index>(h) * config.d_head(),
                                  config.d_head()) = head_out;
            }
            att[t] = x[t] + concat * layer.w_o;
        }
        x = att;

        for (int t = first_pos; t < 3; ++t) {
            const Matrix mlp_src = config.use_layer_norm ? plain_layer_norm(x[t]) : x[t];
            x[t] += (mlp_src * layer.w_in).cwiseMax(0.0) * layer.w_out;
        }
    }

    const Matrix head_in = config.use_layer_norm ? plain_layer_norm(x[2]) : x[2];
    return head_in * params.w_u;
}

EvalResult loss_and_accuracy(const ModelParams& params, const ModelConfig& config,
                             const TokenBatch& tokens, const std::vector<int>& labels) {
    if (tokens.empty()) throw std::invalid_argument("loss_and_accuracy: empty batch");
    if (labels.size() != tokens.size())
        throw std::invalid_argument("loss_and_accuracy: label count mismatch");
    const Matrix logits = forward_logits(params, config, tokens);

    EvalResult result;
    long long correct = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const int label = labels[static_cast<size_t>(r)];
        if (label < 0 || label >= logits.cols())
            throw std::invalid_argument("loss_and_accuracy: label out of range");
        int best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c)
            if (logits(r, c) > logits(r, best)) best = static_cast<int>(c);
        if (best == label) ++correct;

        const double mx = logits.row(r).maxCoeff();
        const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
        result.loss += lse - logits(r, label);
    }
    result.loss /= static_cast<double>(logits.rows());
    result.accuracy = static_cast<double>(correct) / static_cast<double>(logits.rows());
    return result;
}

Matrix embedding_rows(const ModelParams& params, int p) {
    if (p < 1 || p > params.w_e.rows())
        throw std::invalid_argument("embedding_rows: p out of range");
    return params.w_e.topRows(p);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const ModelConfig& c) {
    ordered_json j;
    j["vocab_size"] = c.vocab_size;
    j["d_model"] = c.d_model;
    j["n_heads"] = c.n_heads;
    j["n_layers"] = c.n_layers;
    j["d_mlp"] = c.d_mlp;
    j["out_classes"] = c.out_classes;
    j["layer_norm"] = c.use_layer_norm;
    j["causal_mask"] = c.causal_mask;
    return j;
}

ModelConfig config_from_json(const ordered_json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.d_mlp = j.at("d_mlp").get<int>();
    c.out_classes = j.at("out_classes").get<int>();
    c.use_layer_norm = j.at("layer_norm").get<bool>();
    c.causal_mask = j.at("causal_mask").get<bool>();
    return c;
}

std::string tensor_file(const std::string& name) { return name + ".bin"; }

}  // namespace

void save_checkpoint(const std::string& dir, const ModelConfig& config, const ModelParams& params,
                     long long epoch, const std::array<uint64_t, 4>& rng_state) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["config"] = config_to_json(config);
    manifest["epoch"] = epoch;
    manifest["rng_state"] = rng_state;
    ordered_json tensors = ordered_json::array();
    for (const auto& [name, m] : named_matrices(params)) {
        ordered_json entry;
        entry["name"] = name;
        entry["file"] = tensor_file(name);
        entry["rows"] = m->rows();
        entry["cols"] = m->cols();
        tensors.push_back(entry);
        save_matrix((fs::path(dir) / tensor_file(name)).string(), *m);
    }
    manifest["tensors"] = tensors;

    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open manifest in " + dir);
    ordered_json manifest;
    in >> manifest;

    Checkpoint ckpt;
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.epoch = manifest.at("epoch").get<long long>();
    const auto state = manifest.at("rng_state");
    for (size_t i = 0; i < 4; ++i) ckpt.rng_state[i] = state.at(i).get<uint64_t>();

    ckpt.params = zero_params(ckpt.config);
    auto named = named_matrices(ckpt.params);
    size_t idx = 0;
    for (const auto& entry : manifest.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        if (idx >= named.size() || named[idx].first != name)
            throw std::runtime_error("load_checkpoint: unexpected tensor '" + name + "'");
        Matrix m = load_matrix((fs::path(dir) / entry.at("file").get<std::string>()).string());
        if (m.rows() != named[idx].second->rows() || m.cols() != named[idx].second->cols())
            throw std::runtime_error("load_checkpoint: shape mismatch for '" + name + "'");
        *named[idx].second = std::move(m);
        ++idx;
    }
    if (idx != named.size()) throw std::runtime_error("load_checkpoint: missing tensors");
    return ckpt;
}

}  // namespace groklab
