#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "groklab/tensor.hpp"

namespace groklab {

// Decoder-only transformer over 3-token sequences (i, j, cls), classification
// read out at the cls position. No bias vectors anywhere.
struct ModelConfig {
    int vocab_size = 0;
    int d_model = 128;
    int n_heads = 4;
    int n_layers = 1;
    int d_mlp = 0;  // 0 means 4 * d_model
    int out_classes = 0;
    bool use_layer_norm = false;  // pre-norm when enabled
    bool causal_mask = true;

    int d_head() const { return d_model / n_heads; }
    int mlp_width() const { return d_mlp > 0 ? d_mlp : 4 * d_model; }
    void validate() const;
};

struct LayerParams {
    std::vector<Matrix> w_q, w_k, w_v;  // per head: d_model x d_head
    Matrix w_o;                         // n_heads*d_head x d_model
    Matrix w_in;                        // d_model x d_mlp
    Matrix w_out;                       // d_mlp x d_model
};

struct ModelParams {
    Matrix w_e;  // vocab_size x d_model
    Matrix w_p;  // 3 x d_model positional rows
    std::vector<LayerParams> layers;
    Matrix w_u;  // d_model x out_classes
};

// All matrices in one fixed order with stable names ("w_e", "w_p",
// "layer0.head0.w_q", ..., "w_u"); the order defines gradient/optimizer-state
// indexing and the checkpoint layout.
std::vector<std::pair<std::string, Matrix*>> named_matrices(ModelParams& params);
std::vector<std::pair<std::string, const Matrix*>> named_matrices(const ModelParams& params);

// Correctly shaped zero-filled parameter set.
ModelParams zero_params(const ModelConfig& config);

using TokenBatch = std::vector<std::array<int, 3>>;

// Forward recorded on a tape for training. Sequence positions are carried as
// separate B x d matrices; with causal masking position t attends to 0..t.
// Only the cls position is materialized through the final layer because the
// head reads nothing else.
struct ForwardGraph {
    std::vector<NodeId> params;  // leaves, same order as named_matrices
    NodeId logits = -1;          // B x out_classes
};
ForwardGraph build_graph(Tape& tape, const ModelParams& params, const ModelConfig& config,
                         const TokenBatch& tokens);

// Tape-free forward pass for evaluation; same math, independent code path.
Matrix forward_logits(const ModelParams& params, const ModelConfig& config,
                      const TokenBatch& tokens);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};
// Mean cross-entropy + argmax accuracy (ties break toward the smaller class).
EvalResult loss_and_accuracy(const ModelParams& params, const ModelConfig& config,
                             const TokenBatch& tokens, const std::vector<int>& labels);

// Word-embedding rows 0..p-1 (positional rows deliberately excluded: they
// cancel in the consecutive-row differences the diagnostics consume).
Matrix embedding_rows(const ModelParams& params, int p);

// Checkpoint = manifest.json (config, epoch, RNG state, matrix index) plus
// one flat binary tensor file per matrix.
void save_checkpoint(const std::string& dir, const ModelConfig& config, const ModelParams& params,
                     long long epoch, const std::array<uint64_t, 4>& rng_state);

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    long long epoch = 0;
    std::array<uint64_t, 4> rng_state{};
};
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace groklab
