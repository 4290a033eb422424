#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sentifuse/nn/model.hpp"
#include "sentifuse/nn/params.hpp"
#include "sentifuse/rng.hpp"

namespace sentifuse::nn {

/// Time-major batched sequence: one (width x batch) matrix per step.
using Steps = std::vector<Eigen::MatrixXd>;

enum class Mode { Train, Inference };

/// Per-direction recurrent intermediates, indexed by original step.
struct DirectionCache {
    Steps h;
    Steps z, r, cand, rh;           // GRU
    Steps gi, gf, gg, go, c, ctanh; // LSTM
};

struct LayerCache {
    Steps input; // as received (after the upstream layer's dropout)
    bool input_sequence = true;
    Steps output; // pre-dropout activations
    bool output_sequence = true;
    DirectionCache fwd, bwd;
    Steps mask; // inverted dropout masks; empty when dropout inactive
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Eigen::Index batch = 0;
    int window = 0;
    int input_width = 0;
    std::uint64_t spec_fingerprint = 0;
    Mode mode = Mode::Inference;
};

struct ForwardResult {
    Eigen::VectorXd predictions; // length batch
    ForwardCache cache;
};

/// Assembles a time-major batch from per-sample (W x F) matrices.
Steps make_batch(const std::vector<Eigen::MatrixXd>& samples,
                 const std::vector<std::size_t>& indices);

/// Runs the network. In Train mode dropout applies inverted masking drawn
/// from `dropout_rng` (required iff any layer has a positive rate);
/// Inference ignores dropout entirely.
ForwardResult forward(const ModelSpec& spec, const Parameters& params,
                      const Steps& input, Mode mode,
                      rng::Engine* dropout_rng = nullptr);

/// Backpropagation through time over the cached forward pass.
/// `dpredictions` is dLoss/dprediction per batch element.
Parameters backward(const ModelSpec& spec, const Parameters& params,
                    const ForwardCache& cache,
                    const Eigen::VectorXd& dpredictions);

} // namespace sentifuse::nn
