#include "sentifuse/nn/network.hpp"

#include <cmath>

#include "sentifuse/errors.hpp"

namespace sentifuse::nn {

namespace {

using Eigen::MatrixXd;

MatrixXd sigmoid(const MatrixXd& x) {
    return ((-x.array()).exp() + 1.0).inverse().matrix();
}

int tensors_per_direction(LayerKind kind) {
    switch (kind) {
        case LayerKind::SimpleRNN: return 3;
        case LayerKind::GRU: return 9;
        case LayerKind::LSTM: return 12;
        default: return 0;
    }
}

// One recurrent pass over the input in processing order (dir = +1 walks
// 0..T-1, dir = -1 walks T-1..0). Cache entries are indexed by original
// step so bidirectional outputs align by step.
void run_direction(LayerKind kind, const LayerSpec& layer,
                   const std::vector<MatrixXd>& tensors, std::size_t base,
                   const Steps& input, int dir, DirectionCache& cache) {
    const auto steps = static_cast<int>(input.size());
    const int units = layer.units;
    const auto batch = input[0].cols();
    const MatrixXd ones = MatrixXd::Ones(1, batch);

    cache.h.assign(input.size(), MatrixXd());
    if (kind == LayerKind::GRU) {
        cache.z.assign(input.size(), MatrixXd());
        cache.r.assign(input.size(), MatrixXd());
        cache.cand.assign(input.size(), MatrixXd());
        cache.rh.assign(input.size(), MatrixXd());
    } else if (kind == LayerKind::LSTM) {
        cache.gi.assign(input.size(), MatrixXd());
        cache.gf.assign(input.size(), MatrixXd());
        cache.gg.assign(input.size(), MatrixXd());
        cache.go.assign(input.size(), MatrixXd());
        cache.c.assign(input.size(), MatrixXd());
        cache.ctanh.assign(input.size(), MatrixXd());
    }

    MatrixXd h_prev = MatrixXd::Zero(units, batch);
    MatrixXd c_prev = MatrixXd::Zero(units, batch);
    for (int k = 0; k < steps; ++k) {
        const int t = dir > 0 ? k : steps - 1 - k;
        const MatrixXd& x = input[static_cast<std::size_t>(t)];
        const auto idx = static_cast<std::size_t>(t);

        if (kind == LayerKind::SimpleRNN) {
            const MatrixXd& wx = tensors[base + 0];
            const MatrixXd& wh = tensors[base + 1];
            const MatrixXd& b = tensors[base + 2];
            cache.h[idx] = (wx * x + wh * h_prev + b * ones).array().tanh();
            h_prev = cache.h[idx];
        } else if (kind == LayerKind::GRU) {
            const MatrixXd& wz = tensors[base + 0];
            const MatrixXd& uz = tensors[base + 1];
            const MatrixXd& bz = tensors[base + 2];
            const MatrixXd& wr = tensors[base + 3];
            const MatrixXd& ur = tensors[base + 4];
            const MatrixXd& br = tensors[base + 5];
            const MatrixXd& wc = tensors[base + 6];
            const MatrixXd& uc = tensors[base + 7];
            const MatrixXd& bc = tensors[base + 8];
            cache.z[idx] = sigmoid(wz * x + uz * h_prev + bz * ones);
            cache.r[idx] = sigmoid(wr * x + ur * h_prev + br * ones);
            cache.rh[idx] = cache.r[idx].cwiseProduct(h_prev);
            // Candidate uses the reset gate before the recurrent matmul.
            cache.cand[idx] =
                (wc * x + uc * cache.rh[idx] + bc * ones).array().tanh();
            // Update gate keeps the previous state: h = z*h_prev + (1-z)*cand.
            cache.h[idx] = cache.z[idx].cwiseProduct(h_prev) +
                           (1.0 - cache.z[idx].array())
                               .matrix()
                               .cwiseProduct(cache.cand[idx]);
            h_prev = cache.h[idx];
        } else { // LSTM
            const MatrixXd& wi = tensors[base + 0];
            const MatrixXd& ui = tensors[base + 1];
            const MatrixXd& bi = tensors[base + 2];
            const MatrixXd& wf = tensors[base + 3];
            const MatrixXd& uf = tensors[base + 4];
            const MatrixXd& bf = tensors[base + 5];
            const MatrixXd& wg = tensors[base + 6];
            const MatrixXd& ug = tensors[base + 7];
            const MatrixXd& bg = tensors[base + 8];
            const MatrixXd& wo = tensors[base + 9];
            const MatrixXd& uo = tensors[base + 10];
            const MatrixXd& bo = tensors[base + 11];
            cache.gi[idx] = sigmoid(wi * x + ui * h_prev + bi * ones);
            cache.gf[idx] = sigmoid(wf * x + uf * h_prev + bf * ones);
            cache.gg[idx] = (wg * x + ug * h_prev + bg * ones).array().tanh();
            cache.go[idx] = sigmoid(wo * x + uo * h_prev + bo * ones);
            cache.c[idx] = cache.gf[idx].cwiseProduct(c_prev) +
                           cache.gi[idx].cwiseProduct(cache.gg[idx]);
            cache.ctanh[idx] = cache.c[idx].array().tanh().matrix();
            cache.h[idx] = cache.go[idx].cwiseProduct(cache.ctanh[idx]);
            h_prev = cache.h[idx];
            c_prev = cache.c[idx];
        }
    }
}

// BPTT for one direction. `dh_out[t]` holds the gradient arriving at the
// hidden state from the layer output (empty matrices where none). Returns
// parameter gradients into `grads` (same slice layout) and adds input
// gradients into `dinput`.
void backprop_direction(LayerKind kind, const LayerSpec& layer,
                        const std::vector<MatrixXd>& tensors, std::size_t base,
                        const Steps& input, int dir, const DirectionCache& cache,
                        const Steps& dh_out, std::vector<MatrixXd>& grads,
                        Steps& dinput) {
    const auto steps = static_cast<int>(input.size());
    const int units = layer.units;
    const auto batch = input[0].cols();

    MatrixXd carry_dh = MatrixXd::Zero(units, batch);
    MatrixXd carry_dc = MatrixXd::Zero(units, batch);

    auto h_prev_of = [&](int t) -> MatrixXd {
        const int prev = t - dir;
        if (prev < 0 || prev >= steps) return MatrixXd::Zero(units, batch);
        return cache.h[static_cast<std::size_t>(prev)];
    };
    auto c_prev_of = [&](int t) -> MatrixXd {
        const int prev = t - dir;
        if (prev < 0 || prev >= steps) return MatrixXd::Zero(units, batch);
        return cache.c[static_cast<std::size_t>(prev)];
    };

    for (int k = steps - 1; k >= 0; --k) {
        const int t = dir > 0 ? k : steps - 1 - k;
        const auto idx = static_cast<std::size_t>(t);
        const MatrixXd& x = input[idx];

        MatrixXd dh = carry_dh;
        if (dh_out[idx].size() > 0) dh += dh_out[idx];

        if (kind == LayerKind::SimpleRNN) {
            const MatrixXd& wx = tensors[base + 0];
            const MatrixXd& wh = tensors[base + 1];
            const MatrixXd da =
                dh.cwiseProduct((1.0 - cache.h[idx].array().square()).matrix());
            grads[base + 0] += da * x.transpose();
            grads[base + 1] += da * h_prev_of(t).transpose();
            grads[base + 2] += da.rowwise().sum();
            dinput[idx] += wx.transpose() * da;
            carry_dh = wh.transpose() * da;
        } else if (kind == LayerKind::GRU) {
            const MatrixXd& wz = tensors[base + 0];
            const MatrixXd& uz = tensors[base + 1];
            const MatrixXd& wr = tensors[base + 3];
            const MatrixXd& ur = tensors[base + 4];
            const MatrixXd& wc = tensors[base + 6];
            const MatrixXd& uc = tensors[base + 7];
            const MatrixXd& z = cache.z[idx];
            const MatrixXd& r = cache.r[idx];
            const MatrixXd& cand = cache.cand[idx];
            const MatrixXd h_prev = h_prev_of(t);

            // h = z .* h_prev + (1 - z) .* cand
            const MatrixXd dcand =
                dh.cwiseProduct((1.0 - z.array()).matrix());
            const MatrixXd dz = dh.cwiseProduct(h_prev - cand);
            MatrixXd dh_prev = dh.cwiseProduct(z);

            const MatrixXd dac =
                dcand.cwiseProduct((1.0 - cand.array().square()).matrix());
            grads[base + 6] += dac * x.transpose();
            grads[base + 7] += dac * cache.rh[idx].transpose();
            grads[base + 8] += dac.rowwise().sum();
            const MatrixXd drh = uc.transpose() * dac;
            const MatrixXd dr = drh.cwiseProduct(h_prev);
            dh_prev += drh.cwiseProduct(r);
            MatrixXd dx = wc.transpose() * dac;

            const MatrixXd daz =
                dz.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
            grads[base + 0] += daz * x.transpose();
            grads[base + 1] += daz * h_prev.transpose();
            grads[base + 2] += daz.rowwise().sum();
            dx += wz.transpose() * daz;
            dh_prev += uz.transpose() * daz;

            const MatrixXd dar =
                dr.cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));
            grads[base + 3] += dar * x.transpose();
            grads[base + 4] += dar * h_prev.transpose();
            grads[base + 5] += dar.rowwise().sum();
            dx += wr.transpose() * dar;
            dh_prev += ur.transpose() * dar;

            dinput[idx] += dx;
            carry_dh = dh_prev;
        } else { // LSTM
            const MatrixXd& wi = tensors[base + 0];
            const MatrixXd& ui = tensors[base + 1];
            const MatrixXd& wf = tensors[base + 3];
            const MatrixXd& uf = tensors[base + 4];
            const MatrixXd& wg = tensors[base + 6];
            const MatrixXd& ug = tensors[base + 7];
            const MatrixXd& wo = tensors[base + 9];
            const MatrixXd& uo = tensors[base + 10];
            const MatrixXd& gi = cache.gi[idx];
            const MatrixXd& gf = cache.gf[idx];
            const MatrixXd& gg = cache.gg[idx];
            const MatrixXd& go = cache.go[idx];
            const MatrixXd& ctanh = cache.ctanh[idx];
            const MatrixXd c_prev = c_prev_of(t);

            const MatrixXd dgo = dh.cwiseProduct(ctanh);
            MatrixXd dc = carry_dc +
                          dh.cwiseProduct(go).cwiseProduct(
                              (1.0 - ctanh.array().square()).matrix());
            const MatrixXd dgf = dc.cwiseProduct(c_prev);
            const MatrixXd dgi = dc.cwiseProduct(gg);
            const MatrixXd dgg = dc.cwiseProduct(gi);
            carry_dc = dc.cwiseProduct(gf);

            const MatrixXd dai =
                dgi.cwiseProduct(gi.cwiseProduct((1.0 - gi.array()).matrix()));
            const MatrixXd daf =
                dgf.cwiseProduct(gf.cwiseProduct((1.0 - gf.array()).matrix()));
            const MatrixXd dag =
                dgg.cwiseProduct((1.0 - gg.array().square()).matrix());
            const MatrixXd dao =
                dgo.cwiseProduct(go.cwiseProduct((1.0 - go.array()).matrix()));

            const MatrixXd h_prev = h_prev_of(t);
            grads[base + 0] += dai * x.transpose();
            grads[base + 1] += dai * h_prev.transpose();
            grads[base + 2] += dai.rowwise().sum();
            grads[base + 3] += daf * x.transpose();
            grads[base + 4] += daf * h_prev.transpose();
            grads[base + 5] += daf.rowwise().sum();
            grads[base + 6] += dag * x.transpose();
            grads[base + 7] += dag * h_prev.transpose();
            grads[base + 8] += dag.rowwise().sum();
            grads[base + 9] += dao * x.transpose();
            grads[base + 10] += dao * h_prev.transpose();
            grads[base + 11] += dao.rowwise().sum();

            dinput[idx] += wi.transpose() * dai + wf.transpose() * daf +
                           wg.transpose() * dag + wo.transpose() * dao;
            carry_dh = ui.transpose() * dai + uf.transpose() * daf +
                       ug.transpose() * dag + uo.transpose() * dao;
        }
    }
}

} // namespace

Steps make_batch(const std::vector<Eigen::MatrixXd>& samples,
                 const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw ContractError("empty batch");
    const auto window = samples[indices[0]].rows();
    const auto width = samples[indices[0]].cols();
    Steps steps(static_cast<std::size_t>(window));
    for (Eigen::Index t = 0; t < window; ++t) {
        auto& step = steps[static_cast<std::size_t>(t)];
        step.resize(width, static_cast<Eigen::Index>(indices.size()));
        for (std::size_t b = 0; b < indices.size(); ++b)
            step.col(static_cast<Eigen::Index>(b)) =
                samples[indices[b]].row(t).transpose();
    }
    return steps;
}

ForwardResult forward(const ModelSpec& spec, const Parameters& params,
                      const Steps& input, Mode mode, rng::Engine* dropout_rng) {
    if (input.empty())
        throw ContractError("forward: empty input sequence");
    if (params.layers.size() != spec.layers.size())
        throw ContractError("forward: parameters do not match spec");
    const auto batch = input[0].cols();
    const auto input_width = static_cast<int>(input[0].rows());
    const auto window = static_cast<int>(input.size());
    const auto shapes = plan_shapes(spec, input_width, window);
    validate_shapes(spec, input_width, window, params);

    ForwardResult result;
    auto& cache = result.cache;
    cache.layers.resize(spec.layers.size());
    cache.batch = batch;
    cache.window = window;
    cache.input_width = input_width;
    cache.spec_fingerprint = spec.fingerprint();
    cache.mode = mode;

    Steps signal = input;
    bool sequence = true;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& layer = spec.layers[i];
        const auto& tensors = params.layers[i].tensors;
        auto& lc = cache.layers[i];
        lc.input = signal;
        lc.input_sequence = sequence;

        if (static_cast<int>(signal[0].rows()) != shapes[i].in_width)
            throw ContractError("forward: width mismatch at layer " +
                                std::to_string(i) + " (" +
                                to_string(layer.kind) + ")");

        Steps out;
        switch (layer.kind) {
            case LayerKind::Dense: {
                const auto& w = tensors[0];
                const auto& b = tensors[1];
                out.reserve(signal.size());
                for (const auto& x : signal) {
                    MatrixXd y = w * x + b * MatrixXd::Ones(1, batch);
                    if (layer.activation == Activation::Tanh)
                        y = y.array().tanh().matrix();
                    out.push_back(std::move(y));
                }
                break;
            }
            case LayerKind::SimpleRNN:
            case LayerKind::GRU:
            case LayerKind::LSTM: {
                const int per_dir = tensors_per_direction(layer.kind);
                run_direction(layer.kind, layer, tensors, 0, signal, +1, lc.fwd);
                if (layer.bidirectional)
                    run_direction(layer.kind, layer, tensors,
                                  static_cast<std::size_t>(per_dir), signal, -1,
                                  lc.bwd);
                const auto steps = signal.size();
                if (layer.return_sequences) {
                    out.resize(steps);
                    for (std::size_t t = 0; t < steps; ++t) {
                        if (layer.bidirectional) {
                            MatrixXd both(2 * layer.units, batch);
                            both.topRows(layer.units) = lc.fwd.h[t];
                            both.bottomRows(layer.units) = lc.bwd.h[t];
                            out[t] = std::move(both);
                        } else {
                            out[t] = lc.fwd.h[t];
                        }
                    }
                } else {
                    // Final forward state; the backward direction finishes
                    // at the first step.
                    if (layer.bidirectional) {
                        MatrixXd both(2 * layer.units, batch);
                        both.topRows(layer.units) = lc.fwd.h[steps - 1];
                        both.bottomRows(layer.units) = lc.bwd.h[0];
                        out.push_back(std::move(both));
                    } else {
                        out.push_back(lc.fwd.h[steps - 1]);
                    }
                }
                break;
            }
            case LayerKind::RepeatVector: {
                out.assign(static_cast<std::size_t>(shapes[i].repeats), signal[0]);
                break;
            }
            case LayerKind::Flatten: {
                if (!sequence) {
                    out.push_back(signal[0]);
                } else {
                    const auto width = signal[0].rows();
                    MatrixXd flat(static_cast<Eigen::Index>(signal.size()) * width,
                                  batch);
                    for (std::size_t t = 0; t < signal.size(); ++t)
                        flat.middleRows(static_cast<Eigen::Index>(t) * width,
                                        width) = signal[t];
                    out.push_back(std::move(flat));
                }
                break;
            }
        }

        sequence = shapes[i].out_steps != 0;
        lc.output = out;
        lc.output_sequence = sequence;

        if (mode == Mode::Train && layer.dropout_rate > 0.0) {
            if (!dropout_rng)
                throw ContractError("Train-mode forward needs a dropout engine");
            const double rate = layer.dropout_rate;
            const double scale = 1.0 / (1.0 - rate);
            lc.mask.resize(out.size());
            for (std::size_t t = 0; t < out.size(); ++t) {
                auto& mask = lc.mask[t];
                mask.resize(out[t].rows(), out[t].cols());
                for (Eigen::Index rr = 0; rr < mask.rows(); ++rr)
                    for (Eigen::Index cc = 0; cc < mask.cols(); ++cc)
                        mask(rr, cc) =
                            dropout_rng->next_double() >= rate ? scale : 0.0;
                out[t] = out[t].cwiseProduct(mask);
            }
        }
        signal = std::move(out);
    }

    result.predictions = signal[0].row(0).transpose();
    return result;
}

Parameters backward(const ModelSpec& spec, const Parameters& params,
                    const ForwardCache& cache,
                    const Eigen::VectorXd& dpredictions) {
    if (cache.layers.size() != spec.layers.size() ||
        cache.spec_fingerprint != spec.fingerprint())
        throw ContractError("backward: cache does not match spec");
    if (dpredictions.size() != cache.batch)
        throw ContractError("backward: gradient batch size mismatch");

    Parameters grads;
    grads.layers.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        grads.layers[i].tensors.reserve(params.layers[i].tensors.size());
        for (const auto& tensor : params.layers[i].tensors)
            grads.layers[i].tensors.push_back(
                MatrixXd::Zero(tensor.rows(), tensor.cols()));
    }

    Steps dsignal;
    dsignal.push_back(dpredictions.transpose());

    for (std::size_t i = spec.layers.size(); i-- > 0;) {
        const auto& layer = spec.layers[i];
        const auto& lc = cache.layers[i];
        const auto& tensors = params.layers[i].tensors;
        auto& layer_grads = grads.layers[i].tensors;
        const auto batch = cache.batch;

        if (dsignal.size() != lc.output.size())
            throw ContractError("backward: signal shape mismatch at layer " +
                                std::to_string(i));

        // Dropout acts on the layer output, so its mask applies first.
        if (!lc.mask.empty())
            for (std::size_t t = 0; t < dsignal.size(); ++t)
                dsignal[t] = dsignal[t].cwiseProduct(lc.mask[t]);

        Steps dinput(lc.input.size());
        for (std::size_t t = 0; t < lc.input.size(); ++t)
            dinput[t] = MatrixXd::Zero(lc.input[t].rows(), batch);

        switch (layer.kind) {
            case LayerKind::Dense: {
                const auto& w = tensors[0];
                for (std::size_t t = 0; t < dsignal.size(); ++t) {
                    MatrixXd dz = dsignal[t];
                    if (layer.activation == Activation::Tanh)
                        dz = dz.cwiseProduct(
                            (1.0 - lc.output[t].array().square()).matrix());
                    layer_grads[0] += dz * lc.input[t].transpose();
                    layer_grads[1] += dz.rowwise().sum();
                    dinput[t] += w.transpose() * dz;
                }
                break;
            }
            case LayerKind::SimpleRNN:
            case LayerKind::GRU:
            case LayerKind::LSTM: {
                const int per_dir = tensors_per_direction(layer.kind);
                const int units = layer.units;
                const auto steps = lc.input.size();

                auto out_grads_for = [&](bool backward_dir) {
                    Steps dh(steps);
                    const Eigen::Index row0 = backward_dir ? units : 0;
                    if (layer.return_sequences) {
                        for (std::size_t t = 0; t < steps; ++t)
                            dh[t] = layer.bidirectional
                                        ? dsignal[t].middleRows(row0, units)
                                        : dsignal[t];
                    } else {
                        const std::size_t target = backward_dir ? 0 : steps - 1;
                        dh[target] = layer.bidirectional
                                         ? dsignal[0].middleRows(row0, units)
                                         : dsignal[0];
                    }
                    return dh;
                };

                backprop_direction(layer.kind, layer, tensors, 0, lc.input, +1,
                                   lc.fwd, out_grads_for(false), layer_grads,
                                   dinput);
                if (layer.bidirectional)
                    backprop_direction(layer.kind, layer, tensors,
                                       static_cast<std::size_t>(per_dir),
                                       lc.input, -1, lc.bwd,
                                       out_grads_for(true), layer_grads,
                                       dinput);
                break;
            }
            case LayerKind::RepeatVector: {
                for (const auto& step_grad : dsignal) dinput[0] += step_grad;
                break;
            }
            case LayerKind::Flatten: {
                if (!lc.input_sequence) {
                    dinput[0] += dsignal[0];
                } else {
                    const auto width = lc.input[0].rows();
                    for (std::size_t t = 0; t < lc.input.size(); ++t)
                        dinput[t] += dsignal[0].middleRows(
                            static_cast<Eigen::Index>(t) * width, width);
                }
                break;
            }
        }
        dsignal = std::move(dinput);
    }
    return grads;
}

} // namespace sentifuse::nn
