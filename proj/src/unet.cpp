#include "fsgcc/unet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "fsgcc/dsp.hpp"
#include "fsgcc/prng.hpp"

namespace fsgcc {

void same_padding(int size, int kernel, int stride, int& before, int& after) {
    const int out = (size + stride - 1) / stride;
    const int total = std::max(0, (out - 1) * stride + kernel - size);
    before = total / 2;
    after = total - before;
}

Tensor conv2d_forward(const Tensor& input, const ConvLayerParams& p) {
    if (input.c != p.in_ch) {
        throw std::invalid_argument("conv2d_forward: channel mismatch");
    }
    if (p.weights.size() !=
        static_cast<std::size_t>(p.out_ch) * p.in_ch * p.kh * p.kw) {
        throw std::invalid_argument("conv2d_forward: weight size mismatch");
    }
    int pt, pb, pl, pr;
    same_padding(input.h, p.kh, p.stride, pt, pb);
    same_padding(input.w, p.kw, p.stride, pl, pr);
    const int out_h = (input.h + pt + pb - p.kh) / p.stride + 1;
    const int out_w = (input.w + pl + pr - p.kw) / p.stride + 1;
    const int s = p.stride;

    Tensor out(input.n, p.out_ch, out_h, out_w);
    for (int b = 0; b < input.n; ++b) {
        for (int oc = 0; oc < p.out_ch; ++oc) {
            double* outp = out.plane(b, oc);
            const double bias = p.bias[static_cast<std::size_t>(oc)];
            std::fill_n(outp, static_cast<std::size_t>(out_h) * out_w, bias);
            for (int ic = 0; ic < p.in_ch; ++ic) {
                const double* inp = input.plane(b, ic);
                const double* wbase =
                    &p.weights[(static_cast<std::size_t>(oc) * p.in_ch + ic) * p.kh * p.kw];
                for (int khi = 0; khi < p.kh; ++khi) {
                    for (int oh = 0; oh < out_h; ++oh) {
                        const int ih = oh * s + khi - pt;
                        if (ih < 0 || ih >= input.h) continue;
                        const double* inrow = inp + static_cast<std::size_t>(ih) * input.w;
                        double* outrow = outp + static_cast<std::size_t>(oh) * out_w;
                        for (int kwi = 0; kwi < p.kw; ++kwi) {
                            const double wv = wbase[khi * p.kw + kwi];
                            const int off = kwi - pl;
                            const int lo = off >= 0 ? 0 : (-off + s - 1) / s;
                            int hi = (input.w - 1 - off) / s;
                            if (hi > out_w - 1) hi = out_w - 1;
                            const double* src = inrow + off;
                            for (int ow = lo; ow <= hi; ++ow) {
                                outrow[ow] += wv * src[ow * s];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& input, const ConvLayerParams& p, const Tensor& grad_out,
                     Tensor& grad_input, std::vector<double>& grad_weights,
                     std::vector<double>& grad_bias) {
    int pt, pb, pl, pr;
    same_padding(input.h, p.kh, p.stride, pt, pb);
    same_padding(input.w, p.kw, p.stride, pl, pr);
    const int out_h = grad_out.h;
    const int out_w = grad_out.w;
    const int s = p.stride;
    if (grad_out.n != input.n || grad_out.c != p.out_ch) {
        throw std::invalid_argument("conv2d_backward: grad shape mismatch");
    }

    grad_input = Tensor(input.n, input.c, input.h, input.w);
    grad_weights.assign(p.weights.size(), 0.0);
    grad_bias.assign(p.bias.size(), 0.0);

    for (int b = 0; b < input.n; ++b) {
        for (int oc = 0; oc < p.out_ch; ++oc) {
            const double* gp = grad_out.plane(b, oc);
            double acc_bias = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(out_h) * out_w; ++i) {
                acc_bias += gp[i];
            }
            grad_bias[static_cast<std::size_t>(oc)] += acc_bias;

            for (int ic = 0; ic < p.in_ch; ++ic) {
                const double* inp = input.plane(b, ic);
                double* ginp = grad_input.plane(b, ic);
                const std::size_t wofs =
                    (static_cast<std::size_t>(oc) * p.in_ch + ic) * p.kh * p.kw;
                for (int khi = 0; khi < p.kh; ++khi) {
                    for (int oh = 0; oh < out_h; ++oh) {
                        const int ih = oh * s + khi - pt;
                        if (ih < 0 || ih >= input.h) continue;
                        const double* inrow = inp + static_cast<std::size_t>(ih) * input.w;
                        double* ginrow = ginp + static_cast<std::size_t>(ih) * input.w;
                        const double* grow = gp + static_cast<std::size_t>(oh) * out_w;
                        for (int kwi = 0; kwi < p.kw; ++kwi) {
                            const int off = kwi - pl;
                            const int lo = off >= 0 ? 0 : (-off + s - 1) / s;
                            int hi = (input.w - 1 - off) / s;
                            if (hi > out_w - 1) hi = out_w - 1;
                            const double* src = inrow + off;
                            double* gdst = ginrow + off;
                            double acc = 0.0;
                            const double wv = p.weights[wofs + khi * p.kw + kwi];
                            for (int ow = lo; ow <= hi; ++ow) {
                                acc += grow[ow] * src[ow * s];
                                gdst[ow * s] += wv * grow[ow];
                            }
                            grad_weights[wofs + khi * p.kw + kwi] += acc;
                        }
                    }
                }
            }
        }
    }
}

Tensor batchnorm_forward(const Tensor& input, BatchNormParams& params, BnMode mode,
                         BatchNormCache* cache) {
    if (input.c != params.channels) {
        throw std::invalid_argument("batchnorm_forward: channel mismatch");
    }
    if (mode == BnMode::Train && input.n < 2) {
        throw std::invalid_argument("batchnorm_forward: train mode needs batch size >= 2");
    }
    Tensor out(input.n, input.c, input.h, input.w);
    if (cache) {
        cache->xhat = Tensor(input.n, input.c, input.h, input.w);
        cache->inv_std.assign(static_cast<std::size_t>(input.c), 0.0);
    }
    const std::size_t plane = static_cast<std::size_t>(input.h) * input.w;
    const double m = static_cast<double>(input.n) * static_cast<double>(plane);

    for (int ch = 0; ch < input.c; ++ch) {
        double mean, var;
        if (mode == BnMode::Train) {
            double s1 = 0.0, s2 = 0.0;
            for (int b = 0; b < input.n; ++b) {
                const double* src = input.plane(b, ch);
                for (std::size_t i = 0; i < plane; ++i) {
                    s1 += src[i];
                    s2 += src[i] * src[i];
                }
            }
            mean = s1 / m;
            var = std::max(0.0, s2 / m - mean * mean);
            params.running_mean[static_cast<std::size_t>(ch)] =
                (1.0 - params.momentum) * params.running_mean[static_cast<std::size_t>(ch)] +
                params.momentum * mean;
            params.running_var[static_cast<std::size_t>(ch)] =
                (1.0 - params.momentum) * params.running_var[static_cast<std::size_t>(ch)] +
                params.momentum * var;
        } else {
            mean = params.running_mean[static_cast<std::size_t>(ch)];
            var = params.running_var[static_cast<std::size_t>(ch)];
        }
        const double inv_std = 1.0 / std::sqrt(var + params.epsilon);
        const double g = params.gamma[static_cast<std::size_t>(ch)];
        const double be = params.beta[static_cast<std::size_t>(ch)];
        if (cache) cache->inv_std[static_cast<std::size_t>(ch)] = inv_std;
        for (int b = 0; b < input.n; ++b) {
            const double* src = input.plane(b, ch);
            double* dst = out.plane(b, ch);
            double* xh = cache ? cache->xhat.plane(b, ch) : nullptr;
            for (std::size_t i = 0; i < plane; ++i) {
                const double x = (src[i] - mean) * inv_std;
                if (xh) xh[i] = x;
                dst[i] = g * x + be;
            }
        }
    }
    return out;
}

void batchnorm_backward(const BatchNormParams& params, const BatchNormCache& cache,
                        const Tensor& grad_out, Tensor& grad_input,
                        std::vector<double>& grad_gamma, std::vector<double>& grad_beta) {
    const Tensor& xhat = cache.xhat;
    if (!xhat.same_shape(grad_out)) {
        throw std::invalid_argument("batchnorm_backward: shape mismatch");
    }
    grad_input = Tensor(grad_out.n, grad_out.c, grad_out.h, grad_out.w);
    grad_gamma.assign(static_cast<std::size_t>(grad_out.c), 0.0);
    grad_beta.assign(static_cast<std::size_t>(grad_out.c), 0.0);

    const std::size_t plane = static_cast<std::size_t>(grad_out.h) * grad_out.w;
    const double m = static_cast<double>(grad_out.n) * static_cast<double>(plane);

    for (int ch = 0; ch < grad_out.c; ++ch) {
        double s1 = 0.0, s2 = 0.0;
        for (int b = 0; b < grad_out.n; ++b) {
            const double* g = grad_out.plane(b, ch);
            const double* xh = xhat.plane(b, ch);
            for (std::size_t i = 0; i < plane; ++i) {
                s1 += g[i];
                s2 += g[i] * xh[i];
            }
        }
        grad_beta[static_cast<std::size_t>(ch)] = s1;
        grad_gamma[static_cast<std::size_t>(ch)] = s2;
        const double scale =
            params.gamma[static_cast<std::size_t>(ch)] * cache.inv_std[static_cast<std::size_t>(ch)];
        const double mean_g = s1 / m;
        const double mean_gx = s2 / m;
        for (int b = 0; b < grad_out.n; ++b) {
            const double* g = grad_out.plane(b, ch);
            const double* xh = xhat.plane(b, ch);
            double* gi = grad_input.plane(b, ch);
            for (std::size_t i = 0; i < plane; ++i) {
                gi[i] = scale * (g[i] - mean_g - xh[i] * mean_gx);
            }
        }
    }
}

namespace {

ConvLayerParams make_conv(int in_ch, int out_ch, int kh, int kw, int stride, Prng& prng) {
    ConvLayerParams p;
    p.in_ch = in_ch;
    p.out_ch = out_ch;
    p.kh = kh;
    p.kw = kw;
    p.stride = stride;
    p.weights.resize(static_cast<std::size_t>(out_ch) * in_ch * kh * kw);
    p.bias.assign(static_cast<std::size_t>(out_ch), 0.0);
    const double limit = std::sqrt(6.0 / (static_cast<double>(in_ch) * kh * kw));
    for (auto& w : p.weights) w = prng.uniform(-limit, limit);
    return p;
}

BatchNormParams make_bn(int channels) {
    BatchNormParams p;
    p.channels = channels;
    p.gamma.assign(static_cast<std::size_t>(channels), 1.0);
    p.beta.assign(static_cast<std::size_t>(channels), 0.0);
    p.running_mean.assign(static_cast<std::size_t>(channels), 0.0);
    p.running_var.assign(static_cast<std::size_t>(channels), 1.0);
    return p;
}

}  // namespace

UNetModel make_unet(const std::vector<int>& encoder_filters,
                    const std::vector<int>& decoder_filters, uint64_t seed, int kh, int kw) {
    if (encoder_filters.empty() || encoder_filters.size() != decoder_filters.size()) {
        throw std::invalid_argument("make_unet: encoder/decoder depth mismatch");
    }
    const int depth = static_cast<int>(encoder_filters.size());
    UNetModel m;
    m.encoder_filters = encoder_filters;
    m.decoder_filters = decoder_filters;
    m.kh = kh;
    m.kw = kw;

    Prng prng(mix_seed(seed, 0xC0DE));
    for (int i = 0; i < depth; ++i) {
        const int in_ch = (i == 0) ? 1 : encoder_filters[static_cast<std::size_t>(i - 1)];
        m.convs.push_back(make_conv(in_ch, encoder_filters[static_cast<std::size_t>(i)], kh, kw,
                                    2, prng));
        m.bns.push_back(make_bn(encoder_filters[static_cast<std::size_t>(i)]));
    }
    for (int i = 0; i < depth; ++i) {
        int in_ch;
        if (i == 0) {
            in_ch = encoder_filters.back();
        } else if (i == 1) {
            in_ch = decoder_filters[0];
        } else {
            in_ch = decoder_filters[static_cast<std::size_t>(i - 1)] +
                    encoder_filters[static_cast<std::size_t>(depth - i)];
        }
        m.convs.push_back(make_conv(in_ch, decoder_filters[static_cast<std::size_t>(i)], kh, kw,
                                    1, prng));
        m.bns.push_back(make_bn(decoder_filters[static_cast<std::size_t>(i)]));
    }
    const int final_in = decoder_filters.back() + encoder_filters.front();
    m.convs.push_back(make_conv(final_in, 1, 1, 1, 1, prng));
    return m;
}

std::int64_t count_trainable_parameters(const UNetModel& model) {
    std::int64_t total = 0;
    for (const auto& c : model.convs) {
        total += static_cast<std::int64_t>(c.weights.size()) +
                 static_cast<std::int64_t>(c.bias.size());
    }
    for (const auto& b : model.bns) {
        total += static_cast<std::int64_t>(b.gamma.size()) +
                 static_cast<std::int64_t>(b.beta.size());
    }
    return total;
}

std::vector<std::vector<double>*> parameter_blocks(UNetModel& model) {
    std::vector<std::vector<double>*> blocks;
    for (std::size_t i = 0; i < model.convs.size(); ++i) {
        blocks.push_back(&model.convs[i].weights);
        blocks.push_back(&model.convs[i].bias);
        if (i < model.bns.size()) {
            blocks.push_back(&model.bns[i].gamma);
            blocks.push_back(&model.bns[i].beta);
        }
    }
    return blocks;
}

std::vector<const std::vector<double>*> parameter_blocks(const UNetModel& model) {
    std::vector<const std::vector<double>*> blocks;
    for (std::size_t i = 0; i < model.convs.size(); ++i) {
        blocks.push_back(&model.convs[i].weights);
        blocks.push_back(&model.convs[i].bias);
        if (i < model.bns.size()) {
            blocks.push_back(&model.bns[i].gamma);
            blocks.push_back(&model.bns[i].beta);
        }
    }
    return blocks;
}

namespace {

void check_forward_input(const UNetModel& model, const Tensor& input) {
    if (input.c != 1) {
        throw std::invalid_argument("unet_forward: input must have a single channel");
    }
    if (!is_power_of_two(static_cast<std::size_t>(input.h)) ||
        !is_power_of_two(static_cast<std::size_t>(input.w))) {
        throw std::invalid_argument("unet_forward: spatial dims must be powers of two");
    }
    const int depth = static_cast<int>(model.encoder_filters.size());
    if (input.h < (1 << depth) || input.w < (1 << depth)) {
        throw std::invalid_argument("unet_forward: input too small for the encoder depth");
    }
}

Tensor forward_impl(UNetModel& model, const Tensor& input, UNetTrace* trace) {
    check_forward_input(model, input);
    const int depth = static_cast<int>(model.encoder_filters.size());
    const BnMode mode = model.train_mode ? BnMode::Train : BnMode::Inference;

    if (trace) {
        trace->conv_inputs.clear();
        trace->conv_outputs.clear();
        trace->bn_caches.clear();
        trace->bn_outputs.clear();
        trace->block_outputs.clear();
        trace->conv_inputs.resize(model.convs.size());
        trace->conv_outputs.resize(model.convs.size());
        trace->bn_caches.resize(model.bns.size());
        trace->bn_outputs.resize(model.bns.size());
        trace->block_outputs.resize(model.convs.size());
    }

    auto run_block = [&](std::size_t ci, const Tensor& in) -> Tensor {
        if (trace) trace->conv_inputs[ci] = in;
        Tensor conv_out = conv2d_forward(in, model.convs[ci]);
        if (ci < model.bns.size()) {
            BatchNormCache* cache = trace ? &trace->bn_caches[ci] : nullptr;
            Tensor bn_out = batchnorm_forward(conv_out, model.bns[ci], mode, cache);
            if (trace) {
                trace->conv_outputs[ci] = std::move(conv_out);
                trace->bn_outputs[ci] = bn_out;
            }
            Tensor act = relu(bn_out);
            if (trace) trace->block_outputs[ci] = act;
            return act;
        }
        Tensor act = relu(conv_out);
        if (trace) {
            trace->conv_outputs[ci] = std::move(conv_out);
            trace->block_outputs[ci] = act;
        }
        return act;
    };

    std::vector<Tensor> enc_outputs;
    Tensor cur = input;
    for (int i = 0; i < depth; ++i) {
        cur = run_block(static_cast<std::size_t>(i), cur);
        enc_outputs.push_back(cur);
    }

    cur = run_block(static_cast<std::size_t>(depth), cur);  // bottleneck, keeps resolution
    for (int i = 1; i < depth; ++i) {
        cur = upsample_nearest_2x(cur);
        cur = run_block(static_cast<std::size_t>(depth + i), cur);
        cur = concat_channels(cur, enc_outputs[static_cast<std::size_t>(depth - 1 - i)]);
    }
    cur = upsample_nearest_2x(cur);
    cur = run_block(model.convs.size() - 1, cur);
    return cur;
}

}  // namespace

Tensor unet_forward(UNetModel& model, const Tensor& input) {
    return forward_impl(model, input, nullptr);
}

Tensor unet_forward_trace(UNetModel& model, const Tensor& input, UNetTrace& trace) {
    return forward_impl(model, input, &trace);
}

UNetGradients unet_backward(UNetModel& model, const Tensor& input, const Tensor& target,
                            double* loss_out) {
    if (!model.train_mode) {
        throw std::invalid_argument("unet_backward: model must be in train mode");
    }
    const int depth = static_cast<int>(model.encoder_filters.size());

    UNetTrace trace;
    const Tensor pred = forward_impl(model, input, &trace);
    if (loss_out) *loss_out = mse_loss(pred, target);

    UNetGradients grads;
    grads.blocks.resize(4 * model.bns.size() + 2);

    auto grad_slot = [&](std::size_t ci) -> std::size_t { return 4 * ci; };

    // backward through one conv(+BN)+ReLU block; returns grad w.r.t. block input
    auto back_block = [&](std::size_t ci, const Tensor& grad_act) -> Tensor {
        const Tensor& pre_relu =
            (ci < model.bns.size()) ? trace.bn_outputs[ci] : trace.conv_outputs[ci];
        Tensor g = relu_backward(pre_relu, grad_act);
        Tensor grad_conv_out;
        if (ci < model.bns.size()) {
            std::vector<double> ggamma, gbeta;
            batchnorm_backward(model.bns[ci], trace.bn_caches[ci], g, grad_conv_out, ggamma,
                               gbeta);
            grads.blocks[grad_slot(ci) + 2] = std::move(ggamma);
            grads.blocks[grad_slot(ci) + 3] = std::move(gbeta);
        } else {
            grad_conv_out = std::move(g);
        }
        Tensor grad_in;
        std::vector<double> gw, gb;
        conv2d_backward(trace.conv_inputs[ci], model.convs[ci], grad_conv_out, grad_in, gw, gb);
        grads.blocks[grad_slot(ci)] = std::move(gw);
        grads.blocks[grad_slot(ci) + 1] = std::move(gb);
        return grad_in;
    };

    Tensor g = mse_loss_backward(pred, target);

    // final block: relu <- conv 1x1 <- upsample
    g = back_block(model.convs.size() - 1, g);
    g = upsample_nearest_2x_backward(g);

    // decoder blocks with skip concatenations
    std::vector<Tensor> skip_grads(static_cast<std::size_t>(depth));
    for (int i = depth - 1; i >= 1; --i) {
        const std::size_t ci = static_cast<std::size_t>(depth + i);
        Tensor g_dec, g_skip;
        concat_channels_backward(g, model.decoder_filters[static_cast<std::size_t>(i)], g_dec,
                                 g_skip);
        skip_grads[static_cast<std::size_t>(depth - 1 - i)] = std::move(g_skip);
        g = back_block(ci, g_dec);
        g = upsample_nearest_2x_backward(g);
    }
    g = back_block(static_cast<std::size_t>(depth), g);  // bottleneck

    // encoder blocks; outputs of all but the deepest also fed a skip
    for (int i = depth - 1; i >= 0; --i) {
        Tensor& extra = skip_grads[static_cast<std::size_t>(i)];
        if (!extra.data.empty()) {
            for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += extra.data[k];
        }
        g = back_block(static_cast<std::size_t>(i), g);
    }
    return grads;
}

AdamState make_adam_state(const UNetModel& model) {
    AdamState s;
    for (const auto* block : parameter_blocks(model)) {
        s.m.emplace_back(block->size(), 0.0);
        s.v.emplace_back(block->size(), 0.0);
    }
    return s;
}

void adam_step(UNetModel& model, const UNetGradients& grads, AdamState& state,
               const TrainConfig& config, double learning_rate) {
    auto blocks = parameter_blocks(model);
    if (blocks.size() != grads.blocks.size() || blocks.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: block count mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        auto& p = *blocks[bi];
        const auto& g = grads.blocks[bi];
        auto& m = state.m[bi];
        auto& v = state.v[bi];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
        }
    }
}

namespace {

Tensor assemble_batch(const TrainSet& ds, const std::vector<int>& idx, std::size_t start,
                      std::size_t count, bool clean) {
    Tensor t(static_cast<int>(count), 1, ds.height, ds.width);
    for (std::size_t b = 0; b < count; ++b) {
        const auto& ex = ds.examples[static_cast<std::size_t>(idx[start + b])];
        const auto& src = clean ? ex.clean : ex.noisy;
        std::copy(src.begin(), src.end(), t.plane(static_cast<int>(b), 0));
    }
    return t;
}

void fisher_yates(std::vector<int>& v, Prng& prng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(prng.next_u64() % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace

TrainResult train(UNetModel model, const TrainSet& dataset, const TrainConfig& config) {
    if (dataset.examples.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (config.validation_fraction <= 0.0 || config.validation_fraction >= 1.0) {
        throw std::invalid_argument("train: validation_fraction must be in (0, 1)");
    }

    const int n = static_cast<int>(dataset.examples.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Prng split_rng(mix_seed(config.seed, 17));
    fisher_yates(order, split_rng);

    const int val_count = std::max(1, static_cast<int>(std::floor(n * config.validation_fraction)));
    const int train_count = n - val_count;
    if (train_count < 2) {
        throw std::invalid_argument("train: dataset too small for a validation split");
    }
    std::vector<int> train_idx(order.begin(), order.begin() + train_count);
    std::vector<int> val_idx(order.begin() + train_count, order.end());

    AdamState adam = make_adam_state(model);
    double lr = config.learning_rate;
    int lr_wait = 0, stop_wait = 0;

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Prng epoch_rng(mix_seed(config.seed, 1000 + static_cast<uint64_t>(epoch)));
        fisher_yates(train_idx, epoch_rng);

        model.train_mode = true;
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min(static_cast<std::size_t>(config.batch_size), train_idx.size() - start);
            if (count < 2) break;  // batch statistics undefined
            const Tensor in = assemble_batch(dataset, train_idx, start, count, false);
            const Tensor tgt = assemble_batch(dataset, train_idx, start, count, true);
            double loss = 0.0;
            const UNetGradients grads = unet_backward(model, in, tgt, &loss);
            adam_step(model, grads, adam, config, lr);
            loss_sum += loss * static_cast<double>(count);
            seen += count;
        }
        const double train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;

        model.train_mode = false;
        double val_sum = 0.0;
        for (std::size_t start = 0; start < val_idx.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min(static_cast<std::size_t>(config.batch_size), val_idx.size() - start);
            const Tensor in = assemble_batch(dataset, val_idx, start, count, false);
            const Tensor tgt = assemble_batch(dataset, val_idx, start, count, true);
            val_sum += mse_loss(unet_forward(model, in), tgt) * static_cast<double>(count);
        }
        const double val_loss = val_sum / static_cast<double>(val_idx.size());

        result.history.push_back({epoch, train_loss, val_loss, lr});

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.best_model = model;
            lr_wait = 0;
            stop_wait = 0;
        } else {
            ++lr_wait;
            ++stop_wait;
            if (lr_wait >= config.lr_halving_patience) {
                lr *= 0.5;
                lr_wait = 0;
            }
            if (stop_wait >= config.early_stop_patience) break;
        }
    }
    result.best_model.train_mode = false;
    return result;
}

namespace {

constexpr char kModelMagic[] = "FSGCCUNET1";

void write_block(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) {
        throw std::runtime_error("load_model: truncated parameter data");
    }
}

}  // namespace

void save_model(const UNetModel& model, const std::string& path,
                const std::string& config_fingerprint) {
    nlohmann::json header;
    header["format_version"] = 1;
    header["encoder_filters"] = model.encoder_filters;
    header["decoder_filters"] = model.decoder_filters;
    header["kernel"] = {model.kh, model.kw};
    header["bn_epsilon"] = model.bns.empty() ? 1e-5 : model.bns.front().epsilon;
    header["bn_momentum"] = model.bns.empty() ? 0.1 : model.bns.front().momentum;
    header["config_fingerprint"] = config_fingerprint;
    header["param_count"] = count_trainable_parameters(model);
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_model: cannot open " + path);
    }
    out.write(kModelMagic, 10);
    const uint64_t len = header_str.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (std::size_t i = 0; i < model.convs.size(); ++i) {
        write_block(out, model.convs[i].weights);
        write_block(out, model.convs[i].bias);
        if (i < model.bns.size()) {
            write_block(out, model.bns[i].gamma);
            write_block(out, model.bns[i].beta);
            write_block(out, model.bns[i].running_mean);
            write_block(out, model.bns[i].running_var);
        }
    }
    if (!out) {
        throw std::runtime_error("save_model: write failed for " + path);
    }
}

UNetModel load_model(const std::string& path, std::string* config_fingerprint) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_model: cannot open " + path);
    }
    char magic[10];
    in.read(magic, 10);
    if (!in || std::memcmp(magic, kModelMagic, 10) != 0) {
        throw std::runtime_error("load_model: bad magic, not a model file");
    }
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len > (1u << 20)) {
        throw std::runtime_error("load_model: corrupt header length");
    }
    std::string header_str(len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(len));
    if (!in) {
        throw std::runtime_error("load_model: truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("load_model: header parse error: ") + e.what());
    }
    if (header.value("format_version", 0) != 1) {
        throw std::runtime_error("load_model: unsupported format version");
    }

    const std::vector<int> enc = header.at("encoder_filters").get<std::vector<int>>();
    const std::vector<int> dec = header.at("decoder_filters").get<std::vector<int>>();
    const std::vector<int> kernel = header.at("kernel").get<std::vector<int>>();
    if (kernel.size() != 2) {
        throw std::runtime_error("load_model: bad kernel descriptor");
    }
    UNetModel model = make_unet(enc, dec, 0, kernel[0], kernel[1]);
    for (auto& bn : model.bns) {
        bn.epsilon = header.value("bn_epsilon", 1e-5);
        bn.momentum = header.value("bn_momentum", 0.1);
    }
    if (header.value("param_count", std::int64_t(-1)) != count_trainable_parameters(model)) {
        throw std::runtime_error("load_model: parameter count does not match architecture");
    }
    if (config_fingerprint) {
        *config_fingerprint = header.value("config_fingerprint", "");
    }

    for (std::size_t i = 0; i < model.convs.size(); ++i) {
        read_block(in, model.convs[i].weights);
        read_block(in, model.convs[i].bias);
        if (i < model.bns.size()) {
            read_block(in, model.bns[i].gamma);
            read_block(in, model.bns[i].beta);
            read_block(in, model.bns[i].running_mean);
            read_block(in, model.bns[i].running_var);
        }
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw std::runtime_error("load_model: trailing bytes after parameter data");
    }
    return model;
}

}  // namespace fsgcc
