#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsgcc/tensor.hpp"

namespace fsgcc {

struct ConvLayerParams {
    int in_ch = 0, out_ch = 0;
    int kh = 10, kw = 5;
    int stride = 1;  // same stride on both axes
    std::vector<double> weights;  // (out_ch, in_ch, kh, kw) row-major
    std::vector<double> bias;     // (out_ch)
};

struct BatchNormParams {
    int channels = 0;
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    double epsilon = 1e-5;
    double momentum = 0.1;
};

// "same" zero padding: stride-2 layers halve each spatial dim exactly, the
// odd remainder goes to the high-index edge.
void same_padding(int size, int kernel, int stride, int& before, int& after);

Tensor conv2d_forward(const Tensor& input, const ConvLayerParams& params);

void conv2d_backward(const Tensor& input, const ConvLayerParams& params, const Tensor& grad_out,
                     Tensor& grad_input, std::vector<double>& grad_weights,
                     std::vector<double>& grad_bias);

struct BatchNormCache {
    Tensor xhat;
    std::vector<double> inv_std;  // per channel
};

enum class BnMode { Train, Inference };

// Train mode normalizes with per-batch statistics (biased variance) and
// updates running statistics; inference mode uses the stored running stats.
Tensor batchnorm_forward(const Tensor& input, BatchNormParams& params, BnMode mode,
                         BatchNormCache* cache = nullptr);

void batchnorm_backward(const BatchNormParams& params, const BatchNormCache& cache,
                        const Tensor& grad_out, Tensor& grad_input,
                        std::vector<double>& grad_gamma, std::vector<double>& grad_beta);

// Encoder/decoder autoencoder with skip concatenations. Encoder blocks are
// stride-2 conv + BN + ReLU. The first decoder block keeps the bottleneck
// resolution; every later decoder conv is preceded by nearest-neighbor 2x
// upsampling, and its output is concatenated with the matching encoder
// output. The final block upsamples and applies a 1x1 conv (no BN).
struct UNetModel {
    std::vector<int> encoder_filters{8, 16, 32, 64};
    std::vector<int> decoder_filters{64, 32, 16, 8};
    int kh = 10, kw = 5;
    std::vector<ConvLayerParams> convs;  // encoders, decoders, final 1x1
    std::vector<BatchNormParams> bns;    // one per conv except the final
    bool train_mode = false;
};

UNetModel make_unet(const std::vector<int>& encoder_filters,
                    const std::vector<int>& decoder_filters, uint64_t seed, int kh = 10,
                    int kw = 5);

std::int64_t count_trainable_parameters(const UNetModel& model);

// Ordered list of the trainable parameter blocks (conv weights/bias and BN
// gamma/beta, in layer order); shared by the optimizer and the model file.
std::vector<std::vector<double>*> parameter_blocks(UNetModel& model);
std::vector<const std::vector<double>*> parameter_blocks(const UNetModel& model);

struct UNetTrace;  // opaque activation cache

Tensor unet_forward(UNetModel& model, const Tensor& input);
Tensor unet_forward_trace(UNetModel& model, const Tensor& input, UNetTrace& trace);

struct UNetGradients {
    std::vector<std::vector<double>> blocks;  // parameter_blocks order
};

// Gradient of mse_loss(forward(input), target) w.r.t. every parameter.
// Requires train mode.
UNetGradients unet_backward(UNetModel& model, const Tensor& input, const Tensor& target,
                            double* loss_out = nullptr);

struct UNetTrace {
    std::vector<Tensor> conv_inputs;   // input of each conv, in layer order
    std::vector<Tensor> conv_outputs;  // pre-BN conv outputs
    std::vector<BatchNormCache> bn_caches;
    std::vector<Tensor> bn_outputs;    // pre-ReLU
    std::vector<Tensor> block_outputs; // post-activation output of each block
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_epochs = 17;
    int early_stop_patience = 10;
    int lr_halving_patience = 3;
    double validation_fraction = 0.2;
    int batch_size = 16;
    uint64_t seed = 42;
};

struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::int64_t step = 0;
};

AdamState make_adam_state(const UNetModel& model);

// Standard first/second moment update with bias correction.
void adam_step(UNetModel& model, const UNetGradients& grads, AdamState& state,
               const TrainConfig& config, double learning_rate);

struct TrainExample {
    std::vector<double> noisy;  // h*w, row-major
    std::vector<double> clean;
};

struct TrainSet {
    int height = 0, width = 0;
    std::vector<TrainExample> examples;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    UNetModel best_model;
    std::vector<EpochStats> history;
    double best_val_loss = 0.0;
    int best_epoch = 0;
};

// Deterministic seeded 80/20 split, Adam updates, learning-rate halving after
// lr_halving_patience non-improving epochs, early stop after
// early_stop_patience; returns the best-validation snapshot.
TrainResult train(UNetModel model, const TrainSet& dataset, const TrainConfig& config);

// Model file: magic "FSGCCUNET1", little-endian u64 header length, JSON
// header (architecture, batch-norm settings, config fingerprint), then raw
// little-endian f64 parameter blocks in declaration order (conv weights,
// bias, BN gamma, beta, running mean, running var per layer).
void save_model(const UNetModel& model, const std::string& path,
                const std::string& config_fingerprint = "");
UNetModel load_model(const std::string& path, std::string* config_fingerprint = nullptr);

}  // namespace fsgcc
