#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dls/vecstore.hpp"

namespace dls {

// K x W x H activation tensor, channel-major; each channel is a W-row by
// H-column matrix stored row-major. Loaders reject non-finite values.
struct FeatureMap {
    std::size_t channels{0};
    std::size_t width{0};
    std::size_t height{0};
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(std::size_t k, std::size_t w, std::size_t h);
    FeatureMap(std::size_t k, std::size_t w, std::size_t h, std::vector<float> values);

    std::span<const float> channel(std::size_t k) const {
        return {data.data() + k * width * height, width * height};
    }
    std::span<float> channel_mut(std::size_t k) {
        return {data.data() + k * width * height, width * height};
    }
    float at(std::size_t k, std::size_t row, std::size_t col) const {
        return data[k * width * height + row * height + col];
    }
    std::size_t cells() const { return width * height; }
};

using Descriptor = std::vector<float>;

struct LayerNormParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    float epsilon{1e-6f};
};

enum class SpatialAttentionMode { averaged, row, column };

Descriptor pool_max(const FeatureMap& m);
Descriptor pool_sum(const FeatureMap& m);
Descriptor pool_mean(const FeatureMap& m);

// Power mean over spatial activations: ((1/|x_k|) * sum y^p)^(1/p), inputs
// clamped at 0 first. Throws std::invalid_argument for p < 1.
Descriptor pool_gem(const FeatureMap& m, float p = 2.0f);
Descriptor pool_gem(const FeatureMap& m, std::span<const float> p_per_channel);

// Spatial weight map used by pool_spatial_attention.
//
// Two independent softmaxes cannot make every row and every column of a
// single matrix sum to 1 at once, so the default combines them:
//   alpha = (rowSoftmax(w) + colSoftmax(w)) / (2 * W)
// which has total mass (W + H) / (2W), exactly 1 for square maps. The pure
// row-wise (each row sums to 1) and column-wise (each column sums to 1)
// variants are available as modes.
std::vector<float> spatial_attention_map(const FeatureMap& m,
                                         SpatialAttentionMode mode = SpatialAttentionMode::averaged);
Descriptor pool_spatial_attention(const FeatureMap& m,
                                  SpatialAttentionMode mode = SpatialAttentionMode::averaged);

// Per-channel softmax weights: beta = softmax_k(sum of channel k).
std::vector<float> channel_attention_weights(const FeatureMap& m);
Descriptor pool_channel_attention(const FeatureMap& m);

// mean-pool, elementwise sigmoid, then LayerNorm over the K-vector using the
// supplied gamma/beta. Throws on parameter length mismatch.
Descriptor pool_layernorm_mean(const FeatureMap& m, const LayerNormParams& params);

// Ranks corpus rows by descending cosine similarity to the query descriptor;
// ties broken by smaller id. Zero-norm vectors score 0.
std::vector<VectorId> rank_by_cosine(std::span<const float> query, const VectorSet& corpus);
double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace dls
