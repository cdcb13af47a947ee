#include "dls/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dls {

namespace {

// max-subtraction stabilized softmax over `values`, written to `out`
void softmax_into(std::span<const double> values, std::span<double> out) {
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::exp(values[i] - m);
        sum += out[i];
    }
    for (std::size_t i = 0; i < values.size(); ++i) out[i] /= sum;
}

void check_nonempty(const FeatureMap& m) {
    if (m.channels == 0 || m.cells() == 0)
        throw std::invalid_argument("pooling: empty feature map");
}

}  // namespace

FeatureMap::FeatureMap(std::size_t k, std::size_t w, std::size_t h)
    : channels(k), width(w), height(h), data(k * w * h, 0.0f) {}

FeatureMap::FeatureMap(std::size_t k, std::size_t w, std::size_t h, std::vector<float> values)
    : channels(k), width(w), height(h), data(std::move(values)) {
    if (data.size() != k * w * h)
        throw std::invalid_argument("FeatureMap: data length " + std::to_string(data.size()) +
                                    " != K*W*H " + std::to_string(k * w * h));
}

Descriptor pool_max(const FeatureMap& m) {
    check_nonempty(m);
    Descriptor out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        out[k] = *std::max_element(ch.begin(), ch.end());
    }
    return out;
}

Descriptor pool_sum(const FeatureMap& m) {
    check_nonempty(m);
    Descriptor out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        out[k] = static_cast<float>(std::accumulate(ch.begin(), ch.end(), 0.0));
    }
    return out;
}

Descriptor pool_mean(const FeatureMap& m) {
    check_nonempty(m);
    Descriptor out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        out[k] = static_cast<float>(std::accumulate(ch.begin(), ch.end(), 0.0) /
                                    static_cast<double>(ch.size()));
    }
    return out;
}

Descriptor pool_gem(const FeatureMap& m, float p) {
    const std::vector<float> ps(m.channels, p);
    return pool_gem(m, ps);
}

Descriptor pool_gem(const FeatureMap& m, std::span<const float> p_per_channel) {
    check_nonempty(m);
    if (p_per_channel.size() != m.channels)
        throw std::invalid_argument("pool_gem: p vector length != channel count");
    for (float p : p_per_channel)
        if (!(p >= 1.0f)) throw std::invalid_argument("pool_gem: p must be >= 1");

    Descriptor out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const double p = p_per_channel[k];
        const auto ch = m.channel(k);
        double acc = 0.0;
        for (float y : ch) acc += std::pow(std::max(0.0, static_cast<double>(y)), p);
        out[k] = static_cast<float>(std::pow(acc / static_cast<double>(ch.size()), 1.0 / p));
    }
    return out;
}

std::vector<float> spatial_attention_map(const FeatureMap& m, SpatialAttentionMode mode) {
    check_nonempty(m);
    const std::size_t w = m.width, h = m.height, cells = m.cells();

    // w(i,j) = sum over channels
    std::vector<double> weight(cells, 0.0);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        for (std::size_t i = 0; i < cells; ++i) weight[i] += ch[i];
    }

    std::vector<double> row_sm(cells, 0.0), col_sm(cells, 0.0);
    if (mode != SpatialAttentionMode::column) {
        for (std::size_t r = 0; r < w; ++r)
            softmax_into({weight.data() + r * h, h}, {row_sm.data() + r * h, h});
    }
    if (mode != SpatialAttentionMode::row) {
        std::vector<double> column(w), sm(w);
        for (std::size_t c = 0; c < h; ++c) {
            for (std::size_t r = 0; r < w; ++r) column[r] = weight[r * h + c];
            softmax_into(column, sm);
            for (std::size_t r = 0; r < w; ++r) col_sm[r * h + c] = sm[r];
        }
    }

    std::vector<float> alpha(cells);
    switch (mode) {
        case SpatialAttentionMode::row:
            for (std::size_t i = 0; i < cells; ++i) alpha[i] = static_cast<float>(row_sm[i]);
            break;
        case SpatialAttentionMode::column:
            for (std::size_t i = 0; i < cells; ++i) alpha[i] = static_cast<float>(col_sm[i]);
            break;
        case SpatialAttentionMode::averaged:
            for (std::size_t i = 0; i < cells; ++i)
                alpha[i] = static_cast<float>((row_sm[i] + col_sm[i]) / (2.0 * static_cast<double>(w)));
            break;
    }
    return alpha;
}

Descriptor pool_spatial_attention(const FeatureMap& m, SpatialAttentionMode mode) {
    const std::vector<float> alpha = spatial_attention_map(m, mode);
    Descriptor out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        double acc = 0.0;
        for (std::size_t i = 0; i < ch.size(); ++i)
            acc += static_cast<double>(ch[i]) * static_cast<double>(alpha[i]);
        out[k] = static_cast<float>(acc / static_cast<double>(ch.size()));
    }
    return out;
}

std::vector<float> channel_attention_weights(const FeatureMap& m) {
    check_nonempty(m);
    std::vector<double> sums(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        sums[k] = std::accumulate(ch.begin(), ch.end(), 0.0);
    }
    std::vector<double> beta(m.channels);
    softmax_into(sums, beta);
    std::vector<float> out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) out[k] = static_cast<float>(beta[k]);
    return out;
}

Descriptor pool_channel_attention(const FeatureMap& m) {
    const std::vector<float> beta = channel_attention_weights(m);
    Descriptor out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        const double mean = std::accumulate(ch.begin(), ch.end(), 0.0) /
                            static_cast<double>(ch.size());
        out[k] = static_cast<float>(mean * static_cast<double>(beta[k]));
    }
    return out;
}

Descriptor pool_layernorm_mean(const FeatureMap& m, const LayerNormParams& params) {
    check_nonempty(m);
    if (params.gamma.size() != m.channels || params.beta.size() != m.channels)
        throw std::invalid_argument("pool_layernorm_mean: parameter length != channel count");

    std::vector<double> v(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k) {
        const auto ch = m.channel(k);
        const double mean = std::accumulate(ch.begin(), ch.end(), 0.0) /
                            static_cast<double>(ch.size());
        v[k] = 1.0 / (1.0 + std::exp(-mean));  // sigmoid
    }

    double mu = 0.0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mu) * (x - mu);
    var /= static_cast<double>(v.size());

    const double denom = std::sqrt(var + static_cast<double>(params.epsilon));
    Descriptor out(m.channels);
    for (std::size_t k = 0; k < m.channels; ++k)
        out[k] = static_cast<float>((v[k] - mu) / denom * params.gamma[k] + params.beta[k]);
    return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<VectorId> rank_by_cosine(std::span<const float> query, const VectorSet& corpus) {
    if (!corpus.empty() && query.size() != corpus.dim())
        throw std::invalid_argument("rank_by_cosine: query dim != corpus dim");
    std::vector<std::pair<double, VectorId>> scored(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        scored[i] = {cosine_similarity(query, corpus[i]), static_cast<VectorId>(i)};
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<VectorId> order(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) order[i] = scored[i].second;
    return order;
}

}  // namespace dls
