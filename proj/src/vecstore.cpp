#include "dls/vecstore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dls {

VectorSet::VectorSet(std::size_t count, std::size_t dim)
    : count_(count), dim_(dim), data_(count * dim, 0.0f) {
    if (dim == 0) throw std::invalid_argument("VectorSet: dim must be >= 1");
}

VectorSet::VectorSet(std::size_t count, std::size_t dim, std::vector<float> data)
    : count_(count), dim_(dim), data_(std::move(data)) {
    if (dim == 0) throw std::invalid_argument("VectorSet: dim must be >= 1");
    if (data_.size() != count * dim)
        throw std::invalid_argument("VectorSet: data length " + std::to_string(data_.size()) +
                                    " != count*dim " + std::to_string(count * dim));
}

std::span<const float> VectorSet::at(VectorId id) const {
    if (id >= count_)
        throw std::out_of_range("VectorSet: id " + std::to_string(id) + " out of range [0, " +
                                std::to_string(count_) + ")");
    return (*this)[static_cast<std::size_t>(id)];
}

float distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("distance: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += diff * diff;
    }
    return static_cast<float>(std::sqrt(acc));
}

}  // namespace dls
