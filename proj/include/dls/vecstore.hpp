#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dls {

using VectorId = std::uint64_t;

// Contiguous row-major N x d matrix of 32-bit floats. Immutable once loaded;
// rows are handed out as zero-copy views.
class VectorSet {
public:
    VectorSet() = default;
    VectorSet(std::size_t count, std::size_t dim);
    VectorSet(std::size_t count, std::size_t dim, std::vector<float> data);

    std::size_t size() const { return count_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return count_ == 0; }

    // unchecked row view
    std::span<const float> operator[](std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    // checked row view; throws std::out_of_range
    std::span<const float> at(VectorId id) const;

    std::span<float> row_mut(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
    const float* data() const { return data_.data(); }

private:
    std::size_t count_{0};
    std::size_t dim_{0};
    std::vector<float> data_;
};

// True (non-squared) Euclidean distance. Inputs are f32 views; accumulation
// is done in f64. Throws std::invalid_argument on dimension mismatch.
float distance(std::span<const float> a, std::span<const float> b);

}  // namespace dls
