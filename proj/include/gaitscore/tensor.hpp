#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gaitscore {

/// Dense rank-1..3 float32 array, row-major. The universal numeric currency:
/// segments, weights, embeddings and gradients are all Tensors.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, float value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Rank-checked element access; rows are contiguous.
    float& at(std::size_t i) { return data_[i]; }
    float at(std::size_t i) const { return data_[i]; }
    float& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    float at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    float& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    float at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    float* row(std::size_t i) { return data_.data() + i * row_stride(); }
    const float* row(std::size_t i) const { return data_.data() + i * row_stride(); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(float value);

    std::string shape_str() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::size_t row_stride() const {
        std::size_t s = 1;
        for (std::size_t i = 1; i < shape_.size(); ++i) s *= shape_[i];
        return s;
    }

    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

/// "32x51" style rendering for diagnostics.
std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace gaitscore
