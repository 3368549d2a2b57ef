#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tac {

/// Dense row-major matrix of doubles. Used for probabilities, logits and
/// head parameters; embeddings live in EmbeddingMatrix (float storage).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dot product accumulated in double.
double dot(std::span<const float> a, std::span<const float> b);
double dot(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const float> v);
double l2_norm(std::span<const double> v);

/// Unit-norm copy of `v`. Throws NormalizationError for a zero or non-finite vector.
std::vector<float> l2_normalize(std::span<const float> v);
std::vector<double> l2_normalize(std::span<const double> v);

/// Cosine similarity; symmetric bit-for-bit. Throws DimensionError on size
/// mismatch and NormalizationError if either vector is zero.
double cosine_sim(std::span<const float> a, std::span<const float> b);
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// probs_j ∝ exp(scores_j / tau), max-subtracted. Throws ParameterError
/// when tau <= 0 or scores is empty.
std::vector<double> softmax_temp(std::span<const double> scores, double tau);

/// In-place unit-temperature softmax over one row.
void softmax_inplace(std::span<double> row);

}  // namespace tac
