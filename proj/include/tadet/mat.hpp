// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tadet {

/// Dense row-major matrix. The one container every stage shares: float for
/// on-disk feature/score payloads, double for all training math.
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("Mat: negative dimensions");
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    T* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const T* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool operator==(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using MatD = Mat<double>;
using MatF = Mat<float>;

}  // namespace tadet
