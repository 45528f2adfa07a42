#pragma once

#include <cstdint>
#include <vector>

#include "w4a16/errors.hpp"
#include "w4a16/numerics.hpp"

namespace w4a16 {

// Row-major matrix of binary16 codes.
struct Fp16Matrix {
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<F16> data;  // rows * cols

    Fp16Matrix() = default;
    Fp16Matrix(uint32_t r, uint32_t c) : rows(r), cols(c), data(static_cast<size_t>(r) * c) {}

    F16& at(uint32_t r, uint32_t c) { return data[static_cast<size_t>(r) * cols + c]; }
    F16 at(uint32_t r, uint32_t c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Fp16Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Row-major matrix of binary32 values (split-buffer / accumulator storage).
struct Fp32Matrix {
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<float> data;

    Fp32Matrix() = default;
    Fp32Matrix(uint32_t r, uint32_t c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0f) {}

    float& at(uint32_t r, uint32_t c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(uint32_t r, uint32_t c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
};

}  // namespace w4a16
