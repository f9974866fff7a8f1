#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "qflag/error.hpp"

namespace qflag {

/// Dense row-major real matrix.
struct RealMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    RealMatrix& operator+=(const RealMatrix& o) {
        if (o.rows != rows || o.cols != cols) throw DimensionError("RealMatrix: shape mismatch");
        for (std::size_t p = 0; p < data.size(); ++p) data[p] += o.data[p];
        return *this;
    }

    friend bool operator==(const RealMatrix&, const RealMatrix&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const RealMatrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) os << (j ? " " : "") << m(i, j);
        os << '\n';
    }
    return os;
}

}  // namespace qflag
