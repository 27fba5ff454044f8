#ifndef PROPNET_NNCORE_ARRAY_HPP
#define PROPNET_NNCORE_ARRAY_HPP

#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "propnet/common.hpp"

namespace propnet::nncore {

// Dense row-major float64 array. 1-D and 2-D shapes cover everything in this
// project; the shape vector stays general so checkpoints can round-trip
// whatever they are handed.
struct NumArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    NumArray() = default;

    NumArray(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw_error(ErrorKind::Dimension,
                        "NumArray: shape " + shape_string(shape) + " does not match data length " +
                            std::to_string(data.size()));
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    static std::string shape_string(const std::vector<std::size_t>& s) {
        std::ostringstream out;
        out << "[";
        for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "x" : "") << s[i];
        out << "]";
        return out.str();
    }

    static NumArray zeros(std::vector<std::size_t> s) {
        std::size_t n = numel_of(s);
        return NumArray(std::move(s), std::vector<double>(n, 0.0));
    }

    static NumArray full(std::vector<std::size_t> s, double v) {
        std::size_t n = numel_of(s);
        return NumArray(std::move(s), std::vector<double>(n, v));
    }

    static NumArray vector(std::vector<double> d) {
        std::size_t n = d.size();
        return NumArray({n}, std::move(d));
    }

    static NumArray matrix(std::size_t r, std::size_t c, std::vector<double> d) {
        return NumArray({r, c}, std::move(d));
    }

    std::size_t numel() const { return data.size(); }
    bool is_vector() const { return shape.size() == 1; }
    bool is_matrix() const { return shape.size() == 2; }

    std::size_t rows() const {
        if (shape.size() == 1) return 1;
        require_matrix("rows()");
        return shape[0];
    }
    std::size_t cols() const {
        if (shape.size() == 1) return shape[0];
        require_matrix("cols()");
        return shape[1];
    }

    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const NumArray& other) const { return shape == other.shape; }

    std::string shape_str() const { return shape_string(shape); }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    void require_matrix(const char* what) const {
        if (shape.size() != 2)
            throw_error(ErrorKind::Dimension, std::string(what) + " requires a 2-D array, got " + shape_str());
    }
};

inline void require_same_shape(const NumArray& a, const NumArray& b, const char* op) {
    if (!a.same_shape(b))
        throw_error(ErrorKind::Dimension,
                    std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

// Fills with uniform draws in [lo, hi] from the given stream.
inline NumArray random_uniform(std::vector<std::size_t> shape, double lo, double hi, Rng& rng) {
    NumArray out = NumArray::zeros(std::move(shape));
    for (double& v : out.data) v = rng.uniform(lo, hi);
    return out;
}

}  // namespace propnet::nncore

#endif  // PROPNET_NNCORE_ARRAY_HPP
