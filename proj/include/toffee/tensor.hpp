#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "toffee/errors.hpp"

namespace toffee {

using Complex = std::complex<double>;

// Row-major matrix view over a frontal slice of a RealTensor3.
using SliceMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstSliceMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// A mode-3 fiber: the vector circular convolution acts on.
struct Tube {
    std::vector<double> values;
    std::size_t length() const { return values.size(); }
};

/// Dense real third-order tensor of shape n1 x n2 x n3 in slice-major layout:
/// entry (i, j, k) lives at data()[k*n1*n2 + i*n2 + j], so each frontal slice
/// is a contiguous row-major matrix. Values are immutable once a tensor has
/// been handed to an operation; every operation here is a pure function.
class RealTensor3 {
public:
    RealTensor3() = default;

    RealTensor3(std::size_t n1, std::size_t n2, std::size_t n3, double fill = 0.0)
        : n1_(n1), n2_(n2), n3_(n3), data_(n1 * n2 * n3, fill) {
        if (n1 == 0 || n2 == 0 || n3 == 0)
            throw DimMismatch("tensor dimensions must be positive");
    }

    static RealTensor3 from_data(std::size_t n1, std::size_t n2, std::size_t n3,
                                 std::vector<double> data);

    std::size_t n1() const { return n1_; }
    std::size_t n2() const { return n2_; }
    std::size_t n3() const { return n3_; }
    std::size_t size() const { return data_.size(); }

    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[k * n1_ * n2_ + i * n2_ + j];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[k * n1_ * n2_ + i * n2_ + j];
    }

    const double* data() const { return data_.data(); }
    double* data() { return data_.data(); }
    const std::vector<double>& storage() const { return data_; }

    SliceMap slice(std::size_t k) {
        return SliceMap(data_.data() + k * n1_ * n2_, static_cast<Eigen::Index>(n1_),
                        static_cast<Eigen::Index>(n2_));
    }
    ConstSliceMap slice(std::size_t k) const {
        return ConstSliceMap(data_.data() + k * n1_ * n2_, static_cast<Eigen::Index>(n1_),
                             static_cast<Eigen::Index>(n2_));
    }

    Tube tube(std::size_t i, std::size_t j) const {
        Tube t;
        t.values.resize(n3_);
        for (std::size_t k = 0; k < n3_; ++k) t.values[k] = (*this)(i, j, k);
        return t;
    }

    bool same_dims(const RealTensor3& o) const {
        return n1_ == o.n1_ && n2_ == o.n2_ && n3_ == o.n3_;
    }

    // Throws if any entry is NaN or infinite.
    void require_finite(const char* context) const;

private:
    std::size_t n1_ = 0, n2_ = 0, n3_ = 0;
    std::vector<double> data_;
};

/// Mode-3 Fourier image of a tensor: n3 dense complex n1 x n2 matrices, the
/// diagonal blocks of the block-diagonal form. Stacks produced from real
/// tensors are conjugate-symmetric across mirrored frequencies.
class FourierStack {
public:
    FourierStack() = default;

    FourierStack(std::size_t n1, std::size_t n2, std::size_t n3)
        : n1_(n1), n2_(n2), n3_(n3),
          slices_(n3, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n1),
                                             static_cast<Eigen::Index>(n2))) {
        if (n1 == 0 || n2 == 0 || n3 == 0)
            throw DimMismatch("stack dimensions must be positive");
    }

    std::size_t n1() const { return n1_; }
    std::size_t n2() const { return n2_; }
    std::size_t n3() const { return n3_; }

    Eigen::MatrixXcd& slice(std::size_t k) { return slices_[k]; }
    const Eigen::MatrixXcd& slice(std::size_t k) const { return slices_[k]; }

private:
    std::size_t n1_ = 0, n2_ = 0, n3_ = 0;
    std::vector<Eigen::MatrixXcd> slices_;
};

// Unnormalized forward DFT applied independently to every mode-3 fiber.
FourierStack fft_mode3(const RealTensor3& x);

// Inverse of fft_mode3 (1/n3 normalization). Discards the sub-tolerance
// imaginary residue; throws SymmetryViolation when the residue exceeds 1e-6
// relative to the real Frobenius norm, which indicates the stack was not
// conjugate-symmetric (a solver bug upstream).
RealTensor3 ifft_mode3(const FourierStack& f);

// t-product: Fourier-domain slice-wise matrix products. a: n1 x n2 x n3,
// b: n2 x n4 x n3 -> n1 x n4 x n3.
RealTensor3 tproduct(const RealTensor3& a, const RealTensor3& b);

// Literal tube-summation definition of the t-product (sums of circular
// convolutions). Quadratic in n3; intended for small inputs and kept as the
// test oracle for tproduct.
RealTensor3 tproduct_direct(const RealTensor3& a, const RealTensor3& b);

// t-transpose: transposes each frontal slice and reverses the order of
// slices 2..n3, so the Fourier image becomes the slice-wise conjugate
// transpose.
RealTensor3 ttranspose(const RealTensor3& a);

// Sum of squared entries.
double frob_norm_sq(const RealTensor3& a);

// Identity element of the t-product: first frontal slice I_n, rest zero.
RealTensor3 identity_tensor(std::size_t n, std::size_t n3);

// Largest absolute mismatch between slice k and conj(slice n3-k) over all
// mirrored pairs, scaled by the largest absolute entry of the stack.
// Zero-norm stacks report zero.
double max_conjugate_asymmetry(const FourierStack& f);

namespace detail {

// ifft_mode3 with the discarded imaginary residue reported through
// *imag_residue (Frobenius norm of imaginary parts relative to the real
// Frobenius norm). Same 1e-6 trip as the public entry point.
RealTensor3 ifft_mode3_measured(const FourierStack& f, double* imag_residue);

}  // namespace detail

}  // namespace toffee
