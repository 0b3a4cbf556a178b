#include "toffee/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "toffee/parallel.hpp"

namespace toffee {

namespace {

constexpr double kIfftImagResidueTrip = 1e-6;

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// In-place batched 1-D DFT over all mode-3 fibers of a slice-major complex
// buffer. sign is FFTW_FORWARD or FFTW_BACKWARD (both unnormalized).
// FFTW_UNALIGNED keeps the chosen plan independent of buffer addresses, so a
// fixed input always takes the same code path.
void dft_mode3_inplace(std::vector<Complex>& buf, std::size_t fibers, std::size_t n3,
                       int sign) {
    if (n3 == 1) return;  // length-1 DFT is the identity
    const int n = static_cast<int>(n3);
    auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_many_dft(1, &n, static_cast<int>(fibers), raw, nullptr,
                                  static_cast<int>(fibers), 1, raw, nullptr,
                                  static_cast<int>(fibers), 1, sign,
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (plan == nullptr) throw Error("fftw plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

void check_tproduct_dims(const RealTensor3& a, const RealTensor3& b) {
    if (a.n2() != b.n1())
        throw DimMismatch("t-product inner dimensions disagree: " +
                          std::to_string(a.n2()) + " vs " + std::to_string(b.n1()));
    if (a.n3() != b.n3())
        throw DimMismatch("t-product tube lengths disagree: " + std::to_string(a.n3()) +
                          " vs " + std::to_string(b.n3()));
}

}  // namespace

RealTensor3 RealTensor3::from_data(std::size_t n1, std::size_t n2, std::size_t n3,
                                   std::vector<double> data) {
    if (data.size() != n1 * n2 * n3)
        throw DimMismatch("data length " + std::to_string(data.size()) +
                          " does not match dims " + std::to_string(n1) + "x" +
                          std::to_string(n2) + "x" + std::to_string(n3));
    RealTensor3 t(n1, n2, n3);
    t.data_ = std::move(data);
    t.require_finite("from_data");
    return t;
}

void RealTensor3::require_finite(const char* context) const {
    for (double v : data_) {
        if (!std::isfinite(v))
            throw Error(std::string(context) + ": tensor contains a non-finite entry");
    }
}

FourierStack fft_mode3(const RealTensor3& x) {
    const std::size_t n1 = x.n1(), n2 = x.n2(), n3 = x.n3();
    const std::size_t fibers = n1 * n2;

    std::vector<Complex> buf(fibers * n3);
    for (std::size_t p = 0; p < buf.size(); ++p) buf[p] = Complex(x.data()[p], 0.0);
    dft_mode3_inplace(buf, fibers, n3, FFTW_FORWARD);

    FourierStack f(n1, n2, n3);
    for (std::size_t k = 0; k < n3; ++k) {
        Eigen::MatrixXcd& s = f.slice(k);
        const Complex* base = buf.data() + k * fibers;
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    base[i * n2 + j];
    }
    return f;
}

RealTensor3 ifft_mode3(const FourierStack& f) {
    return detail::ifft_mode3_measured(f, nullptr);
}

RealTensor3 detail::ifft_mode3_measured(const FourierStack& f, double* imag_residue) {
    const std::size_t n1 = f.n1(), n2 = f.n2(), n3 = f.n3();
    const std::size_t fibers = n1 * n2;

    std::vector<Complex> buf(fibers * n3);
    for (std::size_t k = 0; k < n3; ++k) {
        const Eigen::MatrixXcd& s = f.slice(k);
        Complex* base = buf.data() + k * fibers;
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                base[i * n2 + j] =
                    s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    dft_mode3_inplace(buf, fibers, n3, FFTW_BACKWARD);

    const double scale = 1.0 / static_cast<double>(n3);
    double real_sq = 0.0, imag_sq = 0.0;
    RealTensor3 out(n1, n2, n3);
    for (std::size_t p = 0; p < buf.size(); ++p) {
        const double re = buf[p].real() * scale;
        const double im = buf[p].imag() * scale;
        real_sq += re * re;
        imag_sq += im * im;
        out.data()[p] = re;
    }

    const double real_norm = std::sqrt(real_sq);
    const double imag_norm = std::sqrt(imag_sq);
    if (imag_residue != nullptr)
        *imag_residue = (real_norm == 0.0 && imag_norm == 0.0) ? 0.0 : imag_norm / real_norm;
    if (imag_norm > kIfftImagResidueTrip * real_norm || !std::isfinite(imag_norm)) {
        throw SymmetryViolation(
            "inverse transform left an imaginary residue of " + std::to_string(imag_norm) +
            " against a real norm of " + std::to_string(real_norm) +
            "; the stack is not conjugate-symmetric");
    }
    out.require_finite("ifft_mode3");
    return out;
}

RealTensor3 tproduct(const RealTensor3& a, const RealTensor3& b) {
    check_tproduct_dims(a, b);
    const FourierStack fa = fft_mode3(a);
    const FourierStack fb = fft_mode3(b);

    FourierStack fc(a.n1(), b.n2(), a.n3());
    parallel_for(a.n3(), [&](std::size_t k) { fc.slice(k) = fa.slice(k) * fb.slice(k); });
    return ifft_mode3(fc);
}

RealTensor3 tproduct_direct(const RealTensor3& a, const RealTensor3& b) {
    check_tproduct_dims(a, b);
    const std::size_t n1 = a.n1(), n2 = a.n2(), n4 = b.n2(), n3 = a.n3();

    RealTensor3 c(n1, n4, n3);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n4; ++j) {
            for (std::size_t t = 0; t < n3; ++t) {
                double sum = 0.0;
                for (std::size_t k = 0; k < n2; ++k) {
                    // circular convolution of tubes a(i,k,:) and b(k,j,:)
                    for (std::size_t s = 0; s < n3; ++s) {
                        const std::size_t shifted = (t + n3 - s) % n3;
                        sum += a(i, k, s) * b(k, j, shifted);
                    }
                }
                c(i, j, t) = sum;
            }
        }
    }
    return c;
}

RealTensor3 ttranspose(const RealTensor3& a) {
    const std::size_t n1 = a.n1(), n2 = a.n2(), n3 = a.n3();
    RealTensor3 b(n2, n1, n3);
    for (std::size_t k = 0; k < n3; ++k) {
        const std::size_t src = (k == 0) ? 0 : n3 - k;
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) b(j, i, k) = a(i, j, src);
    }
    return b;
}

double frob_norm_sq(const RealTensor3& a) {
    double sum = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
        const double v = a.data()[p];
        sum += v * v;
    }
    return sum;
}

RealTensor3 identity_tensor(std::size_t n, std::size_t n3) {
    RealTensor3 t(n, n, n3);
    for (std::size_t i = 0; i < n; ++i) t(i, i, 0) = 1.0;
    return t;
}

double max_conjugate_asymmetry(const FourierStack& f) {
    const std::size_t n3 = f.n3();
    double max_abs = 0.0;
    for (std::size_t k = 0; k < n3; ++k)
        max_abs = std::max(max_abs, f.slice(k).cwiseAbs().maxCoeff());
    if (max_abs == 0.0) return 0.0;

    double worst = 0.0;
    for (std::size_t k = 1; k < n3; ++k) {
        const std::size_t m = n3 - k;
        if (m < k) break;
        const double diff = (f.slice(k) - f.slice(m).conjugate()).cwiseAbs().maxCoeff();
        worst = std::max(worst, diff);
    }
    return worst / max_abs;
}

}  // namespace toffee
