#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toffee/graph.hpp"
#include "toffee/tensor.hpp"

namespace toffee {

enum class Method { kToffee, kRescal, kTsvd };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct ToffeeConfig {
    std::size_t rank = 8;
    double lambda_A = 0.0;
    double lambda_R = 0.0;
    std::size_t max_iters = 500;
    double rel_tol = 1e-4;
    std::uint64_t seed = 0;
};

/// A fitted model. A has shape n x r x T (T = 1 for RESCAL's shared factor),
/// R has shape r x r x T. For t-SVD, A holds U_r, R holds the f-diagonal S_r
/// and V keeps the right factor for reconstruction checks.
struct Factorization {
    Method method = Method::kToffee;
    RealTensor3 A;
    RealTensor3 R;
    std::optional<RealTensor3> V;
    std::vector<double> objective_trace;
    std::size_t iterations_run = 0;
    ToffeeConfig config;
};

/// Fits the circular-convolution factorization X ~ A * R * t-transpose(A) by
/// per-Fourier-slice alternating least squares. Only the first ceil((T+1)/2)
/// frequencies are solved; the rest are conjugate mirrors, which keeps the
/// recovered factors real.
Factorization toffee_fit(const AdjacencyTensor& x, const ToffeeConfig& cfg);

/// RESCAL baseline: one shared real node factor A (n x r) and per-slice
/// interaction matrices R^(k), alternating the summed ASALSAN A-step with the
/// exact per-slice ridge R-step.
Factorization rescal_fit(const AdjacencyTensor& x, const ToffeeConfig& cfg);

/// Truncated slice-wise SVD in the Fourier domain.
Factorization tsvd(const AdjacencyTensor& x, std::size_t rank);

/// One ASALSAN step on a single Fourier slice: returns
/// (X A R^H + X^H A R) (R A^H A R^H + R^H A^H A R + lambda I)^{-1},
/// solved as a linear system. The right-hand copy of A stays frozen, so this
/// step carries no monotonicity guarantee.
Eigen::MatrixXcd update_A_slice(const Eigen::MatrixXcd& Xf, const Eigen::MatrixXcd& Af,
                                const Eigen::MatrixXcd& Rf, double lambda_A);

/// Exact minimizer of ||Xf - Af Rf Af^H||_F^2 + lambda ||Rf||_F^2 over Rf,
/// via the eigendecomposition of Af^H Af. Equivalent to the vectorized
/// normal-equations solve without ever materializing a Kronecker product.
Eigen::MatrixXcd update_R_slice(const Eigen::MatrixXcd& Xf, const Eigen::MatrixXcd& Af,
                                double lambda_R);

/// Evaluates 1/2 ||X - reconstruction||_F^2 + lambda_A/2 ||A||_F^2 +
/// lambda_R/2 ||R||_F^2 in the temporal domain via t-products.
double objective(const AdjacencyTensor& x, const Factorization& f);

namespace detail {

enum class Spectrum { kHalf, kFull };

struct FitStats {
    double setup_seconds = 0.0;
    double loop_seconds = 0.0;
    std::size_t iterations = 0;
    // Imaginary residue discarded when transforming the solved Fourier
    // factors back to the temporal domain.
    double imag_residue_A = 0.0;
    double imag_residue_R = 0.0;
};

// toffee_fit with an explicit choice between solving the half spectrum and
// mirroring (production) or solving all T frequencies independently (used to
// assert the two agree). stats, when given, receives wall-clock timings.
Factorization toffee_fit_spectrum(const AdjacencyTensor& x, const ToffeeConfig& cfg,
                                  Spectrum spectrum, FitStats* stats = nullptr);

// Real-arithmetic twin of update_R_slice, used by rescal_fit.
Eigen::MatrixXd update_R_slice_real(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                                    double lambda_R);

// Entrywise uniform [0, 1) tensor from the seeded generator, filled in
// slice-major order. Shared by toffee_fit and rescal_fit so that T = 1 runs
// start from identical values.
RealTensor3 init_factor_uniform(std::uint64_t seed, std::size_t n1, std::size_t n2,
                                std::size_t n3);

// Number of frequencies that must be solved explicitly: ceil((T+1)/2).
std::size_t half_spectrum_count(std::size_t T);

// Fourier-domain evaluation of the objective (Parseval route); the weights
// account for mirrored slices that are not stored.
double objective_fourier(const std::vector<Eigen::MatrixXcd>& Xf,
                         const std::vector<Eigen::MatrixXcd>& Af,
                         const std::vector<Eigen::MatrixXcd>& Rf,
                         const std::vector<double>& weights, std::size_t T,
                         double lambda_A, double lambda_R);

}  // namespace detail

}  // namespace toffee
