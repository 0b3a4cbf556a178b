#include "toffee/factorize.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "toffee/parallel.hpp"
#include "toffee/rng.hpp"

namespace toffee {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Solves M * Y = B with partial pivoting and reports numerically singular
// systems instead of silently regularizing them.
template <typename Matrix>
Matrix solve_checked(const Matrix& M, const Matrix& B, const std::string& context) {
    Eigen::PartialPivLU<Matrix> lu(M);
    const auto diag = lu.matrixLU().diagonal().cwiseAbs().eval();
    const double dmax = diag.maxCoeff();
    const double dmin = diag.minCoeff();
    const double floor = static_cast<double>(M.rows()) *
                         std::numeric_limits<double>::epsilon() * dmax;
    if (dmax == 0.0 || dmin <= floor)
        throw SingularSolve("numerically singular system in " + context);
    return lu.solve(B);
}

// Shared eigendecomposition route for the exact ridge R-step; Scalar is
// double or complex<double>.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ridge_r_step(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A, double lambda) {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (X.rows() != X.cols()) throw DimMismatch("R-step needs a square data slice");
    if (A.rows() != X.rows()) throw DimMismatch("R-step factor and data rows disagree");

    const Matrix G = A.adjoint() * A;
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    if (es.info() != Eigen::Success)
        throw SingularSolve("eigendecomposition of the Gram matrix failed");
    const VectorXd evals = es.eigenvalues();
    const Matrix& Q = es.eigenvectors();

    const double emax = evals.cwiseAbs().maxCoeff();
    if (lambda == 0.0) {
        const double floor = static_cast<double>(evals.size()) *
                             std::numeric_limits<double>::epsilon() * emax;
        if (emax == 0.0 || evals.minCoeff() <= floor)
            throw SingularSolve(
                "Gram matrix is singular and lambda_R = 0; the ridge system has no "
                "unique minimizer");
    }

    Matrix M = Q.adjoint() * (A.adjoint() * X * A) * Q;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            M(i, j) /= evals(i) * evals(j) + lambda;
    return Q * M * Q.adjoint();
}

struct IterationControl {
    std::vector<double> trace;
    std::size_t iterations = 0;

    // Returns true when the relative change dropped below rel_tol.
    bool record(double obj, double rel_tol) {
        if (!std::isfinite(obj))
            throw NonFiniteObjective("objective left the finite range at iteration " +
                                     std::to_string(iterations));
        const bool converged =
            !trace.empty() &&
            std::abs(obj - trace.back()) <= rel_tol * std::max(trace.back(), 1e-300);
        trace.push_back(obj);
        return converged;
    }
};

void validate_fit_inputs(const AdjacencyTensor& x, const ToffeeConfig& cfg) {
    if (x.tensor.n1() != x.tensor.n2())
        throw DimMismatch("adjacency tensor slices must be square");
    if (cfg.rank == 0 || cfg.rank > x.tensor.n1())
        throw DimMismatch("rank must satisfy 1 <= r <= n");
    if (!(cfg.rel_tol > 0.0)) throw Error("rel_tol must be positive");
    if (cfg.max_iters == 0) throw Error("max_iters must be positive");
}

// Mirror weights: a solved slice k stands for itself and, unless it is
// self-conjugate, for its mirror T-k.
std::vector<double> slice_weights(std::size_t solved, std::size_t T,
                                  detail::Spectrum spectrum) {
    std::vector<double> w(solved, 1.0);
    if (spectrum == detail::Spectrum::kHalf) {
        for (std::size_t k = 0; k < solved; ++k) {
            const bool self_conjugate = (k == 0) || (T % 2 == 0 && k == T / 2);
            w[k] = self_conjugate ? 1.0 : 2.0;
        }
    }
    return w;
}

RealTensor3 stack_to_tensor(const std::vector<MatrixXcd>& solved, std::size_t n1,
                            std::size_t n2, std::size_t T, detail::Spectrum spectrum,
                            double* imag_residue = nullptr) {
    FourierStack f(n1, n2, T);
    const std::size_t h = solved.size();
    for (std::size_t k = 0; k < h; ++k) f.slice(k) = solved[k];
    if (spectrum == detail::Spectrum::kHalf)
        for (std::size_t k = h; k < T; ++k) f.slice(k) = solved[T - k].conjugate();
    return detail::ifft_mode3_measured(f, imag_residue);
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::kToffee: return "toffee";
        case Method::kRescal: return "rescal";
        case Method::kTsvd: return "tsvd";
    }
    return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "toffee") return Method::kToffee;
    if (name == "rescal") return Method::kRescal;
    if (name == "tsvd") return Method::kTsvd;
    return std::nullopt;
}

MatrixXcd update_A_slice(const MatrixXcd& Xf, const MatrixXcd& Af, const MatrixXcd& Rf,
                         double lambda_A) {
    if (Xf.rows() != Xf.cols() || Af.rows() != Xf.rows() || Rf.rows() != Rf.cols() ||
        Rf.rows() != Af.cols())
        throw DimMismatch("update_A_slice shapes are inconsistent");

    const MatrixXcd G = Af.adjoint() * Af;
    const MatrixXcd numerator = Xf * Af * Rf.adjoint() + Xf.adjoint() * Af * Rf;
    MatrixXcd denominator = Rf * G * Rf.adjoint() + Rf.adjoint() * G * Rf;
    denominator.diagonal().array() += lambda_A;

    // A F = E  <=>  F^T A^T = E^T
    const MatrixXcd At = solve_checked<MatrixXcd>(
        denominator.transpose(), numerator.transpose(), "update_A_slice");
    return At.transpose();
}

MatrixXcd update_R_slice(const MatrixXcd& Xf, const MatrixXcd& Af, double lambda_R) {
    return ridge_r_step<Complex>(Xf, Af, lambda_R);
}

namespace detail {

MatrixXd update_R_slice_real(const MatrixXd& X, const MatrixXd& A, double lambda_R) {
    return ridge_r_step<double>(X, A, lambda_R);
}

std::size_t half_spectrum_count(std::size_t T) { return T / 2 + 1; }

RealTensor3 init_factor_uniform(std::uint64_t seed, std::size_t n1, std::size_t n2,
                                std::size_t n3) {
    SeededRng rng(seed);
    RealTensor3 t(n1, n2, n3);
    // Slice-major fill order matches the storage layout, so T = 1 draws the
    // same matrix a plain n1 x n2 initialization would.
    for (std::size_t p = 0; p < t.size(); ++p) t.data()[p] = rng.next_unit();
    return t;
}

double objective_fourier(const std::vector<MatrixXcd>& Xf, const std::vector<MatrixXcd>& Af,
                         const std::vector<MatrixXcd>& Rf, const std::vector<double>& weights,
                         std::size_t T, double lambda_A, double lambda_R) {
    double total = 0.0;
    for (std::size_t k = 0; k < Xf.size(); ++k) {
        const MatrixXcd recon = Af[k] * Rf[k] * Af[k].adjoint();
        const double fit = (Xf[k] - recon).squaredNorm();
        const double pen = lambda_A * Af[k].squaredNorm() + lambda_R * Rf[k].squaredNorm();
        total += weights[k] * (fit + pen);
    }
    return total / (2.0 * static_cast<double>(T));
}

Factorization toffee_fit_spectrum(const AdjacencyTensor& x, const ToffeeConfig& cfg,
                                  Spectrum spectrum, FitStats* stats) {
    validate_fit_inputs(x, cfg);
    const std::size_t n = x.tensor.n1();
    const std::size_t T = x.tensor.n3();
    const std::size_t r = cfg.rank;

    const auto setup_start = Clock::now();

    // TODO: switch the forward transform to a real-to-complex FFT so the
    // mirrored half of X is never materialized.
    const std::size_t solved = (spectrum == Spectrum::kHalf) ? half_spectrum_count(T) : T;
    std::vector<MatrixXcd> Xf(solved), Af(solved), Rf(solved);
    {
        FourierStack full = fft_mode3(x.tensor);
        for (std::size_t k = 0; k < solved; ++k) Xf[k] = std::move(full.slice(k));
    }
    {
        const RealTensor3 a0 = init_factor_uniform(cfg.seed, n, r, T);
        FourierStack fa = fft_mode3(a0);
        for (std::size_t k = 0; k < solved; ++k) Af[k] = std::move(fa.slice(k));
    }

    const std::vector<double> weights = slice_weights(solved, T, spectrum);

    // Exceptions raised inside the slice map carry slice and iteration context.
    std::size_t current_iteration = 0;
    auto slice_pass = [&](std::size_t k, bool update_a) {
        try {
            if (update_a) Af[k] = update_A_slice(Xf[k], Af[k], Rf[k], cfg.lambda_A);
            Rf[k] = update_R_slice(Xf[k], Af[k], cfg.lambda_R);
        } catch (const SingularSolve& e) {
            throw SingularSolve(std::string(e.what()) + " (slice " + std::to_string(k) +
                                ", iteration " + std::to_string(current_iteration) + ")");
        }
    };

    parallel_for(solved, [&](std::size_t k) { slice_pass(k, /*update_a=*/false); });

    IterationControl control;
    control.record(objective_fourier(Xf, Af, Rf, weights, T, cfg.lambda_A, cfg.lambda_R),
                   cfg.rel_tol);
    if (stats) stats->setup_seconds = seconds_since(setup_start);

    const auto loop_start = Clock::now();
    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        current_iteration = iter;
        parallel_for(solved, [&](std::size_t k) { slice_pass(k, /*update_a=*/true); });
        control.iterations = iter;
        const double obj =
            objective_fourier(Xf, Af, Rf, weights, T, cfg.lambda_A, cfg.lambda_R);
        if (control.record(obj, cfg.rel_tol)) break;
    }
    if (stats) {
        stats->loop_seconds = seconds_since(loop_start);
        stats->iterations = control.iterations;
    }

    Factorization f;
    f.method = Method::kToffee;
    f.A = stack_to_tensor(Af, n, r, T, spectrum, stats ? &stats->imag_residue_A : nullptr);
    f.R = stack_to_tensor(Rf, r, r, T, spectrum, stats ? &stats->imag_residue_R : nullptr);
    f.objective_trace = std::move(control.trace);
    f.iterations_run = control.iterations;
    f.config = cfg;
    return f;
}

}  // namespace detail

Factorization toffee_fit(const AdjacencyTensor& x, const ToffeeConfig& cfg) {
    return detail::toffee_fit_spectrum(x, cfg, detail::Spectrum::kHalf);
}

Factorization rescal_fit(const AdjacencyTensor& x, const ToffeeConfig& cfg) {
    validate_fit_inputs(x, cfg);
    const std::size_t n = x.tensor.n1();
    const std::size_t T = x.tensor.n3();
    const std::size_t r = cfg.rank;

    std::vector<MatrixXd> X(T);
    for (std::size_t k = 0; k < T; ++k) X[k] = x.tensor.slice(k);

    MatrixXd A(n, r);
    {
        const RealTensor3 a0 = detail::init_factor_uniform(cfg.seed, n, r, 1);
        A = a0.slice(0);
    }

    std::vector<MatrixXd> R(T);
    std::size_t current_iteration = 0;
    auto r_pass = [&](std::size_t k) {
        try {
            R[k] = detail::update_R_slice_real(X[k], A, cfg.lambda_R);
        } catch (const SingularSolve& e) {
            throw SingularSolve(std::string(e.what()) + " (slice " + std::to_string(k) +
                                ", iteration " + std::to_string(current_iteration) + ")");
        }
    };
    parallel_for(T, r_pass);

    auto current_objective = [&]() {
        double total = 0.0;
        for (std::size_t k = 0; k < T; ++k) {
            total += (X[k] - A * R[k] * A.transpose()).squaredNorm();
            total += cfg.lambda_R * R[k].squaredNorm();
        }
        total += cfg.lambda_A * A.squaredNorm();
        return total / 2.0;
    };

    IterationControl control;
    control.record(current_objective(), cfg.rel_tol);

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        current_iteration = iter;

        // ASALSAN step with all slices sharing one A.
        const MatrixXd G = A.transpose() * A;
        MatrixXd numerator = MatrixXd::Zero(n, r);
        MatrixXd denominator = MatrixXd::Zero(r, r);
        for (std::size_t k = 0; k < T; ++k) {
            numerator += X[k] * A * R[k].transpose() + X[k].transpose() * A * R[k];
            denominator += R[k] * G * R[k].transpose() + R[k].transpose() * G * R[k];
        }
        denominator.diagonal().array() += cfg.lambda_A;
        try {
            A = solve_checked<MatrixXd>(denominator.transpose(), numerator.transpose(),
                                        "rescal A-step")
                    .transpose();
        } catch (const SingularSolve& e) {
            throw SingularSolve(std::string(e.what()) + " (iteration " +
                                std::to_string(iter) + ")");
        }

        parallel_for(T, r_pass);

        control.iterations = iter;
        if (control.record(current_objective(), cfg.rel_tol)) break;
    }

    Factorization f;
    f.method = Method::kRescal;
    f.A = RealTensor3(n, r, 1);
    f.A.slice(0) = A;
    f.R = RealTensor3(r, r, T);
    for (std::size_t k = 0; k < T; ++k) f.R.slice(k) = R[k];
    f.A.require_finite("rescal A");
    f.R.require_finite("rescal R");
    f.objective_trace = std::move(control.trace);
    f.iterations_run = control.iterations;
    f.config = cfg;
    return f;
}

Factorization tsvd(const AdjacencyTensor& x, std::size_t rank) {
    const std::size_t n = x.tensor.n1();
    const std::size_t m = x.tensor.n2();
    const std::size_t T = x.tensor.n3();
    if (rank == 0 || rank > std::min(n, m))
        throw DimMismatch("t-SVD rank must satisfy 1 <= r <= min(n1, n2)");

    const std::size_t solved = detail::half_spectrum_count(T);
    std::vector<MatrixXcd> Xf(solved);
    {
        FourierStack full = fft_mode3(x.tensor);
        for (std::size_t k = 0; k < solved; ++k) Xf[k] = std::move(full.slice(k));
    }

    std::vector<MatrixXcd> Uf(solved), Sf(solved), Vf(solved);
    parallel_for(solved, [&](std::size_t k) {
        Eigen::BDCSVD<MatrixXcd> svd(Xf[k], Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto ri = static_cast<Eigen::Index>(rank);
        Uf[k] = svd.matrixU().leftCols(ri);
        Vf[k] = svd.matrixV().leftCols(ri);
        Sf[k] = svd.singularValues().head(ri).cast<Complex>().asDiagonal();
    });

    Factorization f;
    f.method = Method::kTsvd;
    f.A = stack_to_tensor(Uf, n, rank, T, detail::Spectrum::kHalf);
    f.R = stack_to_tensor(Sf, rank, rank, T, detail::Spectrum::kHalf);
    f.V = stack_to_tensor(Vf, m, rank, T, detail::Spectrum::kHalf);
    f.iterations_run = 0;
    f.config.rank = rank;
    f.config.lambda_A = 0.0;
    f.config.lambda_R = 0.0;
    return f;
}

double objective(const AdjacencyTensor& x, const Factorization& f) {
    const std::size_t n = x.tensor.n1();
    const std::size_t T = x.tensor.n3();
    if (x.tensor.n2() != n) throw DimMismatch("adjacency tensor slices must be square");

    RealTensor3 recon;
    switch (f.method) {
        case Method::kToffee: {
            if (f.A.n1() != n || f.A.n3() != T || f.R.n3() != T)
                throw DimMismatch("factor dims do not match the data tensor");
            recon = tproduct(tproduct(f.A, f.R), ttranspose(f.A));
            break;
        }
        case Method::kRescal: {
            if (f.A.n1() != n || f.A.n3() != 1 || f.R.n3() != T)
                throw DimMismatch("factor dims do not match the data tensor");
            recon = RealTensor3(n, n, T);
            const MatrixXd A = f.A.slice(0);
            for (std::size_t k = 0; k < T; ++k) {
                const MatrixXd Rk = f.R.slice(k);
                recon.slice(k) = A * Rk * A.transpose();
            }
            break;
        }
        case Method::kTsvd: {
            if (!f.V) throw DimMismatch("t-SVD factorization is missing its right factor");
            if (f.A.n1() != n || f.A.n3() != T)
                throw DimMismatch("factor dims do not match the data tensor");
            recon = tproduct(tproduct(f.A, f.R), ttranspose(*f.V));
            break;
        }
    }

    if (!recon.same_dims(x.tensor)) throw DimMismatch("reconstruction dims disagree");
    double fit = 0.0;
    for (std::size_t p = 0; p < recon.size(); ++p) {
        const double d = x.tensor.data()[p] - recon.data()[p];
        fit += d * d;
    }
    return fit / 2.0 + f.config.lambda_A / 2.0 * frob_norm_sq(f.A) +
           f.config.lambda_R / 2.0 * frob_norm_sq(f.R);
}

}  // namespace toffee
