#include <doctest.h>

#include "oracles.hpp"
#include "toffee/factorize.hpp"

using namespace toffee;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace {

MatrixXcd random_complex(SeededRng& rng, Eigen::Index rows, Eigen::Index cols) {
    MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = Complex(2.0 * rng.next_unit() - 1.0, 2.0 * rng.next_unit() - 1.0);
    return m;
}

MatrixXcd orthonormal_columns(SeededRng& rng, Eigen::Index rows, Eigen::Index cols) {
    const MatrixXcd m = random_complex(rng, rows, cols);
    const Eigen::HouseholderQR<MatrixXcd> qr(m);
    return MatrixXcd(qr.householderQ()).leftCols(cols);
}

AdjacencyTensor wrap(RealTensor3 t) {
    return AdjacencyTensor{std::move(t), SnapshotSpec{}, nullptr};
}

}  // namespace

TEST_SUITE("factorize") {

TEST_CASE("A-step fixed point on consistent data") {
    SeededRng rng(101);
    const auto A = orthonormal_columns(rng, 6, 3);
    const auto R = random_complex(rng, 3, 3);
    const MatrixXcd X = A * R * A.adjoint();
    const MatrixXcd next = update_A_slice(X, A, R, 0.0);
    CHECK((next - A).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("A-step with R = I on a Hermitian slice reduces to X A (A^H A)^{-1}") {
    SeededRng rng(103);
    MatrixXcd X = random_complex(rng, 5, 5);
    X = (X * X.adjoint()).eval();  // Hermitian PSD
    const MatrixXcd A = random_complex(rng, 5, 2);
    const MatrixXcd I = MatrixXcd::Identity(2, 2);

    const MatrixXcd got = update_A_slice(X, A, I, 0.0);
    const MatrixXcd G = A.adjoint() * A;
    const MatrixXcd expect = (X * A) * G.inverse();
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("huge ridge drives the A-step to zero") {
    SeededRng rng(107);
    const MatrixXcd X = random_complex(rng, 4, 4);
    const MatrixXcd A = random_complex(rng, 4, 2);
    const MatrixXcd R = random_complex(rng, 2, 2);
    const MatrixXcd got = update_A_slice(X, A, R, 1e12);
    CHECK(got.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("R-step with orthonormal A and no ridge is A^H X A") {
    SeededRng rng(109);
    const MatrixXcd A = orthonormal_columns(rng, 6, 3);
    const MatrixXcd X = random_complex(rng, 6, 6);
    const MatrixXcd got = update_R_slice(X, A, 0.0);
    CHECK((got - A.adjoint() * X * A).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("R-step matches the materialized Kronecker normal equations") {
    SeededRng rng(113);
    for (const double lambda : {0.0, 0.1, 1.0}) {
        for (int trial = 0; trial < 5; ++trial) {
            const MatrixXcd A = random_complex(rng, 5, 2);
            const MatrixXcd X = random_complex(rng, 5, 5);
            const MatrixXcd fast = update_R_slice(X, A, lambda);
            const MatrixXcd oracle = oracles::kronecker_r_solve(X, A, lambda);
            CHECK((fast - oracle).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("R-step output is a local minimum of the slice objective") {
    SeededRng rng(127);
    const MatrixXcd A = random_complex(rng, 6, 3);
    const MatrixXcd X = random_complex(rng, 6, 6);
    const MatrixXcd R = update_R_slice(X, A, 0.05);
    const double at_solution = oracles::r_slice_objective(X, A, R, 0.05);
    for (int trial = 0; trial < 50; ++trial) {
        MatrixXcd d = random_complex(rng, 3, 3);
        d *= 1e-4 / d.norm();
        CHECK(oracles::r_slice_objective(X, A, R + d, 0.05) >= at_solution);
    }
}

TEST_CASE("zero data with no ridge is a singular solve") {
    SeededRng rng(131);
    MatrixXcd A = random_complex(rng, 5, 2);
    A.col(1) = A.col(0);  // rank-deficient Gram matrix
    const MatrixXcd X = random_complex(rng, 5, 5);
    CHECK_THROWS_AS((void)update_R_slice(X, A, 0.0), SingularSolve);
    CHECK_NOTHROW((void)update_R_slice(X, A, 0.1));  // ridge rescues it
}

TEST_CASE("R-step of a zero slice is zero") {
    SeededRng rng(137);
    const MatrixXcd A = random_complex(rng, 5, 2);
    const MatrixXcd X = MatrixXcd::Zero(5, 5);
    CHECK(update_R_slice(X, A, 0.3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toffee with T = 1 degenerates to rescal") {
    SeededRng rng(139);
    RealTensor3 x(6, 6, 1);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i; j < 6; ++j) {
            const double v = rng.next_unit() < 0.4 ? 1.0 : 0.0;
            x(i, j, 0) = v;
            x(j, i, 0) = v;
        }

    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        ToffeeConfig cfg;
        cfg.rank = 3;
        cfg.lambda_A = cfg.lambda_R = 1e-3;
        cfg.max_iters = 200;
        cfg.rel_tol = 1e-9;
        cfg.seed = seed;
        const Factorization ft = toffee_fit(wrap(x), cfg);
        const Factorization fr = rescal_fit(wrap(x), cfg);
        const double ot = ft.objective_trace.back();
        const double orr = fr.objective_trace.back();
        CHECK(std::abs(ot - orr) <= 1e-6 * std::max(ot, orr));
    }
}

TEST_CASE("toffee and rescal walk the same trajectory when T = 1 and lambda = 0") {
    SeededRng rng(241);
    RealTensor3 x(6, 6, 1);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i; j < 6; ++j) {
            const double v = rng.next_unit();
            x(i, j, 0) = v;
            x(j, i, 0) = v;
        }
    ToffeeConfig cfg;
    cfg.rank = 3;
    cfg.lambda_A = cfg.lambda_R = 0.0;
    cfg.max_iters = 10;  // fixed horizon, compare the iterates themselves
    cfg.rel_tol = 1e-300;
    cfg.seed = 21;
    const Factorization ft = toffee_fit(wrap(x), cfg);
    const Factorization fr = rescal_fit(wrap(x), cfg);
    CHECK(oracles::max_abs_diff(ft.A, fr.A) < 1e-8);
    CHECK(oracles::max_abs_diff(ft.R, fr.R) < 1e-8);
}

TEST_CASE("the exact R-step never increases the slice objective") {
    SeededRng rng(243);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXcd X = random_complex(rng, 6, 6);
        const MatrixXcd A = random_complex(rng, 6, 3);
        const MatrixXcd R_old = random_complex(rng, 3, 3);
        const MatrixXcd R_new = update_R_slice(X, A, 0.01);
        CHECK(oracles::r_slice_objective(X, A, R_new, 0.01) <=
              oracles::r_slice_objective(X, A, R_old, 0.01));
    }
}

TEST_CASE("A-step reports singular systems when lambda is zero") {
    SeededRng rng(247);
    const MatrixXcd X = random_complex(rng, 4, 4);
    const MatrixXcd A = random_complex(rng, 4, 2);
    const MatrixXcd R = MatrixXcd::Zero(2, 2);  // denominator collapses
    CHECK_THROWS_AS((void)update_A_slice(X, A, R, 0.0), SingularSolve);
    CHECK_NOTHROW((void)update_A_slice(X, A, R, 1e-3));
}

TEST_CASE("planted factors are recovered at matched rank") {
    SeededRng rng(149);
    const RealTensor3 A0 = oracles::random_tensor(rng, 8, 2, 4, 0.0, 1.0);
    const RealTensor3 R0 = oracles::random_tensor(rng, 2, 2, 4, 0.0, 1.0);
    const RealTensor3 x = oracles::planted_tensor(A0, R0);

    ToffeeConfig cfg;
    cfg.rank = 2;
    cfg.lambda_A = cfg.lambda_R = 1e-6;
    cfg.max_iters = 500;
    cfg.rel_tol = 1e-12;
    cfg.seed = 5;
    const Factorization f = toffee_fit(wrap(x), cfg);
    const RealTensor3 recon = tproduct(tproduct(f.A, f.R), ttranspose(f.A));
    CHECK(oracles::rel_residual(x, recon) < 1e-3);
    CHECK(f.objective_trace.back() < f.objective_trace.front());
}

TEST_CASE("zero tensor input collapses to the zero factorization") {
    ToffeeConfig cfg;
    cfg.rank = 2;
    cfg.lambda_A = cfg.lambda_R = 1e-2;
    cfg.seed = 3;
    const Factorization f = toffee_fit(wrap(RealTensor3(5, 5, 3)), cfg);
    CHECK(frob_norm_sq(f.A) < 1e-20);
    CHECK(frob_norm_sq(f.R) < 1e-20);
    CHECK(f.objective_trace.back() < 1e-20);
}

TEST_CASE("objective: zero factors give half the data norm") {
    SeededRng rng(151);
    const RealTensor3 x = oracles::random_tensor(rng, 5, 5, 3);
    Factorization f;
    f.method = Method::kToffee;
    f.A = RealTensor3(5, 2, 3);
    f.R = RealTensor3(2, 2, 3);
    f.config.lambda_A = f.config.lambda_R = 0.7;  // penalties of zero factors vanish
    CHECK(objective(wrap(x), f) == doctest::Approx(frob_norm_sq(x) / 2.0).epsilon(1e-12));
}

TEST_CASE("objective: exact planted factors with no ridge give zero") {
    SeededRng rng(157);
    const RealTensor3 A0 = oracles::random_tensor(rng, 6, 2, 3);
    const RealTensor3 R0 = oracles::random_tensor(rng, 2, 2, 3);
    const RealTensor3 x = oracles::planted_tensor(A0, R0);
    Factorization f;
    f.method = Method::kToffee;
    f.A = A0;
    f.R = R0;
    f.config.lambda_A = f.config.lambda_R = 0.0;
    CHECK(objective(wrap(x), f) < 1e-10 * frob_norm_sq(x));
}

TEST_CASE("objective: temporal and Fourier evaluations agree") {
    SeededRng rng(163);
    const RealTensor3 x = oracles::random_tensor(rng, 6, 6, 5);
    const RealTensor3 A = oracles::random_tensor(rng, 6, 3, 5);
    const RealTensor3 R = oracles::random_tensor(rng, 3, 3, 5);
    Factorization f;
    f.method = Method::kToffee;
    f.A = A;
    f.R = R;
    f.config.lambda_A = 0.3;
    f.config.lambda_R = 0.7;

    const double temporal = objective(wrap(x), f);

    const FourierStack xf = fft_mode3(x);
    const FourierStack af = fft_mode3(A);
    const FourierStack rf = fft_mode3(R);
    std::vector<MatrixXcd> Xs, As, Rs;
    for (std::size_t k = 0; k < 5; ++k) {
        Xs.push_back(xf.slice(k));
        As.push_back(af.slice(k));
        Rs.push_back(rf.slice(k));
    }
    const double fourier = detail::objective_fourier(Xs, As, Rs,
                                                     std::vector<double>(5, 1.0), 5, 0.3, 0.7);
    CHECK(std::abs(temporal - fourier) < 1e-8 * std::max(1.0, temporal));
}

TEST_CASE("half-spectrum and full-spectrum solves coincide") {
    SeededRng rng(167);
    const RealTensor3 x = oracles::random_tensor(rng, 6, 6, 4, 0.0, 1.0);
    ToffeeConfig cfg;
    cfg.rank = 2;
    cfg.lambda_A = cfg.lambda_R = 1e-3;
    cfg.max_iters = 40;
    cfg.rel_tol = 1e-10;
    cfg.seed = 8;
    const Factorization half = detail::toffee_fit_spectrum(wrap(x), cfg, detail::Spectrum::kHalf);
    const Factorization full = detail::toffee_fit_spectrum(wrap(x), cfg, detail::Spectrum::kFull);
    CHECK(oracles::max_abs_diff(half.A, full.A) < 1e-8);
    CHECK(oracles::max_abs_diff(half.R, full.R) < 1e-8);
}

TEST_CASE("identical seeds give bit-identical factorizations") {
    SeededRng rng(173);
    const RealTensor3 x = oracles::random_tensor(rng, 7, 7, 3, 0.0, 1.0);
    ToffeeConfig cfg;
    cfg.rank = 3;
    cfg.lambda_A = cfg.lambda_R = 1e-2;
    cfg.max_iters = 25;
    cfg.rel_tol = 1e-8;
    cfg.seed = 42;
    const Factorization f1 = toffee_fit(wrap(x), cfg);
    const Factorization f2 = toffee_fit(wrap(x), cfg);
    CHECK(f1.A.storage() == f2.A.storage());
    CHECK(f1.R.storage() == f2.R.storage());
    CHECK(f1.objective_trace == f2.objective_trace);
}

TEST_CASE("an overflowing objective raises NonFiniteObjective") {
    RealTensor3 x(3, 3, 2);
    for (std::size_t p = 0; p < x.size(); ++p) x.data()[p] = 1e200;
    ToffeeConfig cfg;
    cfg.rank = 2;
    cfg.seed = 1;
    CHECK_THROWS_AS((void)toffee_fit(wrap(x), cfg), NonFiniteObjective);
}

TEST_CASE("rescal recovers planted shared-factor data") {
    SeededRng rng(179);
    MatrixXd A0(7, 2);
    for (Eigen::Index i = 0; i < 7; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) A0(i, j) = rng.next_unit();
    RealTensor3 x(7, 7, 3);
    for (std::size_t k = 0; k < 3; ++k) {
        MatrixXd Rk(2, 2);
        for (Eigen::Index i = 0; i < 2; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) Rk(i, j) = rng.next_unit();
        x.slice(k) = A0 * Rk * A0.transpose();
    }
    ToffeeConfig cfg;
    cfg.rank = 2;
    cfg.lambda_A = cfg.lambda_R = 1e-6;
    cfg.max_iters = 500;
    cfg.rel_tol = 1e-12;
    cfg.seed = 11;
    const Factorization f = rescal_fit(wrap(x), cfg);

    RealTensor3 recon(7, 7, 3);
    const MatrixXd A = f.A.slice(0);
    for (std::size_t k = 0; k < 3; ++k) {
        const MatrixXd Rk = f.R.slice(k);
        recon.slice(k) = A * Rk * A.transpose();
    }
    CHECK(oracles::rel_residual(x, recon) < 1e-3);
}

TEST_CASE("full-rank rescal on symmetric slices fits almost exactly") {
    SeededRng rng(181);
    RealTensor3 x(5, 5, 2);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = i; j < 5; ++j) {
                const double v = rng.next_unit();
                x(i, j, k) = v;
                x(j, i, k) = v;
            }
    ToffeeConfig cfg;
    cfg.rank = 5;
    cfg.lambda_A = cfg.lambda_R = 0.0;
    cfg.max_iters = 500;
    cfg.rel_tol = 1e-14;
    cfg.seed = 2;
    const Factorization f = rescal_fit(wrap(x), cfg);
    RealTensor3 recon(5, 5, 2);
    const MatrixXd A = f.A.slice(0);
    for (std::size_t k = 0; k < 2; ++k) {
        const MatrixXd Rk = f.R.slice(k);
        recon.slice(k) = A * Rk * A.transpose();
    }
    CHECK(oracles::rel_residual(x, recon) < 1e-6);
}

TEST_CASE("tsvd reconstructs exactly at full rank") {
    SeededRng rng(191);
    const RealTensor3 x = oracles::random_tensor(rng, 5, 5, 4);
    const Factorization f = tsvd(wrap(x), 5);
    REQUIRE(f.V.has_value());
    const RealTensor3 recon = tproduct(tproduct(f.A, f.R), ttranspose(*f.V));
    CHECK(oracles::max_abs_diff(x, recon) < 1e-8);
}

TEST_CASE("tsvd rank-1 truncation is exact on tubal-rank-1 data") {
    SeededRng rng(193);
    // Every Fourier slice has rank 1: X = u * s * v^T for single-column u, v.
    const RealTensor3 u = oracles::random_tensor(rng, 6, 1, 3);
    const RealTensor3 v = oracles::random_tensor(rng, 6, 1, 3);
    const RealTensor3 x = tproduct_direct(u, ttranspose(v));
    const Factorization f = tsvd(wrap(x), 1);
    const RealTensor3 recon = tproduct(tproduct(f.A, f.R), ttranspose(*f.V));
    CHECK(oracles::max_abs_diff(x, recon) < 1e-8);
}

TEST_CASE("tsvd truncation error equals the discarded spectrum") {
    SeededRng rng(197);
    const RealTensor3 x = oracles::random_tensor(rng, 6, 6, 3);
    const std::size_t r = 2;
    const Factorization f = tsvd(wrap(x), r);
    const RealTensor3 recon = tproduct(tproduct(f.A, f.R), ttranspose(*f.V));

    double err = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) {
        const double d = x.data()[p] - recon.data()[p];
        err += d * d;
    }

    const FourierStack xf = fft_mode3(x);
    double discarded = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        Eigen::BDCSVD<MatrixXcd> svd(xf.slice(k));
        const auto& sv = svd.singularValues();
        for (Eigen::Index i = static_cast<Eigen::Index>(r); i < sv.size(); ++i)
            discarded += sv(i) * sv(i);
    }
    discarded /= 3.0;
    CHECK(std::abs(err - discarded) < 1e-8 * std::max(1.0, discarded));
}

TEST_CASE("tsvd factors are orthonormal and f-diagonal in the Fourier domain") {
    SeededRng rng(199);
    const RealTensor3 x = oracles::random_tensor(rng, 6, 6, 4);
    const Factorization f = tsvd(wrap(x), 3);

    const FourierStack uf = fft_mode3(f.A);
    const FourierStack vf = fft_mode3(*f.V);
    const FourierStack sf = fft_mode3(f.R);
    for (std::size_t k = 0; k < 4; ++k) {
        const MatrixXcd utu = uf.slice(k).adjoint() * uf.slice(k);
        const MatrixXcd vtv = vf.slice(k).adjoint() * vf.slice(k);
        CHECK((utu - MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((vtv - MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);

        const MatrixXcd& s = sf.slice(k);
        double prev = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.cols(); ++j)
                if (i != j) CHECK(std::abs(s(i, j)) < 1e-8);
            CHECK(std::abs(s(i, i).imag()) < 1e-8);
            CHECK(s(i, i).real() >= -1e-10);
            CHECK(s(i, i).real() <= prev + 1e-10);
            prev = s(i, i).real();
        }
    }
}

TEST_CASE("fit rejects invalid configurations") {
    const RealTensor3 x(4, 4, 2);
    ToffeeConfig cfg;
    cfg.rank = 5;  // r > n
    CHECK_THROWS_AS((void)toffee_fit(wrap(x), cfg), DimMismatch);
    cfg.rank = 2;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS((void)toffee_fit(wrap(x), cfg), Error);
    CHECK_THROWS_AS((void)tsvd(wrap(x), 9), DimMismatch);
}

}  // TEST_SUITE
