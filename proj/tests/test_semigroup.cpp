#include <cmath>
#include <numbers>

#include <doctest.h>

#include "ndlab/adjoint_solution.hpp"
#include "ndlab/samples.hpp"
#include "ndlab/semigroup.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ndlab;
using support::code_of;
using support::rel;

namespace {

AnalyzedOperator analyzed(int dim, int n, const CoefficientSpec& spec) {
    const Grid g = build_grid(dim, n);
    return AnalyzedOperator(assemble_operator(g, make_coefficients(g, spec)));
}

const std::vector<double> kTimes{1.0 / 16, 1.0 / 8, 1.0 / 4};

}  // namespace

TEST_CASE("heat matrix at zero is the identity") {
    const AnalyzedOperator A = analyzed(1, 16, CoefficientSpec::scalar());
    CHECK(heat_matrix(A, 0.0) == Matrix::Identity(16, 16));
    CHECK(code_of([&] { heat_matrix(A, -0.1); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { heat_kernel(A, 0.3); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { tle_kernel(A, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("identity heat kernel matches the cosine-sum oracle") {
    const int n = 32;
    const AnalyzedOperator A = analyzed(1, n, CoefficientSpec::identity());
    for (double t : kTimes) {
        const auto ref = oracle::circulant(n, [t](double mu) { return std::exp(-t * t * mu); });
        const KernelMatrix K = heat_kernel(A, t);
        double err = 0.0;
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) err = std::max(err, std::fabs(K.entries(x, y) - ref[x][y] * n));
        CHECK(err <= 1e-10);
    }
}

TEST_CASE("heat kernel invariants") {
    for (int dim : {1, 2}) {
        const AnalyzedOperator A = analyzed(dim, dim == 1 ? 32 : 16,
                                            dim == 1 ? CoefficientSpec::scalar() : CoefficientSpec::smooth_anisotropic(0.25));
        const AdjointSolution sol = solve_adjoint(A.op());
        const double column_tol = 1e-9;
        for (double t : kTimes) {
            const KernelMatrix K = heat_kernel(A, t, sol.W);
            CHECK(K.kind == KernelKind::Heat);
            CHECK(K.checks.row_quadrature_error <= 1e-10);
            CHECK(K.checks.weighted_column_error >= 0.0);
            CHECK(K.checks.weighted_column_error <= column_tol);
            const Vector rows = K.entries.rowwise().sum() * A.grid().cell_volume();
            CHECK((rows.array() - 1.0).abs().maxCoeff() <= 1e-10);
            // The cross stencil is not monotone: 2D kernels dip below zero at N = 16.
            if (dim == 1) CHECK(K.invariants_hold(column_tol));
        }
    }
    const KernelMatrix K = heat_kernel(analyzed(2, 32, CoefficientSpec::smooth_anisotropic(0.25)), 1.0 / 16);
    CHECK(K.checks.min_entry >= -1e-10);
}

TEST_CASE("identity heat kernel is translation invariant") {
    const AnalyzedOperator A = analyzed(2, 16, CoefficientSpec::identity());
    const KernelMatrix K = heat_kernel(A, 1.0 / 8);
    const Grid& g = A.grid();
    for (int x = 0; x < g.total_sites; x += 7)
        for (int y = 0; y < g.total_sites; y += 5) {
            const auto cx = g.coords(x), cy = g.coords(y);
            const int x0 = g.site(cx[0] - cy[0], cx[1] - cy[1]);
            CHECK(K.entries(x, y) == doctest::Approx(K.entries(x0, 0)).epsilon(1e-10));
        }
}

TEST_CASE("tLe kernel") {
    const AnalyzedOperator A = analyzed(1, 32, CoefficientSpec::scalar());
    for (double t : kTimes) {
        const KernelMatrix K = tle_kernel(A, t);
        CHECK(K.kind == KernelKind::TLe);
        CHECK(K.checks.row_quadrature_error <= 1e-10);
    }
    const AnalyzedOperator I = analyzed(1, 32, CoefficientSpec::identity());
    const Vector f = sample(A.grid(), [](double x, double) { return std::cos(2 * std::numbers::pi * x) + 0.5; });
    // lambda t^2 exp(-lambda t^2) decreases with t while lambda t^2 <= 1 on the modes of f:
    // t <= 0.2 for -Delta_h, smaller t for a = 2 + sin, which reaches lambda ~ 3 (2 pi)^2.
    const auto decreasing = [&](const AnalyzedOperator& B, std::initializer_list<double> ts) {
        double prev = INFINITY;
        for (double t : ts) {
            const double v = (tle_kernel(B, t).entries * f).norm();
            CHECK(v < prev);
            prev = v;
        }
    };
    decreasing(I, {0.2, 0.1, 0.05});
    decreasing(A, {0.05, 0.025, 0.0125});

    std::vector<KernelMatrix> ks;
    for (double t : kTimes) ks.push_back(tle_kernel(I, t));
    const BoundFit fit = gaussian_bound_fit(ks, Weight::constant(I.grid()), BoundSide::Upper);
    CHECK(std::isfinite(fit.C_fit));
    CHECK(fit.c_fit >= 0.05);
}

TEST_CASE("identity upper fit is refinement stable") {
    BoundFit fits[2];
    for (int i = 0; i < 2; ++i) {
        const AnalyzedOperator A = analyzed(1, 32 << i, CoefficientSpec::identity());
        fits[i] = gaussian_bound_fit(A, Weight::constant(A.grid()), kTimes, BoundSide::Upper);
        CHECK(fits[i].c_fit >= 0.05);
        CHECK(fits[i].residual_max == fits[i].C_fit);
        CHECK(fits[i].constant_at(fits[i].c_fit) == fits[i].C_fit);
    }
    CHECK(fit_refinement_change(fits[0], fits[1]) <= 0.25);
}

TEST_CASE("scalar operator fits on both sides") {
    const auto gold = support::golden("recorded_constants.json")["scalar_fit_n32"];
    const AnalyzedOperator A = analyzed(1, 32, CoefficientSpec::scalar());
    const Weight W = solve_adjoint(A.op()).W;
    const BoundFit up = gaussian_bound_fit(A, W, kTimes, BoundSide::Upper);
    const BoundFit lo = gaussian_bound_fit(A, W, kTimes, BoundSide::Lower);
    CHECK(up.c_fit == gold["upper"]["c"].get<double>());
    CHECK(rel(up.C_fit, gold["upper"]["C"].get<double>()) <= 1e-6);
    CHECK(lo.c_fit == gold["lower"]["c"].get<double>());
    CHECK(rel(lo.C_fit, gold["lower"]["C"].get<double>()) <= 1e-6);
    CHECK(up.constants.size() == FitOptions::default_rates().size());
    for (std::size_t k = 1; k < up.constants.size(); ++k) CHECK(up.constants[k] >= up.constants[k - 1]);
}

TEST_CASE("a zeroed near-diagonal entry breaks the lower fit") {
    const AnalyzedOperator A = analyzed(1, 32, CoefficientSpec::identity());
    const Weight W = Weight::constant(A.grid());
    std::vector<KernelMatrix> ks{heat_kernel(A, 1.0 / 8)};
    CHECK_NOTHROW(gaussian_bound_fit(ks, W, BoundSide::Lower));
    ks[0].entries(0, 8) = 0.0;  // dist = 2t
    CHECK(code_of([&] { gaussian_bound_fit(ks, W, BoundSide::Lower); }) == ErrorCode::NoFiniteConstant);
    CHECK_NOTHROW(gaussian_bound_fit(ks, W, BoundSide::Upper));
}

TEST_CASE("gradient kernel energy") {
    const auto gold = support::golden("recorded_constants.json")["identity_grad_energy_n32"];
    const AnalyzedOperator A = analyzed(1, 32, CoefficientSpec::identity());
    const Weight W = Weight::constant(A.grid());
    const double gamma = gaussian_bound_fit(A, W, kTimes, BoundSide::Upper).c_fit / 3.0;
    CHECK(gamma == gold["gamma"].get<double>());
    double C = 0.0;
    for (double s : kTimes) {
        const double e0 = grad_kernel_energy(A, W, s, 0, gamma);
        for (int y = 1; y < 32; ++y) CHECK(grad_kernel_energy(A, W, s, y, gamma) == doctest::Approx(e0).epsilon(1e-9));
        CHECK(grad_kernel_energy(A, W, s, 0, 0.0) < e0);
        // W(y)^2 / W(B_s(y)) = 1/(2s) up to the lattice count of B_s
        const double ball = ball_mass(A.grid(), Ball{A.grid().point(0), s / A.grid().h}, W.values);
        CHECK(grad_energy_constant(A, W, s, 0, gamma) == doctest::Approx(e0 * s * s * ball));
        C = std::max(C, e0 * s * s * ball);
    }
    CHECK(rel(C, gold["C"].get<double>()) <= 1e-6);
}

TEST_CASE("annulus gradient bound") {
    const AnalyzedOperator A = analyzed(1, 64, CoefficientSpec::identity());
    const Weight W = Weight::constant(A.grid());
    const double s = 1.0 / 16;
    const double full = annulus_grad_bound(A, W, s, 0.0, 0);
    CHECK(std::isfinite(full));
    CHECK(annulus_grad_bound(A, W, s, s, 0) < full);
    for (int y : {5, 33}) CHECK(annulus_grad_bound(A, W, s, s, y) == doctest::Approx(annulus_grad_bound(A, W, s, s, 0)).epsilon(1e-9));
    CHECK(code_of([&] { annulus_grad_bound(A, W, s, 0.5, 0); }) == ErrorCode::EmptyAnnulus);

    std::vector<AnnulusSample> samples;
    for (double m : {0.0, 1.0, 2.0, 3.0, 4.0})
        samples.push_back({s, m * s, 0, annulus_grad_bound(A, W, s, m * s, 0), 1.0});
    const AnnulusFit fit = fit_annulus(samples);
    CHECK(fit.beta > 0.0);
    CHECK(fit.C == doctest::Approx(fit.constant_at(fit.beta)));
    CHECK(samples[4].value / samples[1].value <= std::exp(-fit.beta * 15.0) * (1 + 1e-12));
    for (const auto& smp : samples)
        CHECK(smp.value <= fit.C / smp.s * std::exp(-fit.beta * smp.t * smp.t / (smp.s * smp.s)) * (1 + 1e-12));

    CHECK(code_of([] { fit_annulus({}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { fit_annulus({samples[0]}); }) == ErrorCode::InvalidArgument);
}
