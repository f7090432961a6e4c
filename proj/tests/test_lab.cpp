#include <cmath>
#include <numbers>

#include <doctest.h>

#include "ndlab/adjoint_solution.hpp"
#include "ndlab/lab.hpp"
#include "ndlab/samples.hpp"
#include "support.hpp"

using namespace ndlab;
using support::code_of;

namespace {

AnalyzedOperator analyzed(int n, const CoefficientSpec& spec) {
    const Grid g = build_grid(1, n);
    return AnalyzedOperator(assemble_operator(g, make_coefficients(g, spec)));
}

}  // namespace

TEST_CASE("time grids") {
    const std::vector<double> t = dyadic_times(1.0 / 32);
    CHECK(t == std::vector<double>{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4});
    const std::vector<double> w = log_time_weights(t);
    CHECK(w.front() == doctest::Approx(0.5 * std::log(2.0)));
    CHECK(w[1] == doctest::Approx(std::log(2.0)));
    double total = 0.0;
    for (double v : w) total += v;
    CHECK(total == doctest::Approx(std::log(8.0)));
    CHECK(log_time_weights({0.1}) == std::vector<double>{std::log(2.0)});
    CHECK(code_of([] { log_time_weights({}); }) == ErrorCode::EmptyTimeGrid);
}

TEST_CASE("square function") {
    const AnalyzedOperator I = analyzed(32, CoefficientSpec::identity());
    const Weight one = Weight::constant(I.grid());
    const SquareFunction S(I, one, dyadic_times(1.0 / 32));
    CHECK(S.times().size() == 4);
    CHECK(S(Vector::Constant(32, 5.0)).cwiseAbs().maxCoeff() <= 1e-10);

    // The cone average of sin^2 still ripples with x; sin^2 + cos^2 does not.
    const Vector sf = S(sample(I.grid(), [](double x, double) { return std::sin(2 * std::numbers::pi * x); }));
    const Vector cf = S(sample(I.grid(), [](double x, double) { return std::cos(2 * std::numbers::pi * x); }));
    const Vector both = (sf.array().square() + cf.array().square()).matrix();
    CHECK(sf.minCoeff() > 0.0);
    CHECK(both.maxCoeff() - both.minCoeff() <= 1e-10 * both.maxCoeff());
    const Vector shifted = S(sample(I.grid(), [](double x, double) { return std::sin(2 * std::numbers::pi * (x - 0.125)); }));
    for (int x = 0; x < 32; ++x) CHECK(shifted[(x + 4) % 32] == doctest::Approx(sf[x]).epsilon(1e-10));

    CHECK(code_of([&] { SquareFunction(I, one, {}); }) == ErrorCode::EmptyTimeGrid);
    CHECK(code_of([&] { SquareFunction(I, one, {0.5}); }) == ErrorCode::InvalidArgument);

    const AnalyzedOperator A = analyzed(32, CoefficientSpec::scalar());
    const Weight W = solve_adjoint(A.op()).W;
    const SquareFunction SA(A, W, dyadic_times(A.grid().h));
    double lo = INFINITY, hi = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const Vector f = remove_weighted_mean(W, band_limited(A.grid(), 4, 600 + k));
        const double r = weighted_norm(W, SA(f)) / weighted_norm(W, f);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(lo > 0.0);
    CHECK(std::isfinite(hi));
    CHECK(square_function(A, W, band_limited(A.grid(), 2, 1), {0.25}).size() == 32);
}

TEST_CASE("H1 ratio") {
    const AnalyzedOperator I = analyzed(32, CoefficientSpec::identity());
    const Weight one = Weight::constant(I.grid());
    const std::vector<double> times = dyadic_times(I.grid().h);
    const RieszTransform T(I);
    const SquareFunction S(I, one, times);
    double lo = INFINITY, hi = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const Vector f = remove_weighted_mean(one, weighted_spike(one, random_site(I.grid(), 50 + k)));
        const double r = h1_riesz_ratio(T, S, one, f);
        CHECK(h1_riesz_ratio(T, S, one, 2.0 * f) == r);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    // every spike is a translate of the first on the identity torus
    CHECK(hi - lo <= 1e-9 * hi);
    CHECK(h1_riesz_ratio(I, one, remove_weighted_mean(one, weighted_spike(one, 3)), times) == doctest::Approx(hi));

    CHECK(code_of([&] { h1_riesz_ratio(T, S, one, weighted_spike(one, 3)); }) == ErrorCode::NotMeanZero);
    CHECK(code_of([&] { h1_riesz_ratio(T, S, one, Vector::Zero(32)); }) == ErrorCode::ZeroSquareFunction);
}

TEST_CASE("H1 ratio of the scalar operator under refinement") {
    double worst[2];
    for (int i = 0; i < 2; ++i) {
        const AnalyzedOperator A = analyzed(32 << i, CoefficientSpec::scalar());
        const Weight W = solve_adjoint(A.op()).W;
        const RieszTransform T(A);
        const SquareFunction S(A, W, dyadic_times(A.grid().h));
        worst[i] = 0.0;
        for (std::uint64_t k = 0; k < 30; ++k) {
            const Vector f = remove_weighted_mean(W, weighted_spike(W, random_site(A.grid(), 900 + k)));
            worst[i] = std::max(worst[i], h1_riesz_ratio(T, S, W, f));
        }
        CHECK(std::isfinite(worst[i]));
    }
    CHECK(support::rel(worst[1], worst[0]) <= 0.25);
}

TEST_CASE("sample families do not depend on N") {
    const Grid a = build_grid(1, 32), b = build_grid(1, 64);
    const Vector fa = band_limited(a, 4, 17), fb = band_limited(b, 4, 17);
    for (int i = 0; i < 32; ++i) CHECK(fa[i] == doctest::Approx(fb[2 * i]).epsilon(1e-12));
    CHECK(std::fabs(fa.mean()) <= 1e-12);
    CHECK(b.position(random_site(b, 5), 0) == doctest::Approx(a.position(random_site(a, 5), 0)).epsilon(1.0 / 32));

    const Weight W = Weight::from_values(a, Vector::LinSpaced(32, 0.5, 1.5)).normalized();
    const SampleFamily fam = make_family(W, 3, 4, 2, 8);
    CHECK(fam.spikes.size() == 3);
    CHECK(fam.band_limited.size() == 4);
    CHECK(fam.all().size() == 7);
    for (const Vector& s : fam.spikes) CHECK(weighted_norm(W, s, 1.0) == doctest::Approx(1.0));
    const Vector m = remove_weighted_mean(W, fam.spikes[0]);
    CHECK(std::fabs((m.array() * W.values.array()).sum()) <= 1e-12 * m.cwiseAbs().maxCoeff());
}
