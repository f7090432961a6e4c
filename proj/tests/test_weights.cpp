#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "ndlab/weights.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ndlab;
using support::code_of;
using support::rel;

namespace {

Weight two_valued() {
    const Grid g = build_grid(1, 8);
    Vector v(8);
    v << 4, 4, 4, 4, 1, 1, 1, 1;
    return Weight::from_values(g, v).normalized();
}

/// c/a for a = 2 + sin(2 pi x), the adjoint solution of the 1D scalar operator.
Weight inverse_scalar(int n) {
    const Grid g = build_grid(1, n);
    return Weight::from_values(g, sample(g, [](double x, double) {
                                   return 1.0 / (2.0 + std::sin(2 * std::numbers::pi * x));
                               }))
        .normalized();
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("normalization") {
    const Weight w = Weight::from_values(build_grid(1, 16), Vector::LinSpaced(16, 1.0, 4.0)).normalized();
    CHECK(std::fabs(w.mean() - 1.0) <= 1e-12);
    CHECK(w.normalization == doctest::Approx(2.5));
    CHECK(w.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("constant weight has unit constants") {
    const Grid g = build_grid(1, 16);
    const Weight w = Weight::constant(g);
    const BallFamily F = BallFamily::all_balls(g);
    for (double p : {1.5, 2.0, 3.0}) CHECK(ap_constant(w, p, F) == 1.0);
    for (double r : {2.0, 4.0}) CHECK(reverse_holder_constant(w, r, F) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-valued weight matches enumeration") {
    const auto gold = support::golden("weights_two_valued.json");
    const Weight w = two_valued();
    const std::vector<double> raw = to_std(w.values);
    const BallFamily F = BallFamily::all_balls(w.grid);
    CHECK(F.max_radius == gold["max_radius"].get<double>());

    for (const auto& [key, val] : gold["ap"].items()) {
        const double p = std::stod(key);
        CHECK(rel(oracle::ap(raw, p, 2), val.get<double>()) <= 1e-12);
        CHECK(rel(ap_constant(w, p, F), val.get<double>()) <= 1e-12);
    }
    CHECK(rel(oracle::reverse_holder(raw, 2.0, 2), gold["rh2"].get<double>()) <= 1e-12);
    CHECK(rel(reverse_holder_constant(w, 2.0, F), gold["rh2"].get<double>()) <= 1e-12);

    const auto& dbl = gold["doubling"];
    const DoublingReport rep = doubling_check(w, 2.0, 2.0, BallFamily::all_balls(w.grid, dbl["max_radius"].get<int>()));
    const auto ratios = dbl["ratios"].get<std::vector<double>>();
    REQUIRE(rep.ratios.size() == ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) CHECK(rel(rep.ratios[i], ratios[i]) <= 1e-12);
    CHECK(rep.pass);
}

TEST_CASE("A_p properties") {
    const Weight w = inverse_scalar(64);
    const BallFamily F = BallFamily::all_balls(w.grid);
    double prev = INFINITY;
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        const double a = ap_constant(w, p, F);
        CHECK(a >= 1.0);
        CHECK(a <= prev);
        prev = a;
    }
    CHECK(code_of([&] { ap_constant(w, 1.0, F); }) == ErrorCode::NonPositiveExponentGap);
    CHECK(code_of([&] { ap_constant(w, 2.0, BallFamily{}); }) == ErrorCode::EmptyBallFamily);
    Weight z = w;
    z.values[3] = 0.0;
    CHECK(code_of([&] { ap_constant(z, 2.0, F); }) == ErrorCode::NonPositiveWeight);
}

TEST_CASE("reverse Hoelder of the scalar adjoint weight") {
    double rh[2];
    int i = 0;
    for (int n : {64, 128}) {
        const Weight w = inverse_scalar(n);
        rh[i] = reverse_holder_constant(w, 2.0, BallFamily::all_balls(w.grid));
        CHECK(rh[i] >= 1.0);
        ++i;
    }
    CHECK(rel(rh[1], rh[0]) <= 0.05);
    CHECK(code_of([] { reverse_holder_constant(Weight::constant(build_grid(1, 8)), 2.0, BallFamily{}); }) ==
          ErrorCode::EmptyBallFamily);
}

TEST_CASE("doubling") {
    const Grid g = build_grid(1, 16);
    const DoublingReport rep = doubling_check(Weight::constant(g), 2.0, 2.0, BallFamily::all_balls(g, 2));
    CHECK(rep.pass);
    for (double r : rep.ratios) CHECK(r <= 1.0);

    const BallFamily small = BallFamily::from_balls(g, {Ball{{3.0, 0.0}, 2.0}});
    CHECK(code_of([&] { doubling_check(Weight::constant(g), 2.0, 8.0, small); }) == ErrorCode::BallWrapsTorus);
    CHECK(code_of([&] { BallFamily::from_balls(g, {Ball{{0.0, 0.0}, 5.0}}); }) == ErrorCode::BallWrapsTorus);
}

TEST_CASE("ball membership is strict") {
    const Grid g = build_grid(2, 16);
    CHECK(ball_sites(g, Ball{{0.0, 0.0}, 1.0}).size() == 1);
    CHECK(ball_sites(g, Ball{{0.0, 0.0}, 1.5}).size() == 9);
    CHECK(ball_sites(g, Ball{{0.0, 0.0}, 2.0}).size() == 9);
    const Grid g1 = build_grid(1, 16);
    CHECK(ball_sites(g1, Ball{{0.5, 0.0}, 1.0}).size() == 2);
}

TEST_CASE("maximal function") {
    const Grid g = build_grid(1, 16);
    const BallFamily F = BallFamily::all_balls(g);
    const Weight w = inverse_scalar(16);

    const Vector c = Vector::Constant(16, -2.5);
    CHECK((maximal_function(w, c, F).array() - 2.5).abs().maxCoeff() <= 1e-14);

    const auto gold = support::golden("weights_two_valued.json")["maximal_indicator"];
    const auto expect = gold["values"].get<std::vector<double>>();
    CHECK(to_std(Vector::Map(oracle::maximal_of_indicator(16, 4).data(), 16)) == expect);
    Vector e = Vector::Zero(16);
    e[0] = 1.0;
    const Vector M = maximal_function(Weight::constant(g), e, F);
    for (int y = 0; y < 16; ++y) CHECK(std::fabs(M[y] - expect[std::size_t(y)]) <= 1e-15);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    double K = 0.0;
    for (int s = 0; s < 50; ++s) {
        Vector f(16), h(16);
        for (int i = 0; i < 16; ++i) {
            f[i] = nd(rng);
            h[i] = nd(rng);
        }
        const Vector Mf = maximal_function(w, f, F);
        const Vector Mh = maximal_function(w, h, F);
        CHECK(((Mf.array() - f.array().abs()).minCoeff()) >= -1e-14);
        CHECK((maximal_function(w, f + h, F) - Mf - Mh).maxCoeff() <= 1e-12);
        const auto norm = [&](const Vector& v) { return std::sqrt((v.array().square() * w.values.array()).sum()); };
        K = std::max(K, norm(Mf) / norm(f));
    }
    CHECK(std::isfinite(K));
    CHECK(K >= 1.0);
}

TEST_CASE("weighted Gaussian integral") {
    const Grid g = build_grid(1, 32);
    const Weight one = Weight::constant(g);
    const double v0 = gaussian_weight_integral(one, 0, 0.25, 1.0);
    for (int y = 1; y < 32; ++y) CHECK(gaussian_weight_integral(one, y, 0.25, 1.0) == doctest::Approx(v0).epsilon(1e-13));

    const Weight w = inverse_scalar(64);
    double sup = 0.0;
    for (double s : {1.0 / 16, 1.0 / 8, 1.0 / 4})
        for (int y = 0; y < 64; ++y) sup = std::max(sup, gaussian_weight_integral(w, y, s, 1.0));
    CHECK(std::isfinite(sup));

    // The neighbours drop out (exp(-c h^2/s^2) small) only while s spans a few cells.
    for (int y : {0, 17, 40}) {
        const double s = 1.0 / 16;
        const double floor = w.values[y] * w.grid.h / ball_mass(w.grid, Ball{w.grid.point(y), s / w.grid.h}, w.values);
        const double v = gaussian_weight_integral(w, y, s, 100.0);
        CHECK(v >= floor);
        CHECK(v <= 1.10 * floor);
    }

    Vector z = Vector::Ones(32);
    for (int i = 0; i < 8; ++i) z[i] = 0.0;
    const Weight holes = Weight::from_values(g, z);
    CHECK(code_of([&] { gaussian_weight_integral(holes, 3, 1.0 / 16, 1.0); }) == ErrorCode::DegenerateBall);
}
