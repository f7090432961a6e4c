#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "ndlab/spectral.hpp"
#include "support.hpp"

using namespace ndlab;

namespace {

DiscreteOperator make_op(int dim, int n, const CoefficientSpec& spec) {
    const Grid g = build_grid(dim, n);
    return assemble_operator(g, make_coefficients(g, spec));
}

double rel_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

TEST_CASE("mode selection") {
    CHECK(SpectralCalculus(make_op(1, 16, CoefficientSpec::identity())).mode() == SpectralCalculus::Mode::Symmetric);
    CHECK(SpectralCalculus(make_op(1, 16, CoefficientSpec::scalar())).mode() ==
          SpectralCalculus::Mode::Symmetrizable);
    CHECK(SpectralCalculus(make_op(2, 8, CoefficientSpec::smooth_anisotropic(0.25))).mode() ==
          SpectralCalculus::Mode::General);
}

TEST_CASE("the factorisations agree") {
    const DiscreteOperator op = make_op(1, 16, CoefficientSpec::scalar());
    const SpectralCalculus sym(op);
    const SpectralCalculus gen(op.dense());
    SpectralOptions force;
    force.condition_threshold = 0.5;
    const SpectralCalculus pade(op.dense(), force);
    REQUIRE(gen.mode() == SpectralCalculus::Mode::General);
    REQUIRE(pade.mode() == SpectralCalculus::Mode::ScalingSquaring);
    CHECK_FALSE(pade.diagonalized());
    for (double tau : {1e-4, 1e-3, 1e-2}) {
        const Matrix ref = sym.semigroup(tau);
        CHECK(rel_diff(gen.semigroup(tau), ref) <= 1e-9);
        CHECK(rel_diff(pade.semigroup(tau), ref) <= 1e-9);
    }
    const auto sq = [](Complex z) { return std::sqrt(z); };
    CHECK(rel_diff(gen.apply(sq), sym.apply(sq)) <= 1e-9);
}

TEST_CASE("semigroup at zero and the exponential law") {
    for (const CoefficientSpec& spec : {CoefficientSpec::identity(), CoefficientSpec::scalar()}) {
        const SpectralCalculus S(make_op(1, 32, spec));
        CHECK(S.semigroup(0.0) == Matrix::Identity(32, 32));
        const double t = 0.1, s = 0.05;
        const Matrix lhs = S.semigroup(t * t + s * s);
        CHECK((lhs - S.semigroup(t * t) * S.semigroup(s * s)).cwiseAbs().maxCoeff() <= 1e-9);
    }
    const SpectralCalculus A(make_op(2, 8, CoefficientSpec::smooth_anisotropic(0.25)));
    CHECK((A.semigroup(0.0125) - A.semigroup(0.01) * A.semigroup(0.0025)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("defective matrix falls back to scaling and squaring") {
    Matrix J(2, 2);
    J << 0.0, 1.0, 0.0, 0.0;
    const SpectralCalculus S(J);
    CHECK(S.mode() == SpectralCalculus::Mode::ScalingSquaring);
    Matrix expect(2, 2);
    expect << 1.0, -0.3, 0.0, 1.0;
    CHECK((S.semigroup(0.3) - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("null mode") {
    for (int dim : {1, 2}) {
        const DiscreteOperator op = make_op(dim, 8, dim == 1 ? CoefficientSpec::scalar()
                                                             : CoefficientSpec::smooth_anisotropic(0.25));
        const SpectralCalculus S(op);
        CHECK(S.null_count() == 1);
        const Matrix& P = S.null_projector();
        CHECK((P * P - P).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((S.matrix() * P).cwiseAbs().maxCoeff() <= 1e-9 * S.norm_inf());
        CHECK((P * Vector::Ones(op.size()) - Vector::Ones(op.size())).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(S.min_nonnull_modulus() > 0.0);
        CHECK(S.max_modulus() <= S.norm_inf() * (1 + 1e-12));
    }
}

TEST_CASE("save and load") {
    const auto dir = std::filesystem::temp_directory_path() / "ndlab_spectral_test";
    std::filesystem::create_directories(dir);
    for (const CoefficientSpec& spec : {CoefficientSpec::scalar(), CoefficientSpec::smooth_anisotropic(0.5)}) {
        const DiscreteOperator op = make_op(1, 16, spec);
        const SpectralCalculus S(op);
        const auto file = dir / (to_string(spec.preset) + ".bin");
        S.save(file);
        const auto back = SpectralCalculus::load(file, S.matrix());
        REQUIRE(back.has_value());
        CHECK(back->mode() == S.mode());
        CHECK(back->semigroup(1e-3) == S.semigroup(1e-3));

        Matrix other = S.matrix();
        other(0, 0) += 1.0;
        CHECK_FALSE(SpectralCalculus::load(file, other).has_value());
    }
    CHECK_FALSE(SpectralCalculus::load(dir / "absent.bin", Matrix::Identity(2, 2)).has_value());
    std::filesystem::remove_all(dir);
}
