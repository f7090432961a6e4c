#pragma once

// Dense functional calculus for a discrete operator: f(L) = V f(Lambda) V^{-1}.
//
// Three factorisations are used, chosen at construction:
//   Symmetric       L = Q Lambda Q^T
//   Symmetrizable   L = D S with D > 0 diagonal and S symmetric, so
//                   D^{-1/2} L D^{1/2} is symmetric (scalar coefficient fields)
//   General         complex eigendecomposition of a nonsymmetric L
// When the general eigenvector basis is too ill-conditioned the semigroup is
// evaluated by Pade scaling-and-squaring instead.

#include <complex>
#include <filesystem>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "ndlab/lattice.hpp"

namespace ndlab {

using Complex = std::complex<double>;
using ScalarFunction = std::function<Complex(Complex)>;

struct SpectralOptions {
    /// Eigenvector condition number above which the semigroup falls back to scaling-and-squaring.
    double condition_threshold = 1e8;
    /// |lambda| <= null_tolerance * ||L||_inf counts as the null mode.
    double null_tolerance = 1e-10;
};

class SpectralCalculus {
public:
    enum class Mode { Symmetric, Symmetrizable, General, ScalingSquaring };

    explicit SpectralCalculus(const DiscreteOperator& op, SpectralOptions options = {});
    /// Decomposes an arbitrary dense matrix (no symmetrizer is attempted).
    explicit SpectralCalculus(const Matrix& L, SpectralOptions options = {});

    Mode mode() const { return mode_; }
    int size() const { return int(L_.rows()); }
    const Matrix& matrix() const { return L_; }
    const Eigen::VectorXcd& eigenvalues() const { return values_; }
    double condition_number() const { return condition_; }
    double norm_inf() const { return norm_inf_; }
    double null_threshold() const { return options_.null_tolerance * norm_inf_; }
    bool is_null(Complex lambda) const { return std::abs(lambda) <= null_threshold(); }
    int null_count() const;
    /// Smallest and largest |lambda| over non-null eigenvalues.
    double min_nonnull_modulus() const;
    double max_modulus() const;
    double min_real_part() const;

    /// Whether f(L) for arbitrary f is available (eigen modes only).
    bool diagonalized() const { return mode_ != Mode::ScalingSquaring; }

    /// f(L) (real part; L is real and f is assumed to respect conjugation).
    Matrix apply(const ScalarFunction& f) const;
    /// f(L) B
    Matrix apply(const ScalarFunction& f, const Matrix& B) const;
    Vector apply(const ScalarFunction& f, const Vector& v) const;

    /// e^{-tau L}; tau = 0 gives the identity exactly.
    Matrix semigroup(double tau) const;

    /// Projection onto the null mode along the range: P0 = r l^T with L r = 0, l^T L = 0, l^T r = 1.
    const Matrix& null_projector() const { return null_projector_; }

    void save(const std::filesystem::path& path) const;
    static std::optional<SpectralCalculus> load(const std::filesystem::path& path, const Matrix& L,
                                                SpectralOptions options = {});

private:
    SpectralCalculus() = default;
    void decompose(const std::optional<Vector>& symmetrizer);
    void finish();

    SpectralOptions options_;
    Mode mode_ = Mode::General;
    Matrix L_;
    double norm_inf_ = 0.0;
    double condition_ = 1.0;
    Eigen::VectorXcd values_;
    // Real factorisation for Symmetric/Symmetrizable: L = Vr diag Vr_inv.
    Matrix real_vectors_;
    Matrix real_inverse_;
    // Complex factorisation for General / ScalingSquaring.
    Eigen::MatrixXcd vectors_;
    Eigen::MatrixXcd inverse_;
    Matrix null_projector_;
};

}  // namespace ndlab
