#pragma once

// Functional calculus on top of the spectral factorisation: sqrt(L), L^{-1/2}
// by subordination quadrature, the Riesz transform D L^{-1/2}, Kato ratios and
// the kernel K_t of D L^{-1/2} (I - e^{-tL}).

#include <filesystem>
#include <string>
#include <vector>

#include "ndlab/semigroup.hpp"

namespace ndlab {

/// Nodes and weights for  int_0^inf F(s) ds  tuned so that
/// pi^{-1/2} sum_k w_k s_k^{-1/2} e^{-s_k lambda} = lambda^{-1/2} on a spectral interval.
///
/// The substitution s = sigma exp(v - e^{-v}) (double-exponential decay at
/// both ends) is sampled with the trapezoid rule in v; sigma = (lo hi)^{-1/2}.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::string scheme = "log-double-exponential-trapezoid";
    int node_count = 0;
    /// Interval the rule was designed for.
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;

    static QuadratureRule for_interval(double lambda_lo, double lambda_hi, int node_count);

    /// pi^{-1/2} sum_k w_k s_k^{-1/2} e^{-s_k lambda}
    double inv_sqrt(double lambda) const;
    /// Largest relative error of inv_sqrt over log-spaced samples of [lo, hi].
    double max_relative_error(double lo, double hi, int samples = 400) const;
};

/// Rule covering [lambda_min/2, 2 lambda_max] of the non-null spectrum.
QuadratureRule subordination_rule(const AnalyzedOperator& A, int node_count = 64);

/// 10 h^2 ||L||_inf
double spectral_slack(const AnalyzedOperator& A);

/// Principal square root by eigen calculus, null mode mapped to 0.
Matrix sqrt_op(const SpectralCalculus& S, double eps_spec);
Matrix sqrt_op(const AnalyzedOperator& A);

/// Eigen-calculus L^{-1/2}, zero on the null mode.
Matrix inv_sqrt_eigen(const AnalyzedOperator& A);

struct SubordinationResult {
    Matrix matrix;
    /// ||Q - Q_eig||_inf / ||Q_eig||_inf against the eigen oracle.
    double relative_error = 0.0;
};

/// pi^{-1/2} sum_k w_k s_k^{-1/2} (e^{-s_k L} - P0), summed matrix by matrix.
Matrix subordination_sum(const AnalyzedOperator& A, const QuadratureRule& rule);

/// subordination_sum compared with the eigen oracle. Throws QuadratureNotConverged
/// when they disagree by more than 1e-6.
SubordinationResult inv_sqrt_subordination(const AnalyzedOperator& A, const QuadratureRule& rule);

/// D_i L^{-1/2} for every axis, as dense matrices.
class RieszTransform {
public:
    RieszTransform(const AnalyzedOperator& A, const Matrix& inv_sqrt);
    explicit RieszTransform(const AnalyzedOperator& A);
    RieszTransform(Grid grid, std::vector<Matrix> components);

    const Grid& grid() const { return grid_; }
    const std::vector<Matrix>& components() const { return components_; }
    VectorField apply(const Vector& f) const;
    /// |Tf|, the pointwise Euclidean norm over components.
    Vector magnitude(const Vector& f) const;

private:
    Grid grid_;
    std::vector<Matrix> components_;
};

VectorField riesz_transform(const AnalyzedOperator& A, const Vector& f);

/// ||grad f||_{L^2_W} with the centered gradients.
double gradient_norm(const DiscreteOperator& op, const Weight& W, const Vector& f);

struct KatoRatios {
    double direct = 0.0;   ///< ||sqrt(L) f||_W / ||grad f||_W
    double adjoint = 0.0;  ///< ||sqrt(tilde L) f||_W / ||grad f||_W
};

/// Precomputed square roots of L and of tilde L = W^{-1} L^T W.
class KatoPair {
public:
    KatoPair(const AnalyzedOperator& A, const Weight& W);
    KatoRatios ratios(const Vector& f) const;

private:
    DiscreteOperator op_;
    Weight W_;
    Matrix sqrt_;
    Matrix sqrt_tilde_;
};

KatoRatios kato_ratios(const AnalyzedOperator& A, const Weight& W, const Vector& f);

/// Vector-valued kernel: (K_t f)_i(x) = sum_y entries[i](x,y) f(y) h^n.
struct KtKernel {
    Grid grid;
    double t = 0.0;
    std::vector<Matrix> entries;
    /// Relative disagreement with D (Q - Q e^{-tL}) from the eigen oracle.
    double oracle_error = 0.0;

    VectorField apply(const Vector& f) const;
};

/// K_t = pi^{-1/2} sum_k w_k D [ s_k^{-1/2} e^{-s_k L} - (s'_k - t)^{-1/2} e^{-s'_k L} ] / h^n
/// where s'_k = s_k + t carries the upper piece after u = s - t.
KtKernel kt_kernel(const AnalyzedOperator& A, double t, const QuadratureRule& rule);

/// max_y sum_{dist(x,y) >= sqrt t} |K_t(x,y)| W(x) h^n / W(y)
double kt_bound_check(const KtKernel& K, const Weight& W, double t);

/// On-disk store for spectral factorisations. Files are named by `key` and
/// validated against a content hash of L when loaded.
class SpectralCache {
public:
    explicit SpectralCache(std::filesystem::path dir);
    AnalyzedOperator get(const DiscreteOperator& op, const std::string& key) const;
    bool enabled() const { return !dir_.empty(); }

private:
    std::filesystem::path dir_;
};

}  // namespace ndlab
