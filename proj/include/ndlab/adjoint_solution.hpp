#pragma once

// Discrete global adjoint solution W (L^T W = 0, W > 0, mean 1), the
// W-weighted adjoint operator and the energy/accretivity diagnostics.

#include <string>
#include <vector>

#include "ndlab/lattice.hpp"
#include "ndlab/weights.hpp"

namespace ndlab {

struct AdjointSolution {
    Weight W;
    /// ||L^T W||_inf for the normalized W.
    double residual = 0.0;
    int nullspace_dim = 0;
    double min_value = 0.0;
    /// "inverse-iteration" or "eigendecomposition".
    std::string method;
};

struct AdjointOptions {
    /// Relative sign tolerance; smaller entries are clamped up to it.
    double sign_tolerance = 1e-8;
    /// |mu| <= null_tolerance * ||L||_inf counts as a null eigenvalue of L^T.
    double null_tolerance = 1e-8;
    int max_iterations = 8;
    /// Largest size for the dense eigendecomposition fallback.
    int dense_fallback_limit = 4096;
};

AdjointSolution solve_adjoint(const DiscreteOperator& op, const AdjointOptions& options = {});

/// CSV grid dump: a `dim,N,h,normalization,residual` header line and its values,
/// then one `site,x0,x1,W` row per site.
std::string adjoint_csv(const AdjointSolution& sol);

/// |E_W(f) - <f, Lf>_W| / (||f||^2_{L^2_W} Lambda), where E_W is the weighted
/// energy form sum_x W sum_ij a_ij (D_i f)(D_j f) h^n and Lambda = max_x |A(x)|
/// bounds L as a map from second derivatives. The form averages the forward and
/// backward difference products, which is the pairing under which summation by
/// parts reproduces the compact second-difference stencil.
double energy_identity_residual(const DiscreteOperator& op, const Weight& W, const Vector& f);

/// Energy form alone (see energy_identity_residual).
double weighted_energy(const DiscreteOperator& op, const Weight& W, const Vector& f);

/// diag(W)^{-1} L^T diag(W): the adjoint of L in <u,v>_W = sum u v W h^n.
DiscreteOperator normalized_adjoint(const DiscreteOperator& op, const Weight& W);

/// <u, v>_W
double weighted_inner(const Weight& W, const Vector& u, const Vector& v);
double weighted_norm(const Weight& W, const Vector& u, double p = 2.0);

/// min over u of Re<Lu,u>_W / ||u||^2_W, i.e. the bottom of the spectrum of the
/// symmetric part of diag(W) L relative to diag(W).
double accretivity_check(const DiscreteOperator& op, const Weight& W);
/// 10 h^2 ||L||_inf
double accretivity_tolerance(const DiscreteOperator& op);

/// max |Im<Lu,u>_W| / Re<Lu,u>_W over complex samples u = re + i im with Re > 0.
double sectoriality_estimate(const DiscreteOperator& op, const Weight& W,
                             const std::vector<std::pair<Vector, Vector>>& samples);

/// sum_x (Lf)(x) W(x) h^n, which vanishes up to the adjoint residual.
double stationarity_defect(const DiscreteOperator& op, const Weight& W, const Vector& f);

}  // namespace ndlab
