#pragma once

// Weighted Calderon-Zygmund decomposition by dyadic stopping time, and the
// empirical weak-(1,1) / L^p estimators for the Riesz transform.

#include <string>
#include <vector>

#include "ndlab/calculus.hpp"
#include "ndlab/weights.hpp"

namespace ndlab {

/// Dyadic cube: `level` halvings of the torus, integer index per axis.
struct DyadicCube {
    int level = 0;
    std::array<int, 2> index{0, 0};

    /// Sites per axis.
    int side(const Grid& g) const { return g.n >> level; }
    std::vector<int> sites(const Grid& g) const;
};

struct BadPart {
    DyadicCube cube;
    Ball ball;
    Vector b;
};

struct CZDecomposition {
    Grid grid;
    Weight weight;
    double alpha = 0.0;
    Vector g;
    std::vector<BadPart> bad_parts;
};

/// Selects maximal dyadic cubes with W-average of |f| >= alpha. The ball of a
/// cube is its circumscribed ball, radius sqrt(dim) * side / 2 about the centre.
CZDecomposition cz_decompose(const Vector& f, double alpha, const Weight& W);

/// Measured constants. Entries that are undefined for an empty decomposition are NaN.
struct CZReport {
    double c1_good_sup = 0.0;         ///< ||g||_inf / alpha
    double c2_bad_mass = 0.0;         ///< max_j sum_{B_j}|b_j| W h^n / (alpha W(B_j))
    double c3_ball_measure = 0.0;     ///< alpha sum_j W(B_j) / ||f||_{L^1_W}
    double c4_overlap = 0.0;          ///< max_x #{j : x in B_j}
    double c5_upper = 0.0;            ///< max_j avg_{W,B_j}|f| / alpha
    double c5_lower = 0.0;            ///< min_j avg_{W,B_j}|f| / alpha
    double reconstruction_error = 0.0;
    double mean_zero_error = 0.0;     ///< max_j |sum b_j W h^n| / sum_{Q_j} |f| W h^n
    bool supports_contained = true;
    int bad_count = 0;
    bool pass = false;

    /// (v) lower side: alpha <= avg_{W,B_j}|f| for every j.
    bool lower_average_holds() const { return bad_count == 0 || c5_lower >= 1.0 - 1e-12; }
};

CZReport verify_cz(const CZDecomposition& dec, const Vector& f);

/// JSON text with alpha, the selected cubes (level, index) and the measured constants.
std::string cz_to_json(const CZDecomposition& dec, const CZReport& report);

/// max over (f, alpha) of alpha W({|Tf| > alpha}) / ||f||_{L^1_W}. With an empty
/// alpha list the supremum over all alpha is taken exactly from the sorted |Tf|.
double weak_type_estimator(const RieszTransform& T, const Weight& W, const std::vector<Vector>& samples,
                           const std::vector<double>& alphas = {});

/// Whether alpha W({|Tf| > alpha}) <= ||Tf||_{L^1_W} holds in floating point for every alpha given.
bool chebyshev_consistent(const RieszTransform& T, const Weight& W, const Vector& f,
                          const std::vector<double>& alphas);

/// max over samples of ||Tf||_{L^p_W} / ||f||_{L^p_W}. Exponents outside (1, 2]
/// raise InvalidExponent unless `allow_unproven` admits p > 2.
double lp_norm_estimator(const RieszTransform& T, const Weight& W, double p, const std::vector<Vector>& samples,
                         bool allow_unproven = false);

}  // namespace ndlab
