#pragma once

// Heat semigroup e^{-t^2 L}, t^2 L e^{-t^2 L}, their kernels, Gaussian bound
// fits and the gradient-kernel estimates.

#include <memory>
#include <string>
#include <vector>

#include "ndlab/lattice.hpp"
#include "ndlab/spectral.hpp"
#include "ndlab/weights.hpp"

namespace ndlab {

/// An assembled operator together with its (expensive) spectral factorisation.
class AnalyzedOperator {
public:
    explicit AnalyzedOperator(DiscreteOperator op, SpectralOptions options = {});
    AnalyzedOperator(DiscreteOperator op, std::shared_ptr<const SpectralCalculus> spectral);

    const DiscreteOperator& op() const { return op_; }
    const SpectralCalculus& spectral() const { return *spectral_; }
    std::shared_ptr<const SpectralCalculus> spectral_ptr() const { return spectral_; }
    const Grid& grid() const { return op_.grid(); }

private:
    DiscreteOperator op_;
    std::shared_ptr<const SpectralCalculus> spectral_;
};

enum class KernelKind { Heat, TLe };

struct KernelChecks {
    /// max_x |sum_y K(x,y) h^n - target| with target 1 (heat) or 0 (tLe).
    double row_quadrature_error = 0.0;
    /// max_y |sum_x K(x,y) W(x) h^n - W(y)|; negative when no W was supplied.
    double weighted_column_error = -1.0;
    double min_entry = 0.0;
};

/// K(x,y) such that (Op f)(x) = sum_y K(x,y) f(y) h^n.
struct KernelMatrix {
    Grid grid;
    Matrix entries;
    double t = 0.0;
    KernelKind kind = KernelKind::Heat;
    KernelChecks checks;

    /// Tolerances: row quadrature 1e-10, positivity -1e-10 (heat), weighted
    /// columns within `column_tol` when they were evaluated.
    bool invariants_hold(double column_tol) const;
};

/// e^{-t^2 L} as a matrix; t = 0 is the identity.
Matrix heat_matrix(const AnalyzedOperator& A, double t);

KernelMatrix heat_kernel(const AnalyzedOperator& A, double t);
/// Also evaluates the W-weighted column quadrature.
KernelMatrix heat_kernel(const AnalyzedOperator& A, double t, const Weight& W);
KernelMatrix tle_kernel(const AnalyzedOperator& A, double t);

enum class BoundSide { Upper, Lower };
std::string to_string(BoundSide side);

struct FitOptions {
    /// Candidate decay rates, tried in increasing order.
    std::vector<double> rates = default_rates();
    /// A rate is admissible while C(rate) <= growth_limit * C(smallest rate).
    double growth_limit = 2.0;
    /// C(smallest rate) above this is reported as NoFiniteConstant.
    double max_constant = 1e6;
    /// Lower fits only test pairs with dist(x,y) <= near_diagonal * t.
    double near_diagonal = 3.0;

    static std::vector<double> default_rates();
};

struct BoundFit {
    BoundSide side = BoundSide::Upper;
    double c_fit = 0.0;
    double C_fit = 0.0;
    /// Largest bound ratio over the tested triples at c_fit (equals C_fit).
    double residual_max = 0.0;
    /// C(c) for every candidate rate, aligned with FitOptions::rates.
    std::vector<double> rates;
    std::vector<double> constants;

    /// C at a given candidate rate; +inf when the rate was not tried.
    double constant_at(double rate) const;
};

/// Upper:  K(x,y) <= C min(1/W(B_t(x)), 1/W(B_t(y))) exp(-c d^2/t^2) W(y)
/// Lower:  K(x,y) >= (1/C) max(1/W(B_t(x)), 1/W(B_t(y))) exp(-d^2/(c t^2)) W(y), d <= 3t
/// TLe kernels are fitted through their absolute value.
BoundFit gaussian_bound_fit(const std::vector<KernelMatrix>& kernels, const Weight& W, BoundSide side,
                            const FitOptions& options = {});
BoundFit gaussian_bound_fit(const AnalyzedOperator& A, const Weight& W, const std::vector<double>& tgrid,
                            BoundSide side, const FitOptions& options = {});

/// Relative change of C between two resolutions, measured at the smaller of the two fitted rates.
double fit_refinement_change(const BoundFit& coarse, const BoundFit& fine);

/// Column y of the heat kernel Gamma_{s^2}(., y).
Vector heat_kernel_column(const AnalyzedOperator& A, double s, int y);

/// sum_x |D Gamma_{s^2}(.,y)(x)|^2 exp(2 gamma d^2/s^2) W(x) h^n
double grad_kernel_energy(const AnalyzedOperator& A, const Weight& W, double s, int y, double gamma);
/// grad_kernel_energy * s^2 W(B_s(y)) / W(y)^2
double grad_energy_constant(const AnalyzedOperator& A, const Weight& W, double s, int y, double gamma);

/// sum_{dist(x,y) > t} |D Gamma_{s^2}(.,y)(x)| W(x) h^n; t <= 0 integrates over the whole torus.
double annulus_grad_bound(const AnalyzedOperator& A, const Weight& W, double s, double t, int y);

struct AnnulusSample {
    double s = 0.0;
    double t = 0.0;
    int y = 0;
    double value = 0.0;
    double w_y = 1.0;
};

struct AnnulusFit {
    double beta = 0.0;
    double C = 0.0;
    std::vector<AnnulusSample> samples;

    /// max over samples of value s exp(rate t^2/s^2) / W(y)
    double constant_at(double rate) const;
};

/// Fits value <= C s^{-1} exp(-beta t^2/s^2) W(y). beta is the largest rate at which
/// every sampled profile t -> value(s, t, y) decays at least like exp(-beta t^2/s^2)
/// between any two of its radii (non-positive when some profile fails to decay);
/// C is the amplitude at that rate.
AnnulusFit fit_annulus(const std::vector<AnnulusSample>& samples);

}  // namespace ndlab
