#include "ndlab/semigroup.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "ndlab/errors.hpp"

namespace ndlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_scale(double t, const char* what) {
    if (!(t > 0.0 && t <= 0.25 + 1e-12))
        throw LabError(ErrorCode::InvalidArgument, "semigroup", std::string(what) + " must lie in (0, 1/4]");
}

void fill_row_checks(KernelMatrix& k, double target) {
    const double hn = k.grid.cell_volume();
    k.checks.row_quadrature_error = ((k.entries.rowwise().sum() * hn).array() - target).abs().maxCoeff();
    k.checks.min_entry = k.entries.minCoeff();
}

Vector ball_masses(const Grid& g, const Weight& W, double radius) {
    Vector out(g.total_sites);
    for (int x = 0; x < g.total_sites; ++x) out[x] = ball_mass(g, Ball{g.point(x), radius / g.h}, W.values);
    return out;
}

// Choose the largest admissible rate: C(rate) finite and within growth_limit of C(first rate).
template <class Fit>
void select_rate(Fit& fit, const FitOptions& opt, double& rate_out, double& const_out) {
    const double base = fit.constants.front();
    if (!std::isfinite(base) || base > opt.max_constant)
        throw LabError(ErrorCode::NoFiniteConstant, "semigroup",
                       "bound ratio unbounded already at rate " + std::to_string(fit.rates.front()));
    rate_out = fit.rates.front();
    const_out = base;
    for (std::size_t i = 1; i < fit.rates.size(); ++i) {
        if (!std::isfinite(fit.constants[i]) || fit.constants[i] > opt.growth_limit * base) break;
        rate_out = fit.rates[i];
        const_out = fit.constants[i];
    }
}

double lookup(const std::vector<double>& rates, const std::vector<double>& constants, double rate) {
    for (std::size_t i = 0; i < rates.size(); ++i)
        if (std::fabs(rates[i] - rate) < 1e-12) return constants[i];
    return kInf;
}

}  // namespace

AnalyzedOperator::AnalyzedOperator(DiscreteOperator op, SpectralOptions options)
    : op_(std::move(op)), spectral_(std::make_shared<SpectralCalculus>(op_, options)) {}

AnalyzedOperator::AnalyzedOperator(DiscreteOperator op, std::shared_ptr<const SpectralCalculus> spectral)
    : op_(std::move(op)), spectral_(std::move(spectral)) {}

bool KernelMatrix::invariants_hold(double column_tol) const {
    if (checks.row_quadrature_error > 1e-10) return false;
    if (kind == KernelKind::Heat && checks.min_entry < -1e-10) return false;
    if (checks.weighted_column_error >= 0.0 && checks.weighted_column_error > column_tol) return false;
    return true;
}

Matrix heat_matrix(const AnalyzedOperator& A, double t) {
    if (t < 0.0) throw LabError(ErrorCode::InvalidArgument, "semigroup", "time must be nonnegative");
    return A.spectral().semigroup(t * t);
}

KernelMatrix heat_kernel(const AnalyzedOperator& A, double t) {
    require_scale(t, "t");
    KernelMatrix k;
    k.grid = A.grid();
    k.t = t;
    k.kind = KernelKind::Heat;
    k.entries = heat_matrix(A, t) / A.grid().cell_volume();
    fill_row_checks(k, 1.0);
    return k;
}

KernelMatrix heat_kernel(const AnalyzedOperator& A, double t, const Weight& W) {
    KernelMatrix k = heat_kernel(A, t);
    const Vector cols = (W.values.transpose() * k.entries).transpose() * k.grid.cell_volume();
    k.checks.weighted_column_error = (cols - W.values).cwiseAbs().maxCoeff();
    return k;
}

KernelMatrix tle_kernel(const AnalyzedOperator& A, double t) {
    require_scale(t, "t");
    KernelMatrix k;
    k.grid = A.grid();
    k.t = t;
    k.kind = KernelKind::TLe;
    const double tau = t * t;
    const SpectralCalculus& sc = A.spectral();
    Matrix m = sc.diagonalized() ? sc.apply([tau](Complex z) { return tau * z * std::exp(-tau * z); })
                                 : Matrix(tau * sc.matrix() * sc.semigroup(tau));
    k.entries = m / A.grid().cell_volume();
    fill_row_checks(k, 0.0);
    return k;
}

std::string to_string(BoundSide side) { return side == BoundSide::Upper ? "upper" : "lower"; }

std::vector<double> FitOptions::default_rates() {
    std::vector<double> r;
    for (int i = 1; i <= 20; ++i) r.push_back(0.05 * i);
    return r;
}

double BoundFit::constant_at(double rate) const { return lookup(rates, constants, rate); }

double AnnulusFit::constant_at(double rate) const {
    double C = 0.0;
    for (const AnnulusSample& a : samples)
        C = std::max(C, a.value * a.s * std::exp(rate * a.t * a.t / (a.s * a.s)) / a.w_y);
    return C;
}

BoundFit gaussian_bound_fit(const std::vector<KernelMatrix>& kernels, const Weight& W, BoundSide side,
                            const FitOptions& opt) {
    if (kernels.empty()) throw LabError(ErrorCode::InvalidArgument, "semigroup", "no kernels to fit");
    if (!W.strictly_positive())
        throw LabError(ErrorCode::NonPositiveWeight, "semigroup", "W must be strictly positive");
    BoundFit fit;
    fit.side = side;
    fit.rates = opt.rates;
    fit.constants.assign(opt.rates.size(), 0.0);

    for (const KernelMatrix& k : kernels) {
        const Grid& g = k.grid;
        const double t = k.t;
        require_scale(t, "t");
        const Vector WB = ball_masses(g, W, t);
        // For each distinct lattice distance keep the worst base ratio; the
        // rate enters only through exp(+-c d^2/t^2).
        std::map<double, double> worst;
        for (int x = 0; x < g.total_sites; ++x) {
            for (int y = 0; y < g.total_sites; ++y) {
                const double d = g.distance(x, y);
                const double key = std::round(d * d / (g.h * g.h) * 4.0) / 4.0;
                const double gamma = k.kind == KernelKind::TLe ? std::fabs(k.entries(x, y)) : k.entries(x, y);
                double base;
                if (side == BoundSide::Upper) {
                    const double env = std::min(1.0 / WB[x], 1.0 / WB[y]) * W.values[y];
                    base = gamma / env;
                } else {
                    if (d > opt.near_diagonal * t + 1e-12) continue;
                    const double env = std::max(1.0 / WB[x], 1.0 / WB[y]) * W.values[y];
                    base = gamma > 0.0 ? env / gamma : kInf;
                }
                auto [it, inserted] = worst.try_emplace(key, base);
                if (!inserted) it->second = std::max(it->second, base);
            }
        }
        for (std::size_t i = 0; i < opt.rates.size(); ++i) {
            const double c = opt.rates[i];
            double C = fit.constants[i];
            for (const auto& [key, base] : worst) {
                const double q = key * g.h * g.h / (t * t);  // d^2 / t^2
                const double factor = side == BoundSide::Upper ? std::exp(c * q) : std::exp(-q / c);
                C = std::max(C, base * factor);
            }
            fit.constants[i] = C;
        }
    }
    select_rate(fit, opt, fit.c_fit, fit.C_fit);
    fit.residual_max = fit.C_fit;
    return fit;
}

BoundFit gaussian_bound_fit(const AnalyzedOperator& A, const Weight& W, const std::vector<double>& tgrid,
                            BoundSide side, const FitOptions& opt) {
    std::vector<KernelMatrix> ks;
    for (double t : tgrid) ks.push_back(heat_kernel(A, t));
    return gaussian_bound_fit(ks, W, side, opt);
}

double fit_refinement_change(const BoundFit& coarse, const BoundFit& fine) {
    const double c = std::min(coarse.c_fit, fine.c_fit);
    const double a = coarse.constant_at(c);
    const double b = fine.constant_at(c);
    return std::fabs(b - a) / a;
}

Vector heat_kernel_column(const AnalyzedOperator& A, double s, int y) {
    require_scale(s, "s");
    const int n = A.op().size();
    const double tau = s * s;
    const SpectralCalculus& sc = A.spectral();
    Vector e = Vector::Zero(n);
    e[y] = 1.0;
    Vector col = sc.diagonalized() ? sc.apply([tau](Complex z) { return std::exp(-tau * z); }, e)
                                   : Vector(sc.semigroup(tau).col(y));
    return col / A.grid().cell_volume();
}

double grad_kernel_energy(const AnalyzedOperator& A, const Weight& W, double s, int y, double gamma) {
    const Grid& g = A.grid();
    const VectorField grad = A.op().gradient(heat_kernel_column(A, s, y));
    double acc = 0.0;
    for (int x = 0; x < g.total_sites; ++x) {
        double sq = 0.0;
        for (const Vector& c : grad) sq += c[x] * c[x];
        const double d = g.distance(x, y);
        acc += sq * std::exp(2.0 * gamma * d * d / (s * s)) * W.values[x];
    }
    return acc * g.cell_volume();
}

double grad_energy_constant(const AnalyzedOperator& A, const Weight& W, double s, int y, double gamma) {
    const Grid& g = A.grid();
    const double ball = ball_mass(g, Ball{g.point(y), s / g.h}, W.values);
    const double wy = W.values[y];
    return grad_kernel_energy(A, W, s, y, gamma) * s * s * ball / (wy * wy);
}

double annulus_grad_bound(const AnalyzedOperator& A, const Weight& W, double s, double t, int y) {
    const Grid& g = A.grid();
    const VectorField grad = A.op().gradient(heat_kernel_column(A, s, y));
    double acc = 0.0;
    int count = 0;
    for (int x = 0; x < g.total_sites; ++x) {
        if (t > 0.0 && !(g.distance(x, y) > t)) continue;
        double sq = 0.0;
        for (const Vector& c : grad) sq += c[x] * c[x];
        acc += std::sqrt(sq) * W.values[x];
        ++count;
    }
    if (count == 0) throw LabError(ErrorCode::EmptyAnnulus, "semigroup", "no site farther than t from y");
    return acc * g.cell_volume();
}

AnnulusFit fit_annulus(const std::vector<AnnulusSample>& samples) {
    if (samples.empty()) throw LabError(ErrorCode::InvalidArgument, "semigroup", "no annulus samples");
    AnnulusFit fit;
    fit.samples = samples;
    // Profiles t -> value at fixed (s, y); beta is the slowest decay in (t/s)^2
    // between any two sampled radii of one profile.
    std::map<std::pair<double, int>, std::vector<const AnnulusSample*>> profiles;
    for (const AnnulusSample& a : samples) profiles[{a.s, a.y}].push_back(&a);
    double beta = std::numeric_limits<double>::infinity();
    for (const auto& [key, prof] : profiles)
        for (const AnnulusSample* a : prof)
            for (const AnnulusSample* b : prof) {
                if (!(b->t > a->t)) continue;
                const double dq = (b->t * b->t - a->t * a->t) / (a->s * a->s);
                beta = std::min(beta, -std::log(b->value / a->value) / dq);
            }
    if (!std::isfinite(beta))
        throw LabError(ErrorCode::InvalidArgument, "semigroup", "annulus fit needs two radii per profile");
    fit.beta = beta;
    fit.C = fit.constant_at(beta);
    return fit;
}

}  // namespace ndlab
