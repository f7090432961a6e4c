#include "ndlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ndlab/errors.hpp"

namespace ndlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::pair<double, double> eigen_range(const SiteMatrix& a, int dim) {
    if (dim == 1) return {a.a11, a.a11};
    const double mean = 0.5 * (a.a11 + a.a22);
    const double radius = std::hypot(0.5 * (a.a11 - a.a22), a.a12);
    return {mean - radius, mean + radius};
}

}  // namespace

double Grid::distance(const LatticePoint& p, int b) const {
    const auto q = point(b);
    double sum = 0.0;
    for (int axis = 0; axis < dim; ++axis) {
        double d = std::fabs(p[axis] - q[axis]);
        d = std::fmod(d, double(n));
        d = std::min(d, n - d);
        sum += d * d;
    }
    return std::sqrt(sum) * h;
}

double Grid::diameter() const { return std::sqrt(double(dim)) / 2.0; }

Grid build_grid(int dim, int n) {
    if (dim != 1 && dim != 2)
        throw LabError(ErrorCode::InvalidDimension, "lattice",
                       "dimension must be 1 or 2, got " + std::to_string(dim));
    if (n < 4 || n % 2 != 0)
        throw LabError(ErrorCode::ResolutionTooSmall, "lattice",
                       "points per axis must be even and >= 4, got " + std::to_string(n));
    Grid g;
    g.dim = dim;
    g.n = n;
    g.h = 1.0 / n;
    g.total_sites = dim == 1 ? n : n * n;
    return g;
}

std::string to_string(CoefficientPreset preset) {
    switch (preset) {
        case CoefficientPreset::Identity: return "identity";
        case CoefficientPreset::Scalar: return "scalar";
        case CoefficientPreset::SmoothAnisotropic: return "smooth_anisotropic";
    }
    return "unknown";
}

CoefficientPreset parse_preset(const std::string& name) {
    if (name == "identity") return CoefficientPreset::Identity;
    if (name == "scalar") return CoefficientPreset::Scalar;
    if (name == "smooth_anisotropic") return CoefficientPreset::SmoothAnisotropic;
    throw LabError(ErrorCode::ConfigError, "lattice", "unknown coefficient preset '" + name + "'");
}

CoefficientField make_coefficients(const Grid& grid,
                                   const std::function<SiteMatrix(double, double)>& a,
                                   std::optional<double> lambda_min) {
    CoefficientField field;
    field.grid = grid;
    field.entries.resize(grid.total_sites);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int s = 0; s < grid.total_sites; ++s) {
        SiteMatrix m = a(grid.position(s, 0), grid.dim == 2 ? grid.position(s, 1) : 0.0);
        if (grid.dim == 1) {
            m.a12 = 0.0;
            m.a22 = m.a11;
        }
        const auto [emin, emax] = eigen_range(m, grid.dim);
        lo = std::min(lo, emin);
        hi = std::max(hi, emax);
        field.entries[s] = m;
    }
    if (!(lo > 0.0) || !std::isfinite(hi))
        throw LabError(ErrorCode::EllipticityViolated, "lattice",
                       "site eigenvalue " + std::to_string(lo) + " is not positive");
    field.min_eigenvalue = lo;
    field.max_eigenvalue = hi;
    field.lambda = std::min(lo, 1.0 / hi);
    if (lambda_min && field.lambda < *lambda_min)
        throw LabError(ErrorCode::EllipticityViolated, "lattice",
                       "tight ellipticity " + std::to_string(field.lambda) +
                           " below required " + std::to_string(*lambda_min));
    return field;
}

CoefficientField make_coefficients(const Grid& grid, const CoefficientSpec& spec) {
    const double amp = spec.amplitude;
    const double w = kTwoPi * spec.frequency;
    std::function<SiteMatrix(double, double)> a;
    switch (spec.preset) {
        case CoefficientPreset::Identity:
            a = [](double, double) { return SiteMatrix{}; };
            break;
        case CoefficientPreset::Scalar:
            a = [&grid, amp, w](double x, double y) {
                const double bump = grid.dim == 1 ? std::sin(w * x) : std::sin(w * x) * std::cos(w * y);
                const double v = 2.0 + amp * bump;
                return SiteMatrix{v, 0.0, v};
            };
            break;
        case CoefficientPreset::SmoothAnisotropic:
            a = [&grid, amp, w](double x, double y) {
                if (grid.dim == 1) {
                    const double v = 1.0 + amp * std::sin(w * x);
                    return SiteMatrix{v, 0.0, v};
                }
                const double m = 0.5 * (1.0 + std::sin(w * x) * std::sin(w * y));
                const double phi = w * (x - y) + 0.5 * std::numbers::pi;
                // unit reflection [[cos phi, sin phi], [sin phi, -cos phi]]
                return SiteMatrix{1.0 + amp * m * std::cos(phi), amp * m * std::sin(phi),
                                  1.0 - amp * m * std::cos(phi)};
            };
            break;
    }
    return make_coefficients(grid, a, spec.lambda_min);
}

DiscreteOperator::DiscreteOperator(CoefficientField coeffs, SparseMatrix L,
                                   std::vector<SparseMatrix> gradients)
    : coeffs_(std::move(coeffs)), L_(std::move(L)), grads_(std::move(gradients)) {
    L_.makeCompressed();
    for (int r = 0; r < L_.outerSize(); ++r) {
        double row = 0.0;
        for (SparseMatrix::InnerIterator it(L_, r); it; ++it) row += std::fabs(it.value());
        norm_inf_ = std::max(norm_inf_, row);
    }
}

Vector DiscreteOperator::apply(const Vector& u) const {
    if (!stencil_form_) return L_ * u;
    const Grid& g = grid();
    const double inv_h2 = 1.0 / (g.h * g.h);
    Vector out(g.total_sites);
    for (int s = 0; s < g.total_sites; ++s) {
        const SiteMatrix& a = coeffs_.entries[s];
        const auto c = g.coords(s);
        double acc = 0.0;
        for (int i = 0; i < g.dim; ++i) {
            const double second = (u[g.shift(s, i, +1)] - u[s]) - (u[s] - u[g.shift(s, i, -1)]);
            acc += a(i, i) * second;
        }
        if (g.dim == 2 && a.a12 != 0.0) {
            const double cross = (u[g.site(c[0] + 1, c[1] + 1)] - u[g.site(c[0] + 1, c[1] - 1)]) -
                                 (u[g.site(c[0] - 1, c[1] + 1)] - u[g.site(c[0] - 1, c[1] - 1)]);
            acc += 2.0 * a.a12 * cross / 4.0;
        }
        out[s] = -acc * inv_h2;
    }
    return out;
}

VectorField DiscreteOperator::gradient(const Vector& u) const {
    VectorField out;
    out.reserve(grads_.size());
    for (const auto& d : grads_) out.push_back(d * u);
    return out;
}

bool DiscreteOperator::is_symmetric(double rel_tol) const {
    const SparseMatrix t = SparseMatrix(L_.transpose());
    const double diff = (L_ - t).cwiseAbs().sum();
    return diff <= rel_tol * std::max(1.0, L_.cwiseAbs().sum());
}

DiscreteOperator assemble_operator(const Grid& grid, const CoefficientField& coeffs) {
    if (coeffs.grid.n != grid.n || coeffs.grid.dim != grid.dim)
        throw LabError(ErrorCode::InvalidArgument, "lattice", "coefficient field built on another grid");
    const int n = grid.total_sites;
    const double inv_h2 = 1.0 / (grid.h * grid.h);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(n) * (grid.dim == 1 ? 3 : 9));

    for (int s = 0; s < n; ++s) {
        const SiteMatrix& a = coeffs.entries[s];
        for (int i = 0; i < grid.dim; ++i) {
            // -a_ii (u(x+e_i) - 2u(x) + u(x-e_i)) / h^2
            const double c = a(i, i) * inv_h2;
            trips.emplace_back(s, s, 2.0 * c);
            trips.emplace_back(s, grid.shift(s, i, +1), -c);
            trips.emplace_back(s, grid.shift(s, i, -1), -c);
        }
        if (grid.dim == 2 && a.a12 != 0.0) {
            // (a_12 + a_21) times the 4-point cross stencil / (4 h^2)
            const double c = 2.0 * a.a12 * inv_h2 / 4.0;
            auto at = [&](int o0, int o1) { return grid.site(grid.coords(s)[0] + o0, grid.coords(s)[1] + o1); };
            trips.emplace_back(s, at(+1, +1), -c);
            trips.emplace_back(s, at(-1, -1), -c);
            trips.emplace_back(s, at(+1, -1), +c);
            trips.emplace_back(s, at(-1, +1), +c);
        }
    }
    SparseMatrix L(n, n);
    L.setFromTriplets(trips.begin(), trips.end());
    L.prune(0.0);

    std::vector<SparseMatrix> grads;
    const double inv_2h = 1.0 / (2.0 * grid.h);
    for (int axis = 0; axis < grid.dim; ++axis) {
        std::vector<Eigen::Triplet<double>> dt;
        dt.reserve(2 * std::size_t(n));
        for (int s = 0; s < n; ++s) {
            dt.emplace_back(s, grid.shift(s, axis, +1), inv_2h);
            dt.emplace_back(s, grid.shift(s, axis, -1), -inv_2h);
        }
        SparseMatrix d(n, n);
        d.setFromTriplets(dt.begin(), dt.end());
        grads.push_back(std::move(d));
    }
    DiscreteOperator op(coeffs, std::move(L), std::move(grads));
    op.stencil_form_ = true;
    return op;
}

Vector sample(const Grid& grid, const std::function<double(double, double)>& f) {
    Vector v(grid.total_sites);
    for (int s = 0; s < grid.total_sites; ++s)
        v[s] = f(grid.position(s, 0), grid.dim == 2 ? grid.position(s, 1) : 0.0);
    return v;
}

}  // namespace ndlab
