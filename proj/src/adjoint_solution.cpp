#include "ndlab/adjoint_solution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "ndlab/errors.hpp"

namespace ndlab {

namespace {

using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;

struct NullSearch {
    bool ok = false;
    int dim = 0;
    Vector vector;
};

Matrix orthonormalize(const Matrix& X) {
    Eigen::HouseholderQR<Matrix> qr(X);
    return qr.householderQ() * Matrix::Identity(X.rows(), X.cols());
}

// Block inverse iteration on L^T with a tiny negative shift, followed by a
// Rayleigh-Ritz step on the converged subspace.
NullSearch inverse_iteration(const DiscreteOperator& op, const AdjointOptions& opt) {
    NullSearch out;
    const int n = op.size();
    const double norm = op.norm_inf();
    ColSparse At = ColSparse(op.matrix().transpose());
    ColSparse shifted = At;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += 1e-10 * norm;
    Eigen::SparseLU<ColSparse, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) return out;

    const int k = std::min(3, n);
    Matrix X(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) X(i, j) = 1.0 + 0.5 * std::sin(1.3 + 0.7 * (i + 1) * (j + 1)) + (j == 0 ? 1.0 : 0.0);
    X = orthonormalize(X);
    for (int it = 0; it < opt.max_iterations; ++it) {
        Matrix Y = lu.solve(X);
        if (lu.info() != Eigen::Success || !Y.allFinite()) return out;
        X = orthonormalize(Y);
    }
    const Matrix H = X.transpose() * (At * X);
    Eigen::EigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) return out;
    const double tol = opt.null_tolerance * norm;
    int best = 0;
    for (int j = 0; j < k; ++j) {
        if (std::abs(es.eigenvalues()[j]) <= tol) ++out.dim;
        if (std::abs(es.eigenvalues()[j]) < std::abs(es.eigenvalues()[best])) best = j;
    }
    Vector v = (X * es.eigenvectors().col(best)).real();
    if (v.norm() == 0.0) v = X.col(0);
    for (int it = 0; it < 2; ++it) {
        v = lu.solve(Vector(v / v.norm()));
        if (!v.allFinite()) return out;
    }
    out.vector = v / v.norm();
    const double res = (At * out.vector).cwiseAbs().maxCoeff();
    out.ok = res <= 1e-9 * norm * out.vector.cwiseAbs().maxCoeff();
    return out;
}

NullSearch dense_search(const DiscreteOperator& op, const AdjointOptions& opt) {
    NullSearch out;
    const Matrix At = op.dense().transpose();
    Eigen::EigenSolver<Matrix> es(At, true);
    if (es.info() != Eigen::Success)
        throw LabError(ErrorCode::EigendecompositionFailed, "adjoint_solution", "dense eigensolver failed");
    const double tol = opt.null_tolerance * op.norm_inf();
    int best = 0;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        if (std::abs(es.eigenvalues()[j]) <= tol) ++out.dim;
        if (std::abs(es.eigenvalues()[j]) < std::abs(es.eigenvalues()[best])) best = int(j);
    }
    Eigen::VectorXcd v = es.eigenvectors().col(best);
    // rotate the complex phase so the vector is real
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    v *= std::conj(v[arg]) / std::abs(v[arg]);
    out.vector = v.real();
    out.ok = true;
    return out;
}

}  // namespace

AdjointSolution solve_adjoint(const DiscreteOperator& op, const AdjointOptions& opt) {
    AdjointSolution sol;
    NullSearch search = inverse_iteration(op, opt);
    sol.method = "inverse-iteration";
    if (!search.ok) {
        if (op.size() > opt.dense_fallback_limit)
            throw LabError(ErrorCode::EigendecompositionFailed, "adjoint_solution",
                           "inverse iteration failed and the operator is too large for the dense fallback");
        search = dense_search(op, opt);
        sol.method = "eigendecomposition";
    }
    sol.nullspace_dim = search.dim;
    if (search.dim != 1)
        throw LabError(ErrorCode::NullspaceNotSimple, "adjoint_solution",
                       "null space of L^T has dimension " + std::to_string(search.dim));

    Vector w = search.vector;
    if (w.sum() < 0.0) w = -w;
    const double tol = opt.sign_tolerance * w.cwiseAbs().maxCoeff();
    if (w.minCoeff() < -tol)
        throw LabError(ErrorCode::SignIndefinite, "adjoint_solution",
                       "null vector changes sign (min " + std::to_string(w.minCoeff() / w.cwiseAbs().maxCoeff()) +
                           " relative)");
    w = w.cwiseMax(tol);
    w /= w.mean();

    sol.W = Weight::from_values(op.grid(), w);
    sol.residual = (op.matrix().transpose() * w).cwiseAbs().maxCoeff();
    sol.min_value = w.minCoeff();
    return sol;
}

namespace {

// Both sides of the energy identity are sums of |k|^2 |f|^2 sized terms that
// cancel to O(h^2); extended precision keeps the rounding floor well below it.
long double energy_sum(const DiscreteOperator& op, const Weight& W, const Vector& f) {
    const Grid& g = op.grid();
    const auto& a = op.coefficients().entries;
    const long double h = g.h;
    long double acc = 0.0L;
    for (int s = 0; s < g.total_sites; ++s) {
        std::array<long double, 2> fwd{0.0L, 0.0L};
        std::array<long double, 2> bwd{0.0L, 0.0L};
        for (int i = 0; i < g.dim; ++i) {
            fwd[i] = ((long double)f[g.shift(s, i, +1)] - f[s]) / h;
            bwd[i] = ((long double)f[s] - f[g.shift(s, i, -1)]) / h;
        }
        long double local = 0.0L;
        for (int i = 0; i < g.dim; ++i)
            for (int j = 0; j < g.dim; ++j) local += a[s](i, j) * 0.5L * (fwd[i] * fwd[j] + bwd[i] * bwd[j]);
        acc += local * W.values[s];
    }
    return acc * g.cell_volume();
}

// <f, Lf>_W with the stencil evaluated in extended precision.
long double operator_pairing(const DiscreteOperator& op, const Weight& W, const Vector& f) {
    const Grid& g = op.grid();
    const auto& a = op.coefficients().entries;
    const long double h2 = (long double)g.h * g.h;
    long double acc = 0.0L;
    for (int s = 0; s < g.total_sites; ++s) {
        long double Lf = 0.0L;
        for (int i = 0; i < g.dim; ++i) {
            const long double second =
                ((long double)f[g.shift(s, i, +1)] - f[s]) - ((long double)f[s] - f[g.shift(s, i, -1)]);
            Lf -= a[s](i, i) * second / h2;
        }
        if (g.dim == 2) {
            const long double cross = (long double)f[g.site(g.coords(s)[0] + 1, g.coords(s)[1] + 1)] -
                                      f[g.site(g.coords(s)[0] + 1, g.coords(s)[1] - 1)] -
                                      f[g.site(g.coords(s)[0] - 1, g.coords(s)[1] + 1)] +
                                      f[g.site(g.coords(s)[0] - 1, g.coords(s)[1] - 1)];
            Lf -= 2.0L * a[s](0, 1) * cross / (4.0L * h2);
        }
        acc += f[s] * Lf * W.values[s];
    }
    return acc * g.cell_volume();
}

}  // namespace

double weighted_energy(const DiscreteOperator& op, const Weight& W, const Vector& f) {
    return double(energy_sum(op, W, f));
}

double energy_identity_residual(const DiscreteOperator& op, const Weight& W, const Vector& f) {
    const double norm2 = weighted_inner(W, f, f);
    if (norm2 == 0.0) return 0.0;
    const long double diff = energy_sum(op, W, f) - operator_pairing(op, W, f);
    return double(std::fabs(diff)) / (norm2 * op.coefficients().max_eigenvalue);
}

DiscreteOperator normalized_adjoint(const DiscreteOperator& op, const Weight& W) {
    if (!W.strictly_positive())
        throw LabError(ErrorCode::NonPositiveWeight, "adjoint_solution", "W must be strictly positive");
    SparseMatrix t = SparseMatrix(op.matrix().transpose());
    SparseMatrix out = W.values.cwiseInverse().asDiagonal() * t * W.values.asDiagonal();
    return DiscreteOperator(op.coefficients(), std::move(out), op.gradients());
}

double weighted_inner(const Weight& W, const Vector& u, const Vector& v) {
    return (u.array() * v.array() * W.values.array()).sum() * W.grid.cell_volume();
}

std::string adjoint_csv(const AdjointSolution& sol) {
    const Grid& g = sol.W.grid;
    std::ostringstream os;
    os.precision(17);
    os << "dim,N,h,normalization,residual\n"
       << g.dim << ',' << g.n << ',' << g.h << ',' << sol.W.normalization << ',' << sol.residual << '\n'
       << "site,x0,x1,W\n";
    for (int s = 0; s < g.total_sites; ++s)
        os << s << ',' << g.position(s, 0) << ',' << (g.dim == 2 ? g.position(s, 1) : 0.0) << ','
           << sol.W.values[s] << '\n';
    return os.str();
}

double weighted_norm(const Weight& W, const Vector& u, double p) {
    return std::pow((u.cwiseAbs().array().pow(p) * W.values.array()).sum() * W.grid.cell_volume(), 1.0 / p);
}

double accretivity_check(const DiscreteOperator& op, const Weight& W) {
    const Matrix L = op.dense();
    const Vector& w = W.values;
    Matrix S = 0.5 * (w.asDiagonal() * L + L.transpose() * w.asDiagonal());
    const Vector isq = w.cwiseSqrt().cwiseInverse();
    Matrix M = isq.asDiagonal() * S * isq.asDiagonal();
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw LabError(ErrorCode::EigendecompositionFailed, "adjoint_solution", "symmetric-part eigensolve failed");
    return es.eigenvalues().minCoeff();
}

double accretivity_tolerance(const DiscreteOperator& op) {
    return 10.0 * op.grid().h * op.grid().h * op.norm_inf();
}

double sectoriality_estimate(const DiscreteOperator& op, const Weight& W,
                             const std::vector<std::pair<Vector, Vector>>& samples) {
    double worst = 0.0;
    for (const auto& [re, im] : samples) {
        const Vector Lre = op.apply(re);
        const Vector Lim = op.apply(im);
        const double real_part = weighted_inner(W, re, Lre) + weighted_inner(W, im, Lim);
        const double imag_part = weighted_inner(W, re, Lim) - weighted_inner(W, im, Lre);
        if (real_part > 0.0) worst = std::max(worst, std::fabs(imag_part) / real_part);
    }
    return worst;
}

double stationarity_defect(const DiscreteOperator& op, const Weight& W, const Vector& f) {
    return (op.apply(f).array() * W.values.array()).sum() * op.grid().cell_volume();
}

}  // namespace ndlab
