#include "ndlab/calculus.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ndlab/adjoint_solution.hpp"
#include "ndlab/errors.hpp"

namespace ndlab {

namespace {

constexpr double kQuadTolerance = 1e-12;

double inf_norm(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

Matrix apply_sparse(const SparseMatrix& D, const Matrix& M) { return D * M; }

}  // namespace

QuadratureRule QuadratureRule::for_interval(double lo, double hi, int node_count) {
    if (!(lo > 0.0 && hi >= lo)) throw LabError(ErrorCode::InvalidArgument, "calculus", "invalid spectral interval");
    if (node_count < 2) throw LabError(ErrorCode::InvalidArgument, "calculus", "need at least two nodes");
    QuadratureRule q;
    q.node_count = node_count;
    q.lambda_lo = lo;
    q.lambda_hi = hi;
    const double sigma = 1.0 / std::sqrt(lo * hi);
    const double log_tol = -std::log(kQuadTolerance);
    const double v_lo = -std::log(2.0 * (log_tol + 0.5 * std::log(sigma * hi)));
    const double v_hi = std::log(log_tol / (sigma * lo));
    const double dv = (v_hi - v_lo) / (node_count - 1);
    for (int k = 0; k < node_count; ++k) {
        const double v = v_lo + k * dv;
        const double s = sigma * std::exp(v - std::exp(-v));
        double w = dv * (1.0 + std::exp(-v)) * s;
        if (k == 0 || k == node_count - 1) w *= 0.5;
        q.nodes.push_back(s);
        q.weights.push_back(w);
    }
    return q;
}

double QuadratureRule::inv_sqrt(double lambda) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        acc += weights[k] * std::exp(-nodes[k] * lambda) / std::sqrt(nodes[k]);
    return acc / std::sqrt(std::numbers::pi);
}

double QuadratureRule::max_relative_error(double lo, double hi, int samples) const {
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double lambda = lo * std::pow(hi / lo, samples == 1 ? 0.0 : double(i) / (samples - 1));
        worst = std::max(worst, std::fabs(inv_sqrt(lambda) * std::sqrt(lambda) - 1.0));
    }
    return worst;
}

QuadratureRule subordination_rule(const AnalyzedOperator& A, int node_count) {
    const SpectralCalculus& S = A.spectral();
    return QuadratureRule::for_interval(0.5 * S.min_nonnull_modulus(), 2.0 * S.max_modulus(), node_count);
}

double spectral_slack(const AnalyzedOperator& A) {
    const double h = A.grid().h;
    return 10.0 * h * h * A.op().norm_inf();
}

Matrix sqrt_op(const SpectralCalculus& S, double eps_spec) {
    if (S.min_real_part() < -eps_spec)
        throw LabError(ErrorCode::SpectrumInLeftHalfPlane, "calculus",
                       "eigenvalue with real part " + std::to_string(S.min_real_part()));
    return S.apply([&S](Complex z) { return S.is_null(z) ? Complex(0.0) : std::sqrt(z); });
}

Matrix sqrt_op(const AnalyzedOperator& A) { return sqrt_op(A.spectral(), spectral_slack(A)); }

Matrix inv_sqrt_eigen(const AnalyzedOperator& A) {
    const SpectralCalculus& S = A.spectral();
    return S.apply([&S](Complex z) { return S.is_null(z) ? Complex(0.0) : 1.0 / std::sqrt(z); });
}

Matrix subordination_sum(const AnalyzedOperator& A, const QuadratureRule& rule) {
    const SpectralCalculus& S = A.spectral();
    const Matrix& P0 = S.null_projector();
    const Eigen::Index n = S.size();
    Matrix Q = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double c = rule.weights[k] / std::sqrt(rule.nodes[k] * std::numbers::pi);
        Q += c * (S.semigroup(rule.nodes[k]) - P0);
    }
    return Q;
}

SubordinationResult inv_sqrt_subordination(const AnalyzedOperator& A, const QuadratureRule& rule) {
    const SpectralCalculus& S = A.spectral();
    SubordinationResult r;
    r.matrix = subordination_sum(A, rule);
    if (S.diagonalized()) {
        const Matrix oracle = inv_sqrt_eigen(A);
        r.relative_error = inf_norm(r.matrix - oracle) / inf_norm(oracle);
        if (!(r.relative_error <= 1e-6))
            throw LabError(ErrorCode::QuadratureNotConverged, "calculus",
                           "subordination differs from eigen calculus by " + std::to_string(r.relative_error));
    } else {
        r.relative_error = std::nan("");
    }
    return r;
}

RieszTransform::RieszTransform(const AnalyzedOperator& A, const Matrix& inv_sqrt) : grid_(A.grid()) {
    for (const SparseMatrix& D : A.op().gradients()) components_.push_back(apply_sparse(D, inv_sqrt));
}

RieszTransform::RieszTransform(const AnalyzedOperator& A) : RieszTransform(A, inv_sqrt_eigen(A)) {}

RieszTransform::RieszTransform(Grid grid, std::vector<Matrix> components)
    : grid_(grid), components_(std::move(components)) {}

VectorField RieszTransform::apply(const Vector& f) const {
    VectorField out;
    for (const Matrix& T : components_) out.push_back(T * f);
    return out;
}

Vector RieszTransform::magnitude(const Vector& f) const {
    Vector sq = Vector::Zero(f.size());
    for (const Matrix& T : components_) sq += (T * f).cwiseAbs2();
    return sq.cwiseSqrt();
}

VectorField riesz_transform(const AnalyzedOperator& A, const Vector& f) {
    const Vector q = A.spectral().apply(
        [&A](Complex z) { return A.spectral().is_null(z) ? Complex(0.0) : 1.0 / std::sqrt(z); }, f);
    return A.op().gradient(q);
}

double gradient_norm(const DiscreteOperator& op, const Weight& W, const Vector& f) {
    double acc = 0.0;
    for (const Vector& c : op.gradient(f)) acc += (c.cwiseAbs2().array() * W.values.array()).sum();
    return std::sqrt(acc * op.grid().cell_volume());
}

KatoPair::KatoPair(const AnalyzedOperator& A, const Weight& W) : op_(A.op()), W_(W) {
    sqrt_ = sqrt_op(A);
    sqrt_tilde_ = W.values.cwiseInverse().asDiagonal() * sqrt_.transpose() * W.values.asDiagonal();
}

KatoRatios KatoPair::ratios(const Vector& f) const {
    const double g = gradient_norm(op_, W_, f);
    const double scale = weighted_norm(W_, f) + std::numeric_limits<double>::min();
    if (!(g > 1e-12 * scale * op_.grid().n))
        throw LabError(ErrorCode::ZeroGradient, "calculus", "f has no resolved gradient");
    return {weighted_norm(W_, sqrt_ * f) / g, weighted_norm(W_, sqrt_tilde_ * f) / g};
}

KatoRatios kato_ratios(const AnalyzedOperator& A, const Weight& W, const Vector& f) {
    return KatoPair(A, W).ratios(f);
}

VectorField KtKernel::apply(const Vector& f) const {
    VectorField out;
    for (const Matrix& K : entries) out.push_back(K * f * grid.cell_volume());
    return out;
}

KtKernel kt_kernel(const AnalyzedOperator& A, double t, const QuadratureRule& rule) {
    if (!(t > 0.0)) throw LabError(ErrorCode::InvalidArgument, "calculus", "t must be positive");
    const SpectralCalculus& S = A.spectral();
    const Eigen::Index n = S.size();
    // The null projector cancels between the two pieces.
    Matrix M = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double s = rule.nodes[k];
        const double c = rule.weights[k] / std::sqrt(s * std::numbers::pi);
        M += c * (S.semigroup(s) - S.semigroup(s + t));
    }
    KtKernel K;
    K.grid = A.grid();
    K.t = t;
    const double hn = A.grid().cell_volume();
    for (const SparseMatrix& D : A.op().gradients()) K.entries.push_back(apply_sparse(D, M) / hn);

    if (S.diagonalized()) {
        const Matrix Q = inv_sqrt_eigen(A);
        const Matrix oracle = Q - Q * S.semigroup(t);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < K.entries.size(); ++i) {
            const Matrix ref = apply_sparse(A.op().gradients()[i], oracle);
            num = std::max(num, inf_norm(K.entries[i] * hn - ref));
            den = std::max(den, inf_norm(ref));
        }
        K.oracle_error = den > 0.0 ? num / den : num;
        if (!(K.oracle_error <= 1e-6))
            throw LabError(ErrorCode::QuadratureNotConverged, "calculus",
                           "K_t differs from eigen calculus by " + std::to_string(K.oracle_error));
    } else {
        K.oracle_error = std::nan("");
    }
    return K;
}

double kt_bound_check(const KtKernel& K, const Weight& W, double t) {
    const double r = std::sqrt(t);
    if (r > 0.25 + 1e-12) throw LabError(ErrorCode::BallWrapsTorus, "calculus", "sqrt(t) exceeds 1/4");
    const Grid& g = K.grid;
    double worst = 0.0;
    bool any = false;
    for (int y = 0; y < g.total_sites; ++y) {
        double acc = 0.0;
        for (int x = 0; x < g.total_sites; ++x) {
            if (g.distance(x, y) < r - 1e-12) continue;
            double sq = 0.0;
            for (const Matrix& c : K.entries) sq += c(x, y) * c(x, y);
            acc += std::sqrt(sq) * W.values[x];
            any = true;
        }
        worst = std::max(worst, acc * g.cell_volume() / W.values[y]);
    }
    if (!any) throw LabError(ErrorCode::EmptyAnnulus, "calculus", "no site at distance >= sqrt(t)");
    return worst;
}

SpectralCache::SpectralCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

AnalyzedOperator SpectralCache::get(const DiscreteOperator& op, const std::string& key) const {
    if (!enabled()) return AnalyzedOperator(op);
    const std::filesystem::path file = dir_ / (key + ".spec");
    if (auto loaded = SpectralCalculus::load(file, op.dense()))
        return AnalyzedOperator(op, std::make_shared<const SpectralCalculus>(std::move(*loaded)));
    AnalyzedOperator A(op);
    std::filesystem::create_directories(dir_);
    A.spectral().save(file);
    return A;
}

}  // namespace ndlab
