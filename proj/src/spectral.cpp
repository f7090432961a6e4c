#include "ndlab/spectral.hpp"

#include <cstdint>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "ndlab/errors.hpp"

namespace ndlab {

using Eigen::Index;

namespace {

double inf_norm(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

std::optional<Vector> scalar_symmetrizer(const DiscreteOperator& op) {
    const auto& entries = op.coefficients().entries;
    Vector d(op.size());
    for (int s = 0; s < op.size(); ++s) {
        const SiteMatrix& a = entries[s];
        if (a.a12 != 0.0) return std::nullopt;
        if (op.grid().dim == 2 && a.a11 != a.a22) return std::nullopt;
        d[s] = a.a11;
    }
    return d;
}

std::uint64_t fnv1a(const Matrix& m) {
    std::uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    const std::size_t len = std::size_t(m.size()) * sizeof(double);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

template <class M>
void write_matrix(std::ofstream& out, const M& m) {
    out.write(reinterpret_cast<const char*>(m.data()), std::streamsize(m.size() * sizeof(typename M::Scalar)));
}

template <class M>
bool read_matrix(std::ifstream& in, M& m) {
    in.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * sizeof(typename M::Scalar)));
    return bool(in);
}

}  // namespace

SpectralCalculus::SpectralCalculus(const DiscreteOperator& op, SpectralOptions options) : options_(options) {
    L_ = op.dense();
    norm_inf_ = inf_norm(L_);
    std::optional<Vector> sym;
    if (!op.is_symmetric()) sym = scalar_symmetrizer(op);
    decompose(sym);
}

SpectralCalculus::SpectralCalculus(const Matrix& L, SpectralOptions options) : options_(options), L_(L) {
    norm_inf_ = inf_norm(L_);
    decompose(std::nullopt);
}

void SpectralCalculus::decompose(const std::optional<Vector>& symmetrizer) {
    const double asym = (L_ - L_.transpose()).cwiseAbs().maxCoeff();
    if (asym <= 1e-14 * std::max(1.0, norm_inf_)) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (L_ + L_.transpose()));
        if (es.info() != Eigen::Success)
            throw LabError(ErrorCode::EigendecompositionFailed, "semigroup", "symmetric eigensolver failed");
        mode_ = Mode::Symmetric;
        values_ = es.eigenvalues().cast<Complex>();
        real_vectors_ = es.eigenvectors();
        real_inverse_ = real_vectors_.transpose();
        condition_ = 1.0;
        finish();
        return;
    }
    if (symmetrizer) {
        const Vector& d = *symmetrizer;
        const Vector sq = d.cwiseSqrt();
        const Vector isq = sq.cwiseInverse();
        Matrix S = isq.asDiagonal() * L_ * sq.asDiagonal();
        const double sasym = (S - S.transpose()).cwiseAbs().maxCoeff();
        if (sasym <= 1e-12 * std::max(1.0, norm_inf_)) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
            if (es.info() != Eigen::Success)
                throw LabError(ErrorCode::EigendecompositionFailed, "semigroup", "symmetrized eigensolver failed");
            mode_ = Mode::Symmetrizable;
            values_ = es.eigenvalues().cast<Complex>();
            real_vectors_ = sq.asDiagonal() * es.eigenvectors();
            real_inverse_ = es.eigenvectors().transpose() * isq.asDiagonal();
            condition_ = std::sqrt(d.maxCoeff() / d.minCoeff());
            finish();
            return;
        }
    }
    Eigen::EigenSolver<Matrix> es(L_, true);
    if (es.info() != Eigen::Success)
        throw LabError(ErrorCode::EigendecompositionFailed, "semigroup", "general eigensolver failed");
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(vectors_);
    inverse_ = lu.inverse();
    const double nv = vectors_.cwiseAbs().colwise().sum().maxCoeff();
    const double ni = inverse_.cwiseAbs().colwise().sum().maxCoeff();
    condition_ = nv * ni;
    mode_ = (std::isfinite(condition_) && condition_ <= options_.condition_threshold) ? Mode::General
                                                                                      : Mode::ScalingSquaring;
    finish();
}

void SpectralCalculus::finish() {
    const Index n = L_.rows();
    null_projector_ = Matrix::Zero(n, n);
    for (Index k = 0; k < n; ++k) {
        if (!is_null(values_[k])) continue;
        if (mode_ == Mode::Symmetric || mode_ == Mode::Symmetrizable) {
            null_projector_ += real_vectors_.col(k) * real_inverse_.row(k);
        } else {
            null_projector_ += (vectors_.col(k) * inverse_.row(k)).real();
        }
    }
}

int SpectralCalculus::null_count() const {
    int c = 0;
    for (Index k = 0; k < values_.size(); ++k) c += is_null(values_[k]) ? 1 : 0;
    return c;
}

double SpectralCalculus::min_nonnull_modulus() const {
    double m = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < values_.size(); ++k)
        if (!is_null(values_[k])) m = std::min(m, std::abs(values_[k]));
    return m;
}

double SpectralCalculus::max_modulus() const { return values_.cwiseAbs().maxCoeff(); }

double SpectralCalculus::min_real_part() const { return values_.real().minCoeff(); }

Matrix SpectralCalculus::apply(const ScalarFunction& f) const {
    const Index n = L_.rows();
    return apply(f, Matrix(Matrix::Identity(n, n)));
}

Matrix SpectralCalculus::apply(const ScalarFunction& f, const Matrix& B) const {
    if (!diagonalized())
        throw LabError(ErrorCode::EigendecompositionFailed, "semigroup",
                       "eigenvector basis ill-conditioned (" + std::to_string(condition_) +
                           "); only the semigroup is available");
    const Index n = L_.rows();
    if (mode_ == Mode::Symmetric || mode_ == Mode::Symmetrizable) {
        Vector fv(n);
        for (Index k = 0; k < n; ++k) fv[k] = f(values_[k]).real();
        if (B.cols() == n && B.isIdentity(0.0)) {
            Matrix left = real_vectors_ * fv.asDiagonal();
            return left * real_inverse_;
        }
        Matrix tmp = real_inverse_ * B;
        tmp = fv.asDiagonal() * tmp;
        return real_vectors_ * tmp;
    }
    Eigen::VectorXcd fv(n);
    for (Index k = 0; k < n; ++k) fv[k] = f(values_[k]);
    Eigen::MatrixXcd tmp = inverse_ * B.cast<Complex>();
    tmp = fv.asDiagonal() * tmp;
    return (vectors_ * tmp).real();
}

Vector SpectralCalculus::apply(const ScalarFunction& f, const Vector& v) const {
    Matrix B = v;
    return apply(f, B).col(0);
}

Matrix SpectralCalculus::semigroup(double tau) const {
    const Index n = L_.rows();
    if (tau == 0.0) return Matrix::Identity(n, n);
    if (diagonalized()) return apply([tau](Complex z) { return std::exp(-tau * z); });
    Matrix scaled = -tau * L_;
    Matrix e = scaled.exp();
    if (!e.allFinite())
        throw LabError(ErrorCode::EigendecompositionFailed, "semigroup", "scaling-and-squaring diverged");
    return e;
}

void SpectralCalculus::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    const std::uint64_t magic = 0x6e646c6162737063ull;
    const std::uint64_t hash = fnv1a(L_);
    const std::int64_t n = L_.rows();
    const std::int32_t mode = static_cast<std::int32_t>(mode_);
    out.write(reinterpret_cast<const char*>(&magic), sizeof magic);
    out.write(reinterpret_cast<const char*>(&hash), sizeof hash);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&mode), sizeof mode);
    out.write(reinterpret_cast<const char*>(&condition_), sizeof condition_);
    write_matrix(out, values_);
    if (mode_ == Mode::Symmetric || mode_ == Mode::Symmetrizable) {
        write_matrix(out, real_vectors_);
        write_matrix(out, real_inverse_);
    } else {
        write_matrix(out, vectors_);
        write_matrix(out, inverse_);
    }
}

std::optional<SpectralCalculus> SpectralCalculus::load(const std::filesystem::path& path, const Matrix& L,
                                                       SpectralOptions options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::uint64_t magic = 0, hash = 0;
    std::int64_t n = 0;
    std::int32_t mode = 0;
    double cond = 0.0;
    in.read(reinterpret_cast<char*>(&magic), sizeof magic);
    in.read(reinterpret_cast<char*>(&hash), sizeof hash);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&mode), sizeof mode);
    in.read(reinterpret_cast<char*>(&cond), sizeof cond);
    if (!in || magic != 0x6e646c6162737063ull || n != L.rows() || hash != fnv1a(L)) return std::nullopt;
    SpectralCalculus sc;
    sc.options_ = options;
    sc.L_ = L;
    sc.norm_inf_ = inf_norm(L);
    sc.mode_ = static_cast<Mode>(mode);
    sc.condition_ = cond;
    sc.values_.resize(n);
    if (!read_matrix(in, sc.values_)) return std::nullopt;
    if (sc.mode_ == Mode::Symmetric || sc.mode_ == Mode::Symmetrizable) {
        sc.real_vectors_.resize(n, n);
        sc.real_inverse_.resize(n, n);
        if (!read_matrix(in, sc.real_vectors_) || !read_matrix(in, sc.real_inverse_)) return std::nullopt;
    } else {
        sc.vectors_.resize(n, n);
        sc.inverse_.resize(n, n);
        if (!read_matrix(in, sc.vectors_) || !read_matrix(in, sc.inverse_)) return std::nullopt;
    }
    if (sc.mode_ == Mode::General && cond > options.condition_threshold) sc.mode_ = Mode::ScalingSquaring;
    sc.finish();
    return sc;
}

}  // namespace ndlab
