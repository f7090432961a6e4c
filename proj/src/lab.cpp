#include "ndlab/lab.hpp"

#include <algorithm>
#include <cmath>

#include "ndlab/adjoint_solution.hpp"
#include "ndlab/errors.hpp"

namespace ndlab {

std::vector<double> log_time_weights(const std::vector<double>& t) {
    if (t.empty()) throw LabError(ErrorCode::EmptyTimeGrid, "lab", "time grid is empty");
    if (t.size() == 1) return {std::log(2.0)};
    std::vector<double> w(t.size(), 0.0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double d = 0.5 * std::log(t[k + 1] / t[k]);
        w[k] += d;
        w[k + 1] += d;
    }
    return w;
}

SquareFunction::SquareFunction(const AnalyzedOperator& A, const Weight& W, std::vector<double> tgrid)
    : W_(W), times_(std::move(tgrid)) {
    if (times_.empty()) throw LabError(ErrorCode::EmptyTimeGrid, "lab", "time grid is empty");
    std::sort(times_.begin(), times_.end());
    for (double t : times_)
        if (!(t > 0.0 && t <= 0.25 + 1e-12))
            throw LabError(ErrorCode::InvalidArgument, "lab", "times must lie in (0, 1/4]");
    log_weights_ = log_time_weights(times_);
    const Grid& g = A.grid();
    for (double t : times_) {
        tle_.push_back(tle_kernel(A, t).entries * g.cell_volume());
        std::vector<std::vector<int>> balls(std::size_t(g.total_sites));
        Vector mass(g.total_sites);
        for (int x = 0; x < g.total_sites; ++x) {
            const Ball b{g.point(x), t / g.h};
            balls[std::size_t(x)] = ball_sites(g, b);
            mass[x] = ball_mass(g, b, W.values);
        }
        balls_.push_back(std::move(balls));
        ball_mass_.push_back(std::move(mass));
    }
}

Vector SquareFunction::operator()(const Vector& f) const {
    const Grid& g = W_.grid;
    Vector acc = Vector::Zero(g.total_sites);
    for (std::size_t k = 0; k < times_.size(); ++k) {
        const Vector u = tle_[k] * f;
        const Vector dens = (u.cwiseAbs2().array() * W_.values.array()).matrix() * g.cell_volume();
        for (int x = 0; x < g.total_sites; ++x) {
            double s = 0.0;
            for (int y : balls_[k][std::size_t(x)]) s += dens[y];
            acc[x] += log_weights_[k] * s / ball_mass_[k][x];
        }
    }
    return acc.cwiseSqrt();
}

Vector square_function(const AnalyzedOperator& A, const Weight& W, const Vector& f, const std::vector<double>& tgrid) {
    return SquareFunction(A, W, tgrid)(f);
}

double h1_riesz_ratio(const RieszTransform& T, const SquareFunction& S, const Weight& W, const Vector& f) {
    const double l1 = weighted_norm(W, f, 1.0);
    const double mean = (f.array() * W.values.array()).sum() * W.grid.cell_volume();
    if (std::fabs(mean) > 1e-10 * std::max(l1, 1e-300))
        throw LabError(ErrorCode::NotMeanZero, "lab", "f must have W-weighted mean zero");
    const double sq = weighted_norm(W, S(f), 1.0);
    if (!(sq > 0.0)) throw LabError(ErrorCode::ZeroSquareFunction, "lab", "square function vanishes");
    return weighted_norm(W, T.magnitude(f), 1.0) / sq;
}

double h1_riesz_ratio(const AnalyzedOperator& A, const Weight& W, const Vector& f, const std::vector<double>& tgrid) {
    return h1_riesz_ratio(RieszTransform(A), SquareFunction(A, W, tgrid), W, f);
}

std::vector<double> dyadic_times(double finest) {
    std::vector<double> t;
    for (double v = 0.25; v >= finest * (1.0 - 1e-12); v *= 0.5) t.push_back(v);
    std::reverse(t.begin(), t.end());
    return t;
}

}  // namespace ndlab
