#include "ndlab/weights.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ndlab/errors.hpp"

namespace ndlab {

namespace {

void require_nonempty(const BallFamily& balls) {
    if (balls.balls.empty()) throw LabError(ErrorCode::EmptyBallFamily, "weights", "ball family is empty");
}

void require_positive(const Weight& w) {
    if (!w.strictly_positive())
        throw LabError(ErrorCode::NonPositiveWeight, "weights",
                       "weight has a nonpositive value " + std::to_string(w.values.minCoeff()));
}

struct BallSums {
    double count = 0.0;
    double a = 0.0;
    double b = 0.0;
};

template <class F, class G>
BallSums sums(const Grid& grid, const Ball& ball, F&& fa, G&& fb) {
    BallSums s;
    for_each_site(grid, ball, [&](int x) {
        s.count += 1.0;
        s.a += fa(x);
        s.b += fb(x);
    });
    return s;
}

double ap_over(const Weight& w, double p, const std::vector<Ball>& balls) {
    const double q = -1.0 / (p - 1.0);
    Vector dual = w.values.array().pow(q);
    double best = 0.0;
    for (const Ball& b : balls) {
        const BallSums s = sums(
            w.grid, b, [&](int x) { return w.values[x]; }, [&](int x) { return dual[x]; });
        if (s.count == 0.0) continue;
        const double value = (s.a / s.count) * std::pow(s.b / s.count, p - 1.0);
        best = std::max(best, value);
    }
    return best;
}

}  // namespace

Weight Weight::constant(const Grid& grid, double c) {
    Weight w;
    w.grid = grid;
    w.values = Vector::Constant(grid.total_sites, c);
    w.normalization = 1.0;
    return w;
}

Weight Weight::from_values(const Grid& grid, Vector values) {
    if (values.size() != grid.total_sites)
        throw LabError(ErrorCode::InvalidArgument, "weights", "weight size does not match the grid");
    if (values.minCoeff() < 0.0)
        throw LabError(ErrorCode::NonPositiveWeight, "weights", "weight has negative values");
    Weight w;
    w.grid = grid;
    w.values = std::move(values);
    w.normalization = 1.0;
    return w;
}

Weight Weight::normalized() const {
    Weight w = *this;
    const double m = mean();
    if (!(m > 0.0)) throw LabError(ErrorCode::NonPositiveWeight, "weights", "weight has zero mean");
    w.values /= m;
    w.normalization = normalization * m;
    return w;
}

std::vector<int> ball_sites(const Grid& grid, const Ball& ball) {
    std::vector<int> out;
    for_each_site(grid, ball, [&](int x) { out.push_back(x); });
    return out;
}

double ball_mass(const Grid& grid, const Ball& ball, const Vector& v) {
    double s = 0.0;
    for_each_site(grid, ball, [&](int x) { s += v[x]; });
    return s * grid.cell_volume();
}

BallFamily BallFamily::all_balls(const Grid& grid, int max_radius_units) {
    if (max_radius_units <= 0) max_radius_units = grid.n / 4;
    BallFamily fam;
    fam.complete = true;
    fam.max_radius = max_radius_units;
    fam.balls.reserve(std::size_t(grid.total_sites) * max_radius_units);
    for (int r = 1; r <= max_radius_units; ++r)
        for (int c = 0; c < grid.total_sites; ++c) fam.balls.push_back({grid.point(c), double(r)});
    return fam;
}

BallFamily BallFamily::from_balls(const Grid& grid, std::vector<Ball> balls) {
    BallFamily fam;
    for (const Ball& b : balls) {
        if (b.radius * grid.h > 0.25 + 1e-12)
            throw LabError(ErrorCode::BallWrapsTorus, "weights", "ball radius exceeds 1/4");
        if (ball_sites(grid, b).empty())
            throw LabError(ErrorCode::InvalidArgument, "weights", "ball contains no site");
        fam.max_radius = std::max(fam.max_radius, b.radius);
    }
    fam.balls = std::move(balls);
    return fam;
}

double ap_constant(const Weight& w, double p, const BallFamily& balls) {
    if (!(p > 1.0))
        throw LabError(ErrorCode::NonPositiveExponentGap, "weights", "A_p needs p > 1, got " + std::to_string(p));
    require_positive(w);
    require_nonempty(balls);
    return ap_over(w, p, balls.balls);
}

double reverse_holder_constant(const Weight& w, double r, const BallFamily& balls) {
    if (!(r > 1.0))
        throw LabError(ErrorCode::InvalidArgument, "weights", "reverse Hoelder exponent must exceed 1");
    require_nonempty(balls);
    Vector wr = w.values.array().pow(r);
    double best = 0.0;
    for (const Ball& b : balls.balls) {
        const BallSums s = sums(
            w.grid, b, [&](int x) { return wr[x]; }, [&](int x) { return w.values[x]; });
        if (s.count == 0.0 || s.b == 0.0) continue;
        best = std::max(best, std::pow(s.a / s.count, 1.0 / r) / (s.b / s.count));
    }
    return best;
}

DoublingReport doubling_check(const Weight& w, double p, double a, const BallFamily& balls) {
    if (!(a > 1.0)) throw LabError(ErrorCode::InvalidArgument, "weights", "dilation factor must exceed 1");
    require_nonempty(balls);
    const Grid& g = w.grid;
    std::vector<Ball> all = balls.balls;
    for (const Ball& b : balls.balls) {
        if (a * b.radius * g.h > 0.25 + 1e-12)
            throw LabError(ErrorCode::BallWrapsTorus, "weights",
                           "dilated radius " + std::to_string(a * b.radius * g.h) + " exceeds 1/4");
        all.push_back(b.dilated(a));
    }
    DoublingReport rep;
    rep.a = a;
    rep.p = p;
    if (!(p > 1.0))
        throw LabError(ErrorCode::NonPositiveExponentGap, "weights", "A_p needs p > 1");
    require_positive(w);
    rep.ap_constant = ap_over(w, p, all);
    const double factor = std::pow(a, g.dim * p) * rep.ap_constant;
    rep.ratios.reserve(balls.balls.size());
    for (const Ball& b : balls.balls) {
        const double big = ball_mass(g, b.dilated(a), w.values);
        const double small = ball_mass(g, b, w.values);
        const double ratio = big / (factor * small);
        rep.ratios.push_back(ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
    rep.pass = rep.max_ratio <= 1.0 + 1e-9;
    return rep;
}

Vector maximal_function(const Weight& w, const Vector& f, const BallFamily& balls) {
    require_nonempty(balls);
    const Grid& g = w.grid;
    Vector out = Vector::Zero(g.total_sites);
    const Vector weighted = f.cwiseAbs().cwiseProduct(w.values);
    for (const Ball& b : balls.balls) {
        double num = 0.0;
        double den = 0.0;
        for_each_site(g, b, [&](int x) {
            num += weighted[x];
            den += w.values[x];
        });
        if (den <= 0.0) continue;
        const double avg = num / den;
        for_each_site(g, b, [&](int x) { out[x] = std::max(out[x], avg); });
    }
    return out;
}

double gaussian_weight_integral(const Weight& w, int y, double s, double c) {
    if (!(s > 0.0 && s <= 0.25 + 1e-12))
        throw LabError(ErrorCode::InvalidArgument, "weights", "scale s must lie in (0, 1/4]");
    if (!(c > 0.0)) throw LabError(ErrorCode::InvalidArgument, "weights", "decay rate c must be positive");
    const Grid& g = w.grid;
    const double ball = ball_mass(g, Ball{g.point(y), s / g.h}, w.values);
    if (!(ball > 0.0)) throw LabError(ErrorCode::DegenerateBall, "weights", "w(B_s(y)) vanishes");
    double acc = 0.0;
    for (int x = 0; x < g.total_sites; ++x) {
        const double d = g.distance(x, y);
        acc += std::exp(-c * d * d / (s * s)) * w.values[x];
    }
    return acc * g.cell_volume() / ball;
}

std::string weight_diagnostics_csv_header() { return "weight_id,p,ap_constant,rh_r,rh_constant,doubling_pass"; }

std::string to_csv_row(const WeightDiagnostics& d) {
    std::ostringstream os;
    os.precision(17);
    os << d.weight_id << ',' << d.p << ',' << d.ap_constant << ',' << d.rh_r << ',' << d.rh_constant << ','
       << (d.doubling_pass ? "true" : "false");
    return os.str();
}

}  // namespace ndlab
