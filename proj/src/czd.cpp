#include "ndlab/czd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "ndlab/adjoint_solution.hpp"
#include "ndlab/errors.hpp"

namespace ndlab {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double weighted_abs_mass(const Weight& W, const Vector& f, const std::vector<int>& sites) {
    double acc = 0.0;
    for (int s : sites) acc += std::fabs(f[s]) * W.values[s];
    return acc * W.grid.cell_volume();
}

double weight_mass(const Weight& W, const std::vector<int>& sites) {
    double acc = 0.0;
    for (int s : sites) acc += W.values[s];
    return acc * W.grid.cell_volume();
}

Ball cube_ball(const Grid& g, const DyadicCube& q) {
    const int m = q.side(g);
    Ball b;
    for (int i = 0; i < g.dim; ++i) b.center[i] = q.index[i] * m + 0.5 * (m - 1);
    b.radius = std::sqrt(double(g.dim)) * m / 2.0;
    return b;
}

double nan_or(double v, bool defined) { return defined ? v : std::nan(""); }

}  // namespace

std::vector<int> DyadicCube::sites(const Grid& g) const {
    const int m = side(g);
    std::vector<int> out;
    const int m1 = g.dim == 2 ? m : 1;
    for (int j = 0; j < m1; ++j)
        for (int i = 0; i < m; ++i) out.push_back(g.site(index[0] * m + i, index[1] * m + j));
    return out;
}

CZDecomposition cz_decompose(const Vector& f, double alpha, const Weight& W) {
    const Grid& g = W.grid;
    if (!power_of_two(g.n)) throw LabError(ErrorCode::NoDyadicStructure, "czd", "N must be a power of two");
    if (f.size() != g.total_sites) throw LabError(ErrorCode::InvalidArgument, "czd", "f does not match the grid");
    const std::vector<int> all = DyadicCube{}.sites(g);
    const double start = weighted_abs_mass(W, f, all) / weight_mass(W, all);
    if (!(alpha > start))
        throw LabError(ErrorCode::AlphaTooSmall, "czd",
                       "alpha must exceed the W-average of |f| (" + std::to_string(start) + ")");

    CZDecomposition dec;
    dec.grid = g;
    dec.weight = W;
    dec.alpha = alpha;
    dec.g = f;

    int max_level = 0;
    while ((g.n >> max_level) > 1) ++max_level;
    std::vector<DyadicCube> frontier{DyadicCube{}};
    for (int level = 1; level <= max_level && !frontier.empty(); ++level) {
        std::vector<DyadicCube> next;
        for (const DyadicCube& parent : frontier) {
            const int children1 = g.dim == 2 ? 2 : 1;
            for (int cj = 0; cj < children1; ++cj) {
                for (int ci = 0; ci < 2; ++ci) {
                    DyadicCube q{level, {2 * parent.index[0] + ci, g.dim == 2 ? 2 * parent.index[1] + cj : 0}};
                    const std::vector<int> sites = q.sites(g);
                    const double wq = weight_mass(W, sites);
                    const double avg_abs = weighted_abs_mass(W, f, sites) / wq;
                    if (avg_abs >= alpha) {
                        double avg = 0.0;
                        for (int s : sites) avg += f[s] * W.values[s];
                        avg *= g.cell_volume() / wq;
                        BadPart bp{q, cube_ball(g, q), Vector::Zero(g.total_sites)};
                        for (int s : sites) {
                            bp.b[s] = f[s] - avg;
                            dec.g[s] = avg;
                        }
                        dec.bad_parts.push_back(std::move(bp));
                    } else {
                        next.push_back(q);
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    return dec;
}

CZReport verify_cz(const CZDecomposition& dec, const Vector& f) {
    const Grid& g = dec.grid;
    const Weight& W = dec.weight;
    const double alpha = dec.alpha;
    CZReport r;
    r.bad_count = int(dec.bad_parts.size());
    const bool any = r.bad_count > 0;

    Vector recon = dec.g;
    for (const BadPart& bp : dec.bad_parts) recon += bp.b;
    r.reconstruction_error = (recon - f).cwiseAbs().maxCoeff();
    r.c1_good_sup = dec.g.cwiseAbs().maxCoeff() / alpha;

    const double f_l1 = weighted_norm(W, f, 1.0);
    std::vector<int> overlap(g.total_sites, 0);
    double sum_ball_mass = 0.0;
    double c2 = 0.0, c5u = 0.0, c5l = std::numeric_limits<double>::infinity(), mz = 0.0;
    for (const BadPart& bp : dec.bad_parts) {
        const std::vector<int> ball = ball_sites(g, bp.ball);
        std::vector<char> in_ball(g.total_sites, 0);
        for (int s : ball) {
            in_ball[s] = 1;
            ++overlap[s];
        }
        for (int s = 0; s < g.total_sites; ++s)
            if (bp.b[s] != 0.0 && !in_ball[s]) r.supports_contained = false;
        const double wb = weight_mass(W, ball);
        sum_ball_mass += wb;
        c2 = std::max(c2, weighted_abs_mass(W, bp.b, ball) / (alpha * wb));
        const double avg = weighted_abs_mass(W, f, ball) / wb;
        c5u = std::max(c5u, avg / alpha);
        c5l = std::min(c5l, avg / alpha);
        double signed_mass = 0.0, f_mass = 0.0;
        for (int s : bp.cube.sites(g)) {
            signed_mass += bp.b[s] * W.values[s];
            f_mass += std::fabs(f[s]) * W.values[s];
        }
        if (f_mass > 0.0) mz = std::max(mz, std::fabs(signed_mass) / f_mass);
    }
    r.c2_bad_mass = nan_or(c2, any);
    r.c3_ball_measure = f_l1 > 0.0 ? alpha * sum_ball_mass / f_l1 : 0.0;
    r.c4_overlap = *std::max_element(overlap.begin(), overlap.end());
    r.c5_upper = nan_or(c5u, any);
    r.c5_lower = nan_or(c5l, any);
    r.mean_zero_error = mz;

    auto finite_or_nan = [](double v) { return std::isfinite(v) || std::isnan(v); };
    r.pass = r.reconstruction_error <= 1e-12 && r.supports_contained && std::isfinite(r.c1_good_sup) &&
             finite_or_nan(r.c2_bad_mass) && std::isfinite(r.c3_ball_measure) && finite_or_nan(r.c5_upper);
    return r;
}

std::string cz_to_json(const CZDecomposition& dec, const CZReport& report) {
    auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    nlohmann::json j;
    j["alpha"] = dec.alpha;
    j["dim"] = dec.grid.dim;
    j["n"] = dec.grid.n;
    j["cubes"] = nlohmann::json::array();
    for (const BadPart& bp : dec.bad_parts) {
        nlohmann::json c;
        c["level"] = bp.cube.level;
        c["index"] = dec.grid.dim == 2 ? nlohmann::json{bp.cube.index[0], bp.cube.index[1]}
                                        : nlohmann::json{bp.cube.index[0]};
        j["cubes"].push_back(c);
    }
    j["constants"] = {{"good_sup", num(report.c1_good_sup)},
                      {"bad_mass", num(report.c2_bad_mass)},
                      {"ball_measure", num(report.c3_ball_measure)},
                      {"overlap", num(report.c4_overlap)},
                      {"average_upper", num(report.c5_upper)},
                      {"average_lower", num(report.c5_lower)}};
    j["reconstruction_error"] = report.reconstruction_error;
    j["mean_zero_error"] = report.mean_zero_error;
    j["pass"] = report.pass;
    return j.dump(2);
}

double weak_type_estimator(const RieszTransform& T, const Weight& W, const std::vector<Vector>& samples,
                           const std::vector<double>& alphas) {
    const double hn = W.grid.cell_volume();
    double worst = 0.0;
    for (const Vector& f : samples) {
        const double l1 = weighted_norm(W, f, 1.0);
        if (!(l1 > 0.0)) throw LabError(ErrorCode::InvalidArgument, "czd", "samples must be nonzero");
        const Vector tf = T.magnitude(f);
        if (alphas.empty()) {
            std::vector<int> order(tf.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&tf](int a, int b) { return tf[a] > tf[b]; });
            // Just below alpha = tf[order[k]], the level set holds every site with value >= it.
            double mass = 0.0;
            std::size_t k = 0;
            while (k < order.size()) {
                const double v = tf[order[k]];
                while (k < order.size() && tf[order[k]] == v) mass += W.values[order[k++]];
                worst = std::max(worst, v * mass * hn / l1);
            }
        } else {
            for (double a : alphas) {
                double mass = 0.0;
                for (Eigen::Index x = 0; x < tf.size(); ++x)
                    if (tf[x] > a) mass += W.values[x];
                worst = std::max(worst, a * mass * hn / l1);
            }
        }
    }
    return worst;
}

bool chebyshev_consistent(const RieszTransform& T, const Weight& W, const Vector& f,
                          const std::vector<double>& alphas) {
    const Vector tf = T.magnitude(f);
    double total = 0.0;
    for (Eigen::Index x = 0; x < tf.size(); ++x) total += tf[x] * W.values[x];
    for (double a : alphas) {
        double lhs = 0.0;
        for (Eigen::Index x = 0; x < tf.size(); ++x)
            if (tf[x] > a) lhs += a * W.values[x];
        if (lhs * W.grid.cell_volume() > total * W.grid.cell_volume()) return false;
    }
    return true;
}

double lp_norm_estimator(const RieszTransform& T, const Weight& W, double p, const std::vector<Vector>& samples,
                         bool allow_unproven) {
    if (!(p > 1.0) || (p > 2.0 && !allow_unproven))
        throw LabError(ErrorCode::InvalidExponent, "czd",
                       "exponent " + std::to_string(p) + " outside (1, 2]" +
                           (p > 2.0 ? "; pass the unproven override to explore it" : ""));
    double worst = 0.0;
    for (const Vector& f : samples) {
        const double nf = weighted_norm(W, f, p);
        if (!(nf > 0.0)) continue;
        worst = std::max(worst, weighted_norm(W, T.magnitude(f), p) / nf);
    }
    return worst;
}

}  // namespace ndlab
