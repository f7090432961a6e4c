#pragma once

// Muckenhoupt weight machinery on the discrete torus: A_p and reverse Hoelder
// constants over ball families, doubling, the weighted maximal operator and
// the weighted Gaussian integral.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ndlab/lattice.hpp"

namespace ndlab {

/// Nonnegative grid function used as a density W(x) dx.
struct Weight {
    Grid grid;
    Vector values;
    /// Mean of the raw values before normalize() was applied (1 for already-normalized data).
    double normalization = 1.0;

    static Weight constant(const Grid& grid, double c = 1.0);
    static Weight from_values(const Grid& grid, Vector values);

    double mean() const { return values.mean(); }
    /// Rescaled copy with mean exactly 1 (within rounding).
    Weight normalized() const;
    bool strictly_positive() const { return values.minCoeff() > 0.0; }
    /// W(E) = sum_{x in E} W(x) h^n over the whole torus.
    double total_mass() const { return values.sum() * grid.cell_volume(); }
};

/// {x : dist_torus(x, center) < radius}, centre and radius in lattice units.
struct Ball {
    LatticePoint center{0.0, 0.0};
    double radius = 1.0;

    Ball dilated(double a) const { return {center, radius * a}; }
};

/// Visits every site of the ball; `fn(site)`.
template <class Fn>
void for_each_site(const Grid& grid, const Ball& ball, Fn&& fn);

std::vector<int> ball_sites(const Grid& grid, const Ball& ball);
/// sum_{x in B} v(x) h^n
double ball_mass(const Grid& grid, const Ball& ball, const Vector& v);

struct BallFamily {
    std::vector<Ball> balls;
    /// True when the family holds every site-centred ball with radius 1..max_radius (lattice units).
    bool complete = false;
    double max_radius = 0.0;

    /// Every centre and every radius in {h, 2h, ..., R h}; R defaults to N/4.
    static BallFamily all_balls(const Grid& grid, int max_radius_units = 0);
    /// Explicit list; rejects empty balls and radii beyond the 1/4 torus guard.
    static BallFamily from_balls(const Grid& grid, std::vector<Ball> balls);
};

double ap_constant(const Weight& w, double p, const BallFamily& balls);
double reverse_holder_constant(const Weight& w, double r, const BallFamily& balls);

struct DoublingReport {
    double a = 2.0;
    double p = 2.0;
    double ap_constant = 1.0;
    /// w(aB) / (a^{np} [w]_{A_p} w(B)) per ball of the family, in family order.
    std::vector<double> ratios;
    double max_ratio = 0.0;
    bool pass = false;
};

/// [w]_{A_p} is taken over the family together with its dilates.
DoublingReport doubling_check(const Weight& w, double p, double a, const BallFamily& balls);

/// (M_W f)(y) = max over balls B of the family containing y of (1/w(B)) sum_B |f| w h^n.
Vector maximal_function(const Weight& w, const Vector& f, const BallFamily& balls);

/// (1/w(B_s(y))) sum_x exp(-c dist(x,y)^2 / s^2) w(x) h^n, s and dist in physical units.
double gaussian_weight_integral(const Weight& w, int y, double s, double c);

struct WeightDiagnostics {
    std::string weight_id;
    double p = 2.0;
    double ap_constant = 1.0;
    double rh_r = 2.0;
    double rh_constant = 1.0;
    bool doubling_pass = false;
};

std::string weight_diagnostics_csv_header();
std::string to_csv_row(const WeightDiagnostics& d);

// ---------------------------------------------------------------------------

template <class Fn>
void for_each_site(const Grid& grid, const Ball& ball, Fn&& fn) {
    const double r = ball.radius;
    const double r2 = r * r;
    const int n = grid.n;
    auto range = [&](int axis) {
        const double c = ball.center[axis];
        int lo = int(std::ceil(c - r));
        int hi = int(std::floor(c + r));
        if (hi - lo + 1 > n) {  // ball covers the axis; keep one copy of each index
            lo = int(std::floor(c)) - n / 2;
            hi = lo + n - 1;
        }
        return std::pair<int, int>{lo, hi};
    };
    auto torus_sq = [n](double d) {
        d = std::fabs(std::fmod(d, double(n)));
        d = std::min(d, n - d);
        return d * d;
    };
    const auto [lo0, hi0] = range(0);
    if (grid.dim == 1) {
        for (int i = lo0; i <= hi0; ++i)
            if (torus_sq(i - ball.center[0]) < r2) fn(grid.site(i));
        return;
    }
    const auto [lo1, hi1] = range(1);
    for (int j = lo1; j <= hi1; ++j) {
        const double dj = torus_sq(j - ball.center[1]);
        if (dj >= r2) continue;
        for (int i = lo0; i <= hi0; ++i)
            if (torus_sq(i - ball.center[0]) + dj < r2) fn(grid.site(i, j));
    }
}

}  // namespace ndlab
