#pragma once

// Brute-force reference computations used to cross-check the library. They
// work on plain std::vector data in 1D and share no code with src/.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

inline double torus_gap(double a, double b, int n) {
    double d = std::fabs(a - b);
    d = std::fmod(d, double(n));
    return std::min(d, n - d);
}

/// Sites i of the 1D torus with |i - c| < r, lattice units.
inline std::vector<int> interval(double c, double r, int n) {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (torus_gap(i, c, n) < r) out.push_back(i);
    return out;
}

inline double average(const std::vector<double>& v, const std::vector<int>& sites, double power = 1.0) {
    double s = 0.0;
    for (int i : sites) s += std::pow(v[i], power);
    return s / double(sites.size());
}

/// sup over centres c and radii 1..R of avg(w) avg(w^{-1/(p-1)})^{p-1}.
inline double ap(const std::vector<double>& w, double p, int R) {
    const int n = int(w.size());
    double best = 0.0;
    for (int c = 0; c < n; ++c)
        for (int r = 1; r <= R; ++r) {
            const auto B = interval(c, r, n);
            best = std::max(best, average(w, B) * std::pow(average(w, B, -1.0 / (p - 1.0)), p - 1.0));
        }
    return best;
}

inline double reverse_holder(const std::vector<double>& w, double r, int R) {
    const int n = int(w.size());
    double best = 0.0;
    for (int c = 0; c < n; ++c)
        for (int rad = 1; rad <= R; ++rad) {
            const auto B = interval(c, rad, n);
            best = std::max(best, std::pow(average(w, B, r), 1.0 / r) / average(w, B));
        }
    return best;
}

inline double mass(const std::vector<double>& w, const std::vector<int>& sites) {
    double s = 0.0;
    for (int i : sites) s += w[i];
    return s / double(w.size());
}

/// w(aB) / (a^p [w]_{A_p} w(B)) for every ball of radius 1..R, radius-major order.
/// The A_p constant is taken over the balls and their dilates.
inline std::vector<double> doubling_ratios(const std::vector<double>& w, double p, int a, int R) {
    const int n = int(w.size());
    double A = 0.0;
    for (int c = 0; c < n; ++c)
        for (int r = 1; r <= R; ++r)
            for (int scale : {1, a}) {
                const auto B = interval(c, r * scale, n);
                A = std::max(A, average(w, B) * std::pow(average(w, B, -1.0 / (p - 1.0)), p - 1.0));
            }
    std::vector<double> out;
    for (int r = 1; r <= R; ++r)
        for (int c = 0; c < n; ++c)
            out.push_back(mass(w, interval(c, a * r, n)) / (std::pow(a, p) * A * mass(w, interval(c, r, n))));
    return out;
}

/// Unweighted maximal function of the indicator of site 0 over radii 1..R.
inline std::vector<double> maximal_of_indicator(int n, int R) {
    std::vector<double> out(n, 0.0);
    for (int c = 0; c < n; ++c)
        for (int r = 1; r <= R; ++r) {
            const auto B = interval(c, r, n);
            const bool hits = std::find(B.begin(), B.end(), 0) != B.end();
            for (int y : B) out[y] = std::max(out[y], hits ? 1.0 / double(B.size()) : 0.0);
        }
    return out;
}

struct Cube {
    int level;
    int index;
};

struct CZConstants {
    std::vector<Cube> cubes;
    double c1, c2, c3, c4, c5_upper, c5_lower;
};

/// Dyadic stopping time on the 1D torus with W-averages, selecting at avg >= alpha.
inline CZConstants cz(const std::vector<double>& f, const std::vector<double>& W, double alpha) {
    const int n = int(f.size());
    const double h = 1.0 / n;
    std::vector<Cube> chosen;
    std::vector<char> covered(n, 0);
    for (int level = 1; (n >> level) >= 1; ++level) {
        const int side = n >> level;
        for (int q = 0; q < (1 << level); ++q) {
            if (covered[q * side]) continue;
            double num = 0.0, den = 0.0;
            for (int i = q * side; i < (q + 1) * side; ++i) {
                num += std::fabs(f[i]) * W[i];
                den += W[i];
            }
            if (num / den >= alpha) {
                chosen.push_back({level, q});
                for (int i = q * side; i < (q + 1) * side; ++i) covered[i] = 1;
            }
        }
    }

    std::vector<double> g = f;
    std::vector<int> overlap(n, 0);
    CZConstants out{chosen, 0, 0, 0, 0, 0, 1e300};
    double ball_total = 0.0, f_l1 = 0.0;
    for (int i = 0; i < n; ++i) f_l1 += std::fabs(f[i]) * W[i] * h;
    for (const Cube& q : chosen) {
        const int side = n >> q.level;
        double num = 0.0, den = 0.0;
        for (int i = q.index * side; i < (q.index + 1) * side; ++i) {
            num += f[i] * W[i];
            den += W[i];
        }
        const double avg = num / den;
        std::vector<double> b(n, 0.0);
        for (int i = q.index * side; i < (q.index + 1) * side; ++i) {
            b[i] = f[i] - avg;
            g[i] = avg;
        }
        const auto B = interval(q.index * side + 0.5 * (side - 1), 0.5 * side, n);
        double wB = 0.0, bB = 0.0, fB = 0.0;
        for (int i : B) {
            wB += W[i] * h;
            bB += std::fabs(b[i]) * W[i] * h;
            fB += std::fabs(f[i]) * W[i] * h;
            ++overlap[i];
        }
        ball_total += wB;
        out.c2 = std::max(out.c2, bB / (alpha * wB));
        out.c5_upper = std::max(out.c5_upper, fB / wB / alpha);
        out.c5_lower = std::min(out.c5_lower, fB / wB / alpha);
    }
    for (double v : g) out.c1 = std::max(out.c1, std::fabs(v) / alpha);
    out.c3 = alpha * ball_total / f_l1;
    out.c4 = *std::max_element(overlap.begin(), overlap.end());
    return out;
}

/// Eigenvalue of -Delta_h on the 1D torus at frequency k.
inline double laplacian_eigenvalue(int k, int n) {
    const double s = std::sin(std::numbers::pi * k / n);
    return 4.0 * n * n * s * s;
}

/// f(-Delta_h)(x, y) as a cosine sum (the matrix, not divided by h).
template <class F>
std::vector<std::vector<double>> circulant(int n, F&& symbol) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += symbol(laplacian_eigenvalue(k, n)) * std::cos(2.0 * std::numbers::pi * k * (x - y) / n);
            m[x][y] = s / n;
        }
    return m;
}

}  // namespace oracle
