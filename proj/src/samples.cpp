#include "ndlab/samples.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ndlab/errors.hpp"

namespace ndlab {

Vector band_limited(const Grid& g, int band, std::uint64_t seed) {
    if (band < 1) throw LabError(ErrorCode::InvalidArgument, "lab", "band must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    Vector f = Vector::Zero(g.total_sites);
    auto add_mode = [&](int k0, int k1) {
        const double a = normal(rng);
        const double b = normal(rng);
        for (int s = 0; s < g.total_sites; ++s) {
            const double phase = two_pi * (k0 * g.position(s, 0) + (g.dim == 2 ? k1 * g.position(s, 1) : 0.0));
            f[s] += a * std::cos(phase) + b * std::sin(phase);
        }
    };
    if (g.dim == 1) {
        for (int k = 1; k <= band; ++k) add_mode(k, 0);
    } else {
        // Half plane of frequencies: k0 > 0, or k0 == 0 and k1 > 0.
        for (int k0 = 0; k0 <= band; ++k0)
            for (int k1 = -band; k1 <= band; ++k1)
                if (k0 > 0 || k1 > 0) add_mode(k0, k1);
    }
    return f;
}

int random_site(const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int i0 = std::min(g.n - 1, int(u(rng) * g.n));
    const int i1 = g.dim == 2 ? std::min(g.n - 1, int(u(rng) * g.n)) : 0;
    return g.site(i0, i1);
}

Vector weighted_spike(const Weight& W, int site) {
    Vector f = Vector::Zero(W.grid.total_sites);
    f[site] = 1.0 / (W.values[site] * W.grid.cell_volume());
    return f;
}

Vector remove_weighted_mean(const Weight& W, const Vector& f) {
    const double mean = (f.array() * W.values.array()).sum() / W.values.sum();
    return (f.array() - mean).matrix();
}

std::vector<Vector> SampleFamily::all() const {
    std::vector<Vector> out = spikes;
    out.insert(out.end(), band_limited.begin(), band_limited.end());
    return out;
}

SampleFamily make_family(const Weight& W, int spikes, int smooth, int band, std::uint64_t seed) {
    SampleFamily fam;
    std::vector<std::uint64_t> seeds(std::size_t(spikes + smooth));
    std::mt19937_64 master(seed);
    for (auto& s : seeds) s = master();
    for (int i = 0; i < spikes; ++i) fam.spikes.push_back(weighted_spike(W, random_site(W.grid, seeds[i])));
    for (int i = 0; i < smooth; ++i) fam.band_limited.push_back(band_limited(W.grid, band, seeds[spikes + i]));
    return fam;
}

}  // namespace ndlab
