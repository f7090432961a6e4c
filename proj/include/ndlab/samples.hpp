#pragma once

// Deterministic test-function families. Every generator draws its random
// numbers independently of N, so the same seed gives the same continuum
// function (band-limited) or the same physical location (spikes) at every
// resolution.

#include <cstdint>
#include <vector>

#include "ndlab/lattice.hpp"
#include "ndlab/weights.hpp"

namespace ndlab {

/// Sum of cos/sin modes with integer frequencies |k_i| <= band (k != 0) and
/// standard normal coefficients. Lebesgue mean zero.
Vector band_limited(const Grid& grid, int band, std::uint64_t seed);

/// Site nearest to the physical point drawn from `seed`.
int random_site(const Grid& grid, std::uint64_t seed);

/// f = delta_x / (W(x) h^n), so ||f||_{L^1_W} = 1.
Vector weighted_spike(const Weight& W, int site);

/// f - (sum f W h^n) / (sum W h^n): the W-mean-zero part of f.
Vector remove_weighted_mean(const Weight& W, const Vector& f);

struct SampleFamily {
    std::vector<Vector> spikes;
    std::vector<Vector> band_limited;

    std::vector<Vector> all() const;
};

/// `spikes` W-normalized spikes and `smooth` band-limited functions from one seed.
SampleFamily make_family(const Weight& W, int spikes, int smooth, int band, std::uint64_t seed);

}  // namespace ndlab
