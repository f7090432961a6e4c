#include "ndlab/fourier.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fftw3.h>

namespace ndlab {

namespace {

// Inverse DFT (normalised by 1/total) of a frequency table laid out like the sites.
std::vector<std::complex<double>> inverse_dft(const Grid& g, std::vector<std::complex<double>> data) {
    const int n = g.n;
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = g.dim == 1 ? fftw_plan_dft_1d(n, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE)
                                : fftw_plan_dft_2d(n, n, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (auto& v : data) v /= double(g.total_sites);
    return data;
}

std::vector<std::complex<double>> forward_dft(const Grid& g, std::vector<std::complex<double>> data) {
    const int n = g.n;
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = g.dim == 1 ? fftw_plan_dft_1d(n, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE)
                                : fftw_plan_dft_2d(n, n, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return data;
}

}  // namespace

FourierOracle::FourierOracle(const Grid& grid) : grid_(grid) {}

double FourierOracle::laplacian_symbol(int k0, int k1) const {
    const double h = grid_.h;
    const double n = grid_.n;
    double mu = 0.0;
    for (int k : {k0, grid_.dim == 2 ? k1 : 0}) {
        const double s = std::sin(std::numbers::pi * k / n);
        mu += 4.0 * s * s / (h * h);
    }
    return mu;
}

std::complex<double> FourierOracle::gradient_symbol(int axis, int k0, int k1) const {
    const int k = axis == 0 ? k0 : k1;
    return {0.0, std::sin(2.0 * std::numbers::pi * k / grid_.n) / grid_.h};
}

Matrix FourierOracle::multiplier(const Symbol& symbol) const {
    const Grid& g = grid_;
    std::vector<std::complex<double>> table(std::size_t(g.total_sites));
    for (int s = 0; s < g.total_sites; ++s) {
        const auto c = g.coords(s);
        table[std::size_t(s)] = symbol(c[0], c[1]);
    }
    const auto column = inverse_dft(g, std::move(table));
    // Circulant: M(x, y) = column(x - y).
    Matrix M(g.total_sites, g.total_sites);
    for (int y = 0; y < g.total_sites; ++y) {
        const auto cy = g.coords(y);
        for (int x = 0; x < g.total_sites; ++x) {
            const auto cx = g.coords(x);
            M(x, y) = column[std::size_t(g.site(cx[0] - cy[0], cx[1] - cy[1]))].real();
        }
    }
    return M;
}

Vector FourierOracle::apply(const Symbol& symbol, const Vector& f) const {
    const Grid& g = grid_;
    std::vector<std::complex<double>> data(f.data(), f.data() + f.size());
    data = forward_dft(g, std::move(data));
    for (int s = 0; s < g.total_sites; ++s) {
        const auto c = g.coords(s);
        data[std::size_t(s)] *= symbol(c[0], c[1]);
    }
    data = inverse_dft(g, std::move(data));
    Vector out(f.size());
    for (int s = 0; s < g.total_sites; ++s) out[s] = data[std::size_t(s)].real();
    return out;
}

Matrix FourierOracle::heat_kernel(double t) const {
    return multiplier([this, t](int k0, int k1) { return std::exp(-t * t * laplacian_symbol(k0, k1)); }) /
           grid_.cell_volume();
}

Matrix FourierOracle::sqrt_laplacian() const {
    return multiplier([this](int k0, int k1) { return std::sqrt(laplacian_symbol(k0, k1)); });
}

Matrix FourierOracle::inv_sqrt_laplacian() const {
    return multiplier([this](int k0, int k1) {
        const double mu = laplacian_symbol(k0, k1);
        return k0 == 0 && k1 == 0 ? 0.0 : 1.0 / std::sqrt(mu);
    });
}

Matrix FourierOracle::riesz(int axis) const {
    return multiplier([this, axis](int k0, int k1) -> std::complex<double> {
        if (k0 == 0 && k1 == 0) return 0.0;
        return gradient_symbol(axis, k0, k1) / std::sqrt(laplacian_symbol(k0, k1));
    });
}

}  // namespace ndlab
