#pragma once

// Fourier diagonalisation of the constant-coefficient operator -Delta_h on the
// torus. Every operator here is a circulant built from its symbol by an FFT,
// independent of the dense eigen calculus it is compared against.

#include <array>
#include <complex>
#include <functional>

#include "ndlab/lattice.hpp"

namespace ndlab {

class FourierOracle {
public:
    /// Symbol as a function of the integer frequency (k0, k1), k_i in [0, N).
    using Symbol = std::function<std::complex<double>(int, int)>;

    explicit FourierOracle(const Grid& grid);

    /// Eigenvalue of -Delta_h at frequency k: sum_i (4/h^2) sin^2(pi k_i / N).
    double laplacian_symbol(int k0, int k1) const;
    /// Symbol of the centered difference along `axis`: i sin(2 pi k / N) / h.
    std::complex<double> gradient_symbol(int axis, int k0, int k1) const;

    /// Dense circulant with the given symbol.
    Matrix multiplier(const Symbol& symbol) const;
    /// Circulant applied to one vector (real part).
    Vector apply(const Symbol& symbol, const Vector& f) const;

    /// Heat kernel Gamma(x,y) of e^{-t^2 (-Delta_h)}, already divided by h^n.
    Matrix heat_kernel(double t) const;
    Matrix sqrt_laplacian() const;
    Matrix inv_sqrt_laplacian() const;
    /// D_axis (-Delta_h)^{-1/2}
    Matrix riesz(int axis) const;

private:
    Grid grid_;
};

}  // namespace ndlab
