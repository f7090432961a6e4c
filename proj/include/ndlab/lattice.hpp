#pragma once

// Periodic lattice geometry, coefficient fields and finite-difference
// assembly of the non-divergence operator L u = -sum_ij a_ij D_i D_j u.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ndlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// One grid function per coordinate axis.
using VectorField = std::vector<Vector>;

/// Point in lattice index units (site i sits at coordinate i).
using LatticePoint = std::array<double, 2>;

/// Unit torus [0,1)^dim sampled at N points per axis, h = 1/N.
/// Sites are numbered with axis 0 fastest.
struct Grid {
    int dim = 1;
    int n = 0;
    double h = 0.0;
    int total_sites = 0;

    std::array<int, 2> coords(int site) const {
        return {site % n, dim == 2 ? site / n : 0};
    }
    int site(int i0, int i1 = 0) const {
        const int a = ((i0 % n) + n) % n;
        const int b = dim == 2 ? ((i1 % n) + n) % n : 0;
        return a + n * b;
    }
    /// Neighbour reached by moving `offset` steps along `axis`, wrapping.
    int shift(int site, int axis, int offset) const {
        auto c = coords(site);
        c[axis] += offset;
        return this->site(c[0], c[1]);
    }
    double position(int site, int axis) const { return coords(site)[axis] * h; }
    LatticePoint point(int site) const {
        const auto c = coords(site);
        return {double(c[0]), double(c[1])};
    }
    /// h^dim, the quadrature weight of one site.
    double cell_volume() const { return dim == 1 ? h : h * h; }
    /// Torus Euclidean distance in physical units.
    double distance(int a, int b) const { return distance(point(a), b); }
    double distance(const LatticePoint& p, int b) const;
    /// Largest distance realised on the torus, sqrt(dim)/2.
    double diameter() const;
};

Grid build_grid(int dim, int n);

/// 10 h^2: how far below the imaginary axis the spectrum of a consistent
/// discretisation may reach.
inline double spectrum_floor(const Grid& grid) { return 10.0 * grid.h * grid.h; }

enum class CoefficientPreset { Identity, Scalar, SmoothAnisotropic };

std::string to_string(CoefficientPreset preset);
CoefficientPreset parse_preset(const std::string& name);

/// Named coefficient family plus its parameters.
///
///  identity            a_ij = delta_ij
///  scalar              a(x) I with a = 2 + amplitude * sin(2 pi f x0) [* cos(2 pi f x1) in 2D]
///  smooth_anisotropic  1D: 1 + amplitude * sin(2 pi f x0)
///                      2D: I + amplitude * m(x) R(x), R a unit reflection whose
///                          axis rotates with x, m in [0,1] peaking at (1/4,1/4)
struct CoefficientSpec {
    CoefficientPreset preset = CoefficientPreset::Identity;
    double amplitude = 1.0;
    int frequency = 1;
    /// Required ellipticity; make_coefficients fails if the tight bound is smaller.
    std::optional<double> lambda_min;

    static CoefficientSpec identity() { return {}; }
    static CoefficientSpec scalar(double amplitude = 1.0, int frequency = 1) {
        return {CoefficientPreset::Scalar, amplitude, frequency, std::nullopt};
    }
    static CoefficientSpec smooth_anisotropic(double eps, int frequency = 1) {
        return {CoefficientPreset::SmoothAnisotropic, eps, frequency, std::nullopt};
    }
};

/// Symmetric a_ij per site. In 1D only a11 is used.
struct SiteMatrix {
    double a11 = 1.0;
    double a12 = 0.0;
    double a22 = 1.0;

    double operator()(int i, int j) const {
        if (i == 0 && j == 0) return a11;
        if (i == 1 && j == 1) return a22;
        return a12;
    }
};

struct CoefficientField {
    Grid grid;
    std::vector<SiteMatrix> entries;
    /// Tight ellipticity constant: spec(A(x)) in [lambda, 1/lambda] at every site.
    double lambda = 1.0;
    /// Extreme site eigenvalues.
    double min_eigenvalue = 1.0;
    double max_eigenvalue = 1.0;
};

CoefficientField make_coefficients(const Grid& grid, const CoefficientSpec& spec);

/// Field from an arbitrary site function (physical coordinates x0, x1).
CoefficientField make_coefficients(const Grid& grid,
                                   const std::function<SiteMatrix(double, double)>& a,
                                   std::optional<double> lambda_min = std::nullopt);

/// Assembled L and the centered gradients D_i. Immutable after construction.
class DiscreteOperator {
public:
    DiscreteOperator(CoefficientField coeffs, SparseMatrix L, std::vector<SparseMatrix> gradients);

    const Grid& grid() const { return coeffs_.grid; }
    const CoefficientField& coefficients() const { return coeffs_; }
    const SparseMatrix& matrix() const { return L_; }
    const std::vector<SparseMatrix>& gradients() const { return grads_; }
    int size() const { return grid().total_sites; }

    Matrix dense() const { return Matrix(L_); }
    /// For assembled operators this is the matrix-free stencil in difference
    /// form, so L 1 = 0 holds bit-exactly; otherwise the stored matrix.
    Vector apply(const Vector& u) const;
    VectorField gradient(const Vector& u) const;
    /// Maximum absolute row sum of L.
    double norm_inf() const { return norm_inf_; }
    bool is_symmetric(double rel_tol = 1e-14) const;

private:
    CoefficientField coeffs_;
    SparseMatrix L_;
    std::vector<SparseMatrix> grads_;
    double norm_inf_ = 0.0;
    bool stencil_form_ = false;

    friend DiscreteOperator assemble_operator(const Grid&, const CoefficientField&);
};

DiscreteOperator assemble_operator(const Grid& grid, const CoefficientField& coeffs);

/// Samples a function of the physical coordinates at every site.
Vector sample(const Grid& grid, const std::function<double(double, double)>& f);

}  // namespace ndlab
