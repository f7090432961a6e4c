#pragma once

// Conical square function built from t^2 L e^{-t^2 L} and the H^1 ratio of the
// Riesz transform against it.

#include <vector>

#include "ndlab/calculus.hpp"

namespace ndlab {

/// Trapezoid weights in log t for an increasing time grid; a single time gets weight log 2.
std::vector<double> log_time_weights(const std::vector<double>& tgrid);

/// S f(x)^2 = sum_t dlog(t) sum_{dist(y,x) < t} |t^2 L e^{-t^2 L} f(y)|^2 W(y) h^n / W(B_t(x))
class SquareFunction {
public:
    SquareFunction(const AnalyzedOperator& A, const Weight& W, std::vector<double> tgrid);

    Vector operator()(const Vector& f) const;
    const std::vector<double>& times() const { return times_; }

private:
    Weight W_;
    std::vector<double> times_;
    std::vector<double> log_weights_;
    std::vector<Matrix> tle_;
    /// Ball site lists per time, indexed by centre.
    std::vector<std::vector<std::vector<int>>> balls_;
    std::vector<Vector> ball_mass_;
};

Vector square_function(const AnalyzedOperator& A, const Weight& W, const Vector& f, const std::vector<double>& tgrid);

/// ||T f||_{L^1_W} / ||S f||_{L^1_W} for W-mean-zero f.
double h1_riesz_ratio(const RieszTransform& T, const SquareFunction& S, const Weight& W, const Vector& f);
double h1_riesz_ratio(const AnalyzedOperator& A, const Weight& W, const Vector& f, const std::vector<double>& tgrid);

/// Dyadic times 2^{-k} from 1/4 down to the smallest one >= `finest`.
std::vector<double> dyadic_times(double finest);

}  // namespace ndlab
