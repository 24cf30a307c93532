#pragma once

#include "srheat/chart.hpp"

#include <functional>
#include <optional>

namespace srheat {

struct EmptyLowestPart : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonpositiveDensity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Smooth cutoff: chi = 1 on ||x||_sR <= R1, chi = 0 on ||x||_sR >= R2,
// exp-bump interpolation in between.
struct CutoffSpec {
    double R1 = 1.0;
    double R2 = 2.0;
    std::string profile = "exp_bump";

    double chi_of_norm(double s) const;
    double chi(const std::vector<double>& x, const Weights& w) const;
};

// Nilpotentization at a base point, expressed in the privileged chart.
struct NilpotentStructure {
    int dim = 0;
    Weights weights;
    std::vector<PolyVectorField> hat_fields;  // delta-homogeneous of degree -1
    std::optional<PolyVectorField> hat_drift;
    int drift_degree = 0;  // -1 or -2 when hat_drift is set
    double measure_constant = 1.0;  // d(mu-hat)/d(Lebesgue)
    int r = 0;
};

// Nilpotentize pushed fields: hat = degree-(-1) graded part of each field in
// chart coordinates; drift hat = degree -1 part, or degree -2 when
// drift_in_D2. density is the model measure density on the manifold.
NilpotentStructure nilpotentize(const std::vector<PolyVectorField>& fields,
                                const std::optional<PolyVectorField>& drift,
                                const PrivilegedChart& chart, bool drift_in_D2,
                                const MultiPoly& density);

// h(q): density value at the point (mu-hat = h(q) * nu-hat in the chart).
Rational nilpotentize_measure(const MultiPoly& density, const std::vector<Rational>& point);

struct DivergenceReport {
    bool divergence_free;
    std::vector<MultiPoly> residuals;  // div of each hat field, exact
};
DivergenceReport check_divergence_free(const NilpotentStructure& S);

// Applies the nilpotentized operator sum X-hat_i^2 (+ X-hat_0) to a polynomial,
// exactly. (The grid-function variant lives with the finite-difference solver.)
MultiPoly hat_operator_apply(const NilpotentStructure& S, const MultiPoly& f);

// Damped field Y^{eps,gamma} = X-hat + (delta_{eps^gamma}^* chi)(Y^eps - X-hat);
// evaluated pointwise, never expanded (the cutoff is not polynomial).
class DampedField {
public:
    DampedField(const PolyVectorField& pushed_field, const PolyVectorField& hat,
                const Weights& w, double gamma, double eps, CutoffSpec cutoff);

    std::vector<double> evaluate(const std::vector<double>& x) const;
    std::vector<double> evaluate_hat(const std::vector<double>& x) const;
    // sup-norm of Y^{eps,gamma} - X-hat over the scaled sample set
    // {delta_{1/|eps|^gamma}(u) : u in samples}; samples should cover the
    // sR-ball of radius R2.
    double sup_deviation(const std::vector<std::vector<double>>& samples) const;

    double gamma() const { return gamma_; }
    double eps() const { return eps_; }
    const CutoffSpec& cutoff() const { return cutoff_; }

private:
    Weights w_;
    CompiledField hat_;
    CompiledField correction_;  // Y^eps - X-hat, exact polynomial
    double gamma_;
    double eps_;
    CutoffSpec cutoff_;
    int dim_;
};

DampedField damped_field(const PolyVectorField& pushed_field, const NilpotentStructure& S,
                         double gamma, double eps, const CutoffSpec& cutoff);

// Default damping parameter: half the admissibility threshold 1/(r(r+1)).
inline double default_gamma(int r) { return 1.0 / (2.0 * r * (r + 1)); }

struct RateFit {
    double exponent;      // least-squares slope of log sup-error vs log|eps|
    double residual;      // rms residual of the log-log fit
    std::vector<double> eps_values;
    std::vector<double> sup_errors;
};

// Fits the uniform convergence rate of Y^{eps,gamma} -> X-hat over an eps grid.
// Requires >= 4 points spanning >= 4 decades. samples parametrize the sup in
// scaled coordinates (sR-ball of radius R2).
RateFit damping_rate_fit(const PolyVectorField& pushed_field, const NilpotentStructure& S,
                         double gamma, const std::vector<double>& eps_grid,
                         const std::vector<std::vector<double>>& samples,
                         const CutoffSpec& cutoff = CutoffSpec{});

struct CoercivityReport {
    double c;  // min over grid of <x>^{2r} lambda_min(P P^T); 0 if degenerate
    std::vector<double> argmin;
};

// Grid lower bound for the polynomial strong Hormander inequality
// ||y||^2 <= (1/c) <x>^{2r} sum_i <Y_i(x), y>^2.
CoercivityReport hormander_coercivity(const std::vector<PolyVectorField>& frame, int r,
                                      const std::vector<std::vector<double>>& grid);

// Low-discrepancy points in the closed sR-ball of the given radius (Halton
// sequence mapped through per-axis powers), deterministic.
std::vector<std::vector<double>> sr_ball_samples(const Weights& w, double radius,
                                                 int count);

std::string nilpotent_to_json(const NilpotentStructure& S);

} // namespace srheat
