#pragma once

#include "srheat/heat.hpp"

namespace srheat {

// Second-order differential operator with polynomial coefficients:
// sum_{jk} a2[j][k] d_j d_k + sum_j a1[j] d_j + a0.
struct SecondOrderOperator {
    int dim = 0;
    std::vector<std::vector<MultiPoly>> a2;
    std::vector<MultiPoly> a1;
    MultiPoly a0{1};

    static SecondOrderOperator zero(int dim);
    static SecondOrderOperator multiplication(int dim, const Rational& c);
    // X o Y for first-order fields, expanded to canonical form.
    static SecondOrderOperator compose(const PolyVectorField& X, const PolyVectorField& Y);
    static SecondOrderOperator first_order(const PolyVectorField& X);

    SecondOrderOperator& operator+=(const SecondOrderOperator& o);
    MultiPoly apply(const MultiPoly& f) const;  // exact
    int max_coefficient_degree() const;
    bool is_zero() const;
};

// Duhamel first perturbation symbols (A_1 and A_2).
struct PerturbationSymbols {
    SecondOrderOperator A1, A2;
};

// Builds A_1, A_2 from graded parts:
//   A_1 = sum_i (X-hat_i Y_i^{(0)} + Y_i^{(0)} X-hat_i) + X-hat_0
//   A_2 = sum_i (X-hat_i Y_i^{(1)} + Y_i^{(1)} X-hat_i + (Y_i^{(0)})^2) + Y_0^{(0)} - v(0)
// Checks the coefficient-degree bound (r+i)^2.
PerturbationSymbols perturbation_symbols(const std::vector<PolyVectorField>& hats,
                                         const std::vector<PolyVectorField>& Y0_parts,
                                         const std::vector<PolyVectorField>& Y1_parts,
                                         const std::optional<PolyVectorField>& hat_drift,
                                         const std::optional<PolyVectorField>& drift_Y0,
                                         const Rational& v0, int r);

// ---------------------------------------------------------------------------
// Estimator configuration for rescaled-kernel queries.
struct EstimatorCfg {
    enum class Kind { MC, FD } kind = Kind::FD;
    McParams mc;
    FdGrid fd_grid;   // grid in manifold coordinates
    FdParams fd;
    double chart_trust_radius = 1.0;
};

// |eps|^Q e(eps^2 tau, psi^{-1}(delta_eps x), psi^{-1}(delta_eps x'))
// for pairs (x, x') in chart coordinates; pairs must satisfy
// ||x||_sR, ||x'||_sR <= trust radius.
struct RescaledValues {
    std::vector<double> values;
    std::vector<double> errors;  // stderr (MC) or error estimate (FD)
};
RescaledValues rescaled_kernel(const HeatModel& model, const PrivilegedChart& chart,
                               const FlagData& flag, double eps, double tau,
                               const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                               const EstimatorCfg& cfg);

// ---------------------------------------------------------------------------
struct FitSample {
    double tau;
    std::vector<double> x, xp;
    std::vector<double> eps;     // signed
    std::vector<double> value;   // rescaled kernel values
    std::vector<double> sigma;   // per-value error (0 -> uniform weights)
};

struct FitCoefficients {
    std::vector<double> c;       // c_0 .. c_N
    std::vector<double> c_stderr;
    double residual_rms = 0.0;
};

struct ExpansionReport {
    std::vector<FitSample> samples;
    std::vector<FitCoefficients> fits;
    int N = 0;
    double fit_tolerance = 0.0;
    bool pass = true;  // residual <= tolerance everywhere
    double oddness_residual = -1.0;  // |c_1| at the (tau,0,0) sample when present
    double oddness_stderr = 0.0;
    bool high_order_noise_warning = false;  // N > 2 with stochastic inputs
};

// Weighted least squares in powers eps^0..eps^N per sample. Throws on an
// ill-conditioned Vandermonde (grid to blame).
ExpansionReport fit_expansion(const std::vector<FitSample>& inputs, int N, double fit_tolerance);

std::string expansion_to_json(const ExpansionReport& rep);
std::string expansion_to_csv(const ExpansionReport& rep);

// ---------------------------------------------------------------------------
// Homogeneity checks. The kernel estimate is abstracted as a query function
// value(t, x, x') so both FD and closed forms can be checked.
using KernelQuery = std::function<double(double, const std::vector<double>&, const std::vector<double>&)>;

struct HomogeneityReport {
    double max_residual = 0.0;  // relative
    std::vector<double> residuals;
};

// e-hat(t,x,x') = |lam|^Q e-hat(lam^2 t, delta_lam x, delta_lam x')
HomogeneityReport check_hat_homogeneity(const KernelQuery& ehat, const Weights& w, long Q,
                                        const std::vector<double>& lambda_set,
                                        const std::vector<std::tuple<double, std::vector<double>, std::vector<double>>>& samples);

// f_i(t,x,x') = lam^{-i} |lam|^Q f_i(lam^2 t, delta_lam x, delta_lam x')
HomogeneityReport check_fi_homogeneity(const KernelQuery& fi, int i, const Weights& w, long Q,
                                       const std::vector<double>& lambda_set,
                                       const std::vector<std::tuple<double, std::vector<double>, std::vector<double>>>& samples);

// ---------------------------------------------------------------------------
struct WeylReport {
    double slope = 0.0;
    double constant = 0.0;  // limiting constant estimate
    double expected_slope = 0.0;
    bool pass = false;
    std::vector<double> t_grid;
    std::vector<double> values;
};

// Fits log(value) against log(t); PASS when slope == -Q/2 within tol.
WeylReport weyl_fit(const std::vector<double>& t_grid, const std::vector<double>& values, long Q,
                    double tol);

// Diagonal small-time/Weyl check against FD diagonal values. When f is set,
// integrates e(t,q,q) f(q) dmu over a grid of base points inside f_box;
// otherwise uses the single base point. Grids are dilation-adapted per t.
struct WeylCfg {
    int nodes_per_width = 17;  // odd
    double box_widths = 7.0;   // box half-extent in kernel widths t^{w/2}
    int steps = 48;
    double cg_tol = 1e-9;
};
WeylReport diagonal_weyl_check(const HeatModel& model, const Weights& w, long Q,
                               const std::vector<double>& base_point,
                               const std::vector<double>& t_grid, double tol,
                               const WeylCfg& cfg = {},
                               const MultiPoly* f = nullptr, const Box* f_box = nullptr,
                               int f_nodes = 9);

// ---------------------------------------------------------------------------
struct DuhamelResult {
    std::vector<double> values;  // C_1(t) kernel at the targets
    double error_estimate = 0.0;
    bool error_flagged = false;
};

// C_1(t) = int_0^t e^{(t-s)L} A_1 e^{sL} ds applied to the Dirac at source,
// open midpoint quadrature (quad_nodes), FD propagator on the given grid.
DuhamelResult duhamel_c1_kernel(const HeatModel& hat_model, const FdGrid& grid,
                                const SecondOrderOperator& A1, double t,
                                const std::vector<double>& source,
                                const std::vector<std::vector<double>>& targets,
                                int quad_nodes = 16, int substeps = 4,
                                double tolerance = 0.0);

} // namespace srheat
