#pragma once

#include "srheat/nilpotent.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

namespace srheat {

struct Box {
    std::vector<double> lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const std::vector<double>& x, double slack = 0.0) const;
};

// Hormander heat model: Delta = sum X_i^2 + X_0 - V, heat kernel taken with
// respect to the measure h * Lebesgue on the working box.
struct HeatModel {
    int dim = 0;
    std::vector<PolyVectorField> fields;
    std::optional<PolyVectorField> drift;
    MultiPoly potential{1};  // zero polynomial of matching dim unless set
    MultiPoly density{1};    // positive on the box
    Box box;

    static HeatModel make(std::vector<PolyVectorField> fields, Box box);
    void validate() const;  // V bounded below / h > 0 on a scan grid
};

struct KernelEstimate {
    enum class Method { MC, FD };
    Method method = Method::MC;
    double t = 0.0;
    std::vector<double> source;
    std::vector<std::vector<double>> targets;
    std::vector<double> values;   // density w.r.t. the measure in measure_tag
    std::vector<double> stderr_;  // per-point (MC only; empty for FD)
    std::string measure_tag = "model";  // "model" (h*Lebesgue) or "lebesgue"
    // diagnostics
    double killed_fraction = 0.0;   // MC: exited/exploded paths
    double mass = 0.0;              // FD: integral of the kernel over the box
    double error_estimate = 0.0;    // FD: Richardson-style global estimate
    double bias_estimate = 0.0;     // MC: KDE bandwidth bias scale at the peak
    bool negative_flagged = false;  // FD: values below -1e-8 * max
};

std::string kernel_to_json(const KernelEstimate& e);
std::string kernel_to_csv(const KernelEstimate& e);

// ---------------------------------------------------------------------------
// Monte Carlo estimator: Stratonovich SDE dx = sqrt(2) sum X_i o dw + X_0 dt,
// Euler-Heun predictor-corrector, Feynman-Kac weight for V, product KDE with
// per-axis bandwidth b^{w_j}.
struct McParams {
    std::int64_t n_paths = 100000;
    double dt = 0.0;          // 0 -> t/500
    double bandwidth = 0.0;   // 0 -> pilot Silverman on weight-1 axes
    double bandwidth_scale = 1.0;  // multiplies the pilot bandwidth
    std::uint64_t seed = 1;
    std::vector<int> kde_weights;  // per-axis dilation weights; empty -> all 1
    int batches = 20;
    int threads = 1;  // deterministic reduction in fixed block order
};

KernelEstimate mc_kernel(const HeatModel& model, double t, const std::vector<double>& source,
                         const std::vector<std::vector<double>>& targets, const McParams& p);

// ---------------------------------------------------------------------------
// Finite-difference Dirichlet estimator: centered first-order stencils applied
// twice (sum-of-squares form), Crank-Nicolson with Rannacher start-up.
struct FdGrid {
    Box box;                 // Dirichlet box (zero outside)
    std::vector<int> nodes;  // nodes per axis, boundary included
};

struct FdParams {
    int steps = 0;          // 0 -> max(64, ceil(t / min-cell)) heuristic
    int rannacher_steps = 2;
    double cg_tol = 1e-10;
    bool error_estimate = false;  // companion coarse run, Richardson
};

KernelEstimate fd_kernel(const HeatModel& model, double t, const FdGrid& grid,
                         const std::vector<double>& source,
                         const std::vector<std::vector<double>>& targets, const FdParams& p = {});

// Read values out of an evolved solver (multilinear interpolation at targets).
class FdSolver;
KernelEstimate fd_kernel_at(const FdSolver& solver, double t, const std::vector<double>& source,
                            const std::vector<std::vector<double>>& targets);

// Diagonal value e(t, source, source) through the half-time L2 identity
// e(t,q,q) = int e(t/2,q,y)^2 dmu(y), valid for self-adjoint models. Far less
// readout error than peak interpolation on coarse grids. error_estimate is
// filled from a coarse companion run when requested.
KernelEstimate fd_diagonal(const HeatModel& model, double t, const FdGrid& grid,
                           const std::vector<double>& source, const FdParams& p = {});

// Reusable solver: assembles the spatial operator once and exposes stepping,
// snapshots and operator application (needed by the Duhamel pipeline).
class FdSolver {
public:
    FdSolver(const HeatModel& model, const FdGrid& grid);

    void set_dirac(const std::vector<double>& source);
    void set_state(std::vector<double> u);
    // advance by n Crank-Nicolson steps of size dt (first call applies
    // Rannacher smoothing when enabled)
    void steps(int n, double dt, int rannacher = 2, double cg_tol = 1e-10);
    void apply_operator(const std::vector<double>& u, std::vector<double>& out) const;

    const std::vector<double>& state() const { return u_; }
    double value_at(const std::vector<double>& x) const;  // multilinear interp
    double cell_volume() const { return cellvol_; }
    double mass() const;        // sum u * cellvol * h
    double state_l2_mu() const;  // int u^2 dmu
    int nodes_total() const { return ntot_; }
    const FdGrid& grid() const { return grid_; }
    bool symmetric() const { return symmetric_; }
    // apply an assembled second-order operator (Duhamel perturbation)
    Eigen::SparseMatrix<double> assemble_second_order(
        const std::vector<std::vector<MultiPoly>>& a2,  // coefficients of d_j d_k
        const std::vector<MultiPoly>& a1,               // coefficients of d_j
        const MultiPoly& a0) const;

    std::vector<double> node_point(int flat) const;
    int node_index(const std::vector<double>& x) const;  // -1 if not a node

private:
    void assemble(const HeatModel& model);
    void factor(double dt);

    FdGrid grid_;
    int dim_;
    std::vector<double> h_;
    std::vector<int> inner_;  // interior nodes per axis
    int ntot_ = 0;
    double cellvol_ = 1.0;
    std::vector<double> hval_;  // density at nodes
    Eigen::SparseMatrix<double> L_;
    Eigen::SparseMatrix<double> Mminus_, Mplus_;  // I -+ dt/2 L
    Eigen::SparseMatrix<double> MminusHalf_;      // I - dt/2 L (backward Euler, dt/2)
    double factored_dt_ = -1.0;
    bool symmetric_ = true;
    std::vector<double> u_;
};

// ---------------------------------------------------------------------------
struct KacReport {
    std::vector<double> t_grid;
    std::vector<double> discrepancy;  // sup over interior points
    double slope = 0.0;               // log-log fit on points above the floor
    double floor = 0.0;
    bool below_floor = false;
    bool pass = false;
};

// Kac "not feeling the boundary": FD on nested boxes, discrepancy decay check.
// PASS if fitted slope > 3 or discrepancy below the solver error floor.
KacReport kac_check(const HeatModel& model, const std::vector<double>& t_grid,
                    const FdGrid& grid_small, const FdGrid& grid_large,
                    const std::vector<std::vector<double>>& interior_points,
                    const FdParams& p = {});

// ---------------------------------------------------------------------------
// Kernel transformation utilities (relabelings, exact).

// e_{A,mu}(t,q,q') = e_{A,nu}(t,q,q') / h(q') for mu = h nu: divides values by
// h(target), retags the estimate.
KernelEstimate kernel_change_measure(const KernelEstimate& est, const MultiPoly& h,
                                     const std::string& new_tag);

struct DilationSpec {
    Weights w;
    double eps = 1.0;
    long Q = 0;  // |J| = |eps|^Q
};

// Pullback relabeling under phi = delta_eps: from an estimate of e at
// (t, delta_eps x, delta_eps x') produces the estimate of the pulled-back
// kernel at (t, x, x'): values *= |eps|^Q, points relabeled by delta_{1/eps}.
KernelEstimate kernel_diffeo_transform(const KernelEstimate& est, const DilationSpec& phi);

struct DecayFit {
    bool pass = false;
    bool inconclusive = false;
    double slope = 0.0;     // fitted d(log e)/d(d^2/t)
    double threshold = 0.0; // -1/(4(1+eps_slack))
};

// Fits log e(t,x,y) against d_sR(x,y)^2 / t and checks the Gaussian-type upper
// envelope slope.
DecayFit exp_decay_check(const std::vector<KernelEstimate>& family,
                         const std::function<double(const std::vector<double>&,
                                                    const std::vector<double>&)>& sr_distance,
                         double eps_slack);

// Grid-function variant of the nilpotentized operator application.
std::vector<double> hat_operator_apply_grid(const NilpotentStructure& S, const FdSolver& solver,
                                            const std::vector<double>& u);

} // namespace srheat
