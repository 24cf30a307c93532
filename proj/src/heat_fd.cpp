#include "srheat/heat.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>

namespace srheat {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

} // namespace

FdSolver::FdSolver(const HeatModel& model, const FdGrid& grid) : grid_(grid), dim_(model.dim)
{
    if (grid.box.dim() != dim_ || static_cast<int>(grid.nodes.size()) != dim_)
        throw DimensionMismatch("FdSolver: grid dimension mismatch");
    h_.resize(dim_);
    inner_.resize(dim_);
    cellvol_ = 1.0;
    ntot_ = 1;
    for (int k = 0; k < dim_; ++k) {
        if (grid.nodes[k] < 3) throw std::invalid_argument("FdSolver: need at least 3 nodes per axis");
        h_[k] = (grid.box.hi[k] - grid.box.lo[k]) / (grid.nodes[k] - 1);
        inner_[k] = grid.nodes[k] - 2;
        cellvol_ *= h_[k];
        ntot_ *= inner_[k];
    }
    assemble(model);
    u_.assign(ntot_, 0.0);
}

std::vector<double> FdSolver::node_point(int flat) const
{
    std::vector<double> x(dim_);
    for (int k = dim_ - 1; k >= 0; --k) {
        int i = flat % inner_[k];
        flat /= inner_[k];
        x[k] = grid_.box.lo[k] + (i + 1) * h_[k];
    }
    return x;
}

int FdSolver::node_index(const std::vector<double>& x) const
{
    int flat = 0;
    for (int k = 0; k < dim_; ++k) {
        double fi = (x[k] - grid_.box.lo[k]) / h_[k] - 1.0;
        int i = static_cast<int>(std::llround(fi));
        if (i < 0 || i >= inner_[k] || std::abs(fi - i) > 1e-9) return -1;
        flat = flat * inner_[k] + i;
    }
    return flat;
}

void FdSolver::assemble(const HeatModel& model)
{
    // first-order centered operator per field: (A f)(x) = sum_k a_k(x) D_k f
    auto first_order = [&](const PolyVectorField& X) {
        std::vector<CompiledPoly> comp;
        comp.reserve(dim_);
        for (int k = 0; k < dim_; ++k) comp.emplace_back(X.component(k));
        std::vector<Triplet> trip;
        std::vector<int> idx(dim_);
        std::vector<double> x(dim_);
        for (int flat = 0; flat < ntot_; ++flat) {
            int rem = flat;
            for (int k = dim_ - 1; k >= 0; --k) {
                idx[k] = rem % inner_[k];
                rem /= inner_[k];
                x[k] = grid_.box.lo[k] + (idx[k] + 1) * h_[k];
            }
            for (int k = 0; k < dim_; ++k) {
                if (comp[k].is_zero()) continue;
                double a = comp[k].eval(x.data());
                if (a == 0.0) continue;
                double c = a / (2.0 * h_[k]);
                int stride = 1;
                for (int kk = k + 1; kk < dim_; ++kk) stride *= inner_[kk];
                if (idx[k] + 1 < inner_[k]) trip.emplace_back(flat, flat + stride, c);
                if (idx[k] - 1 >= 0) trip.emplace_back(flat, flat - stride, -c);
            }
        }
        SpMat A(ntot_, ntot_);
        A.setFromTriplets(trip.begin(), trip.end());
        return A;
    };

    L_ = SpMat(ntot_, ntot_);
    for (const auto& X : model.fields) {
        SpMat A = first_order(X);
        L_ += SpMat(A * A);
    }
    if (model.drift) L_ += first_order(*model.drift);
    if (!model.potential.is_zero()) {
        CompiledPoly V(model.potential);
        std::vector<Triplet> trip;
        for (int flat = 0; flat < ntot_; ++flat) {
            std::vector<double> x = node_point(flat);
            double v = V.eval(x.data());
            if (v != 0.0) trip.emplace_back(flat, flat, -v);
        }
        SpMat D(ntot_, ntot_);
        D.setFromTriplets(trip.begin(), trip.end());
        L_ += D;
    }
    L_.makeCompressed();

    SpMat Lt = SpMat(L_.transpose());
    SpMat diff = L_ - Lt;
    symmetric_ = diff.coeffs().size() == 0 ||
                 diff.coeffs().cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + L_.coeffs().cwiseAbs().maxCoeff());

    hval_.resize(ntot_);
    CompiledPoly hpoly(model.density);
    for (int flat = 0; flat < ntot_; ++flat) {
        std::vector<double> x = node_point(flat);
        hval_[flat] = hpoly.eval(x.data());
    }
}

void FdSolver::factor(double dt)
{
    SpMat I(ntot_, ntot_);
    I.setIdentity();
    Mminus_ = I - 0.5 * dt * L_;
    Mplus_ = I + 0.5 * dt * L_;
    MminusHalf_ = I - 0.5 * dt * L_;  // backward Euler with step dt/2
    Mminus_.makeCompressed();
    Mplus_.makeCompressed();
    MminusHalf_.makeCompressed();
    factored_dt_ = dt;
}

void FdSolver::set_dirac(const std::vector<double>& source)
{
    int idx = node_index(source);
    if (idx < 0) throw std::invalid_argument("FdSolver: source is not a grid node");
    u_.assign(ntot_, 0.0);
    // The twice-applied centered stencil decouples lattice parity classes, so a
    // one-node Dirac over-concentrates on its own class. Distribute the unit
    // mass with tensor weights (1/4, 1/2, 1/4) per axis: every parity class
    // receives its share and the first moment is unbiased.
    std::vector<int> idxv(dim_);
    int rem = idx;
    for (int k = dim_ - 1; k >= 0; --k) {
        idxv[k] = rem % inner_[k];
        rem /= inner_[k];
    }
    std::vector<int> off(dim_, -1);
    while (true) {
        double wgt = 1.0;
        int flat = 0;
        bool ok = true;
        for (int k = 0; k < dim_; ++k) {
            int i = idxv[k] + off[k];
            if (i < 0 || i >= inner_[k]) {
                ok = false;
                break;
            }
            wgt *= off[k] == 0 ? 0.5 : 0.25;
            flat = flat * inner_[k] + i;
        }
        if (ok) u_[flat] += wgt / (cellvol_ * hval_[flat]);
        int k = 0;
        for (; k < dim_; ++k) {
            if (++off[k] <= 1) break;
            off[k] = -1;
        }
        if (k == dim_) break;
    }
}

void FdSolver::set_state(std::vector<double> u)
{
    if (static_cast<int>(u.size()) != ntot_) throw DimensionMismatch("FdSolver: state size");
    u_ = std::move(u);
}

void FdSolver::steps(int n, double dt, int rannacher, double cg_tol)
{
    if (n <= 0) return;
    if (dt <= 0.0) throw std::invalid_argument("FdSolver: dt must be positive");
    if (dt != factored_dt_) factor(dt);

    Eigen::Map<Eigen::VectorXd> u(u_.data(), ntot_);
    Eigen::VectorXd rhs(ntot_);

    auto run = [&](auto& solver) {
        solver.setTolerance(cg_tol);
        // Rannacher start-up: each smoothed step = two backward-Euler half steps
        int sm = std::min(rannacher, n);
        if (sm > 0) {
            solver.compute(MminusHalf_);
            if (solver.info() != Eigen::Success)
                throw std::runtime_error("FdSolver: factorization failed (stability: decrease dt)");
            for (int s = 0; s < 2 * sm; ++s) {
                Eigen::VectorXd next = solver.solveWithGuess(u, u);
                u = next;
            }
        }
        if (n - sm > 0) {
            solver.compute(Mminus_);
            for (int s = 0; s < n - sm; ++s) {
                rhs = Mplus_ * u;
                Eigen::VectorXd next = solver.solveWithGuess(rhs, u);
                if (solver.info() == Eigen::NoConvergence)
                    throw std::runtime_error("FdSolver: linear solve did not converge (stability: decrease dt below " +
                                             std::to_string(dt) + ")");
                u = next;
            }
        }
    };

    if (symmetric_) {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> solver;
        solver.setMaxIterations(2000);
        run(solver);
    } else {
        Eigen::BiCGSTAB<SpMat> solver;
        solver.setMaxIterations(4000);
        run(solver);
    }
}

void FdSolver::apply_operator(const std::vector<double>& u, std::vector<double>& out) const
{
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), ntot_);
    Eigen::VectorXd ov = L_ * uv;
    out.assign(ov.data(), ov.data() + ntot_);
}

double FdSolver::value_at(const std::vector<double>& x) const
{
    // multilinear interpolation; zero outside the open box (Dirichlet)
    std::vector<int> base(dim_);
    std::vector<double> frac(dim_);
    for (int k = 0; k < dim_; ++k) {
        double fi = (x[k] - grid_.box.lo[k]) / h_[k];  // node coordinate incl. boundary
        if (fi < 0.0 || fi > grid_.nodes[k] - 1) return 0.0;
        int i = static_cast<int>(std::floor(fi));
        if (i >= grid_.nodes[k] - 1) i = grid_.nodes[k] - 2;
        base[k] = i;
        frac[k] = fi - i;
    }
    double val = 0.0;
    const int corners = 1 << dim_;
    for (int c = 0; c < corners; ++c) {
        double wgt = 1.0;
        int flat = 0;
        bool boundary = false;
        for (int k = 0; k < dim_; ++k) {
            int bit = (c >> k) & 1;
            int node = base[k] + bit;  // node index incl. boundary
            wgt *= bit ? frac[k] : (1.0 - frac[k]);
            if (node == 0 || node == grid_.nodes[k] - 1) {
                boundary = true;  // Dirichlet zero
            } else {
                flat = flat * inner_[k] + (node - 1);
            }
        }
        if (!boundary && wgt != 0.0) val += wgt * u_[flat];
    }
    return val;
}

double FdSolver::mass() const
{
    double m = 0.0;
    for (int i = 0; i < ntot_; ++i) m += u_[i] * hval_[i];
    return m * cellvol_;
}

Eigen::SparseMatrix<double> FdSolver::assemble_second_order(
    const std::vector<std::vector<MultiPoly>>& a2, const std::vector<MultiPoly>& a1,
    const MultiPoly& a0) const
{
    std::vector<Triplet> trip;
    std::vector<int> idx(dim_);
    std::vector<double> x(dim_);
    std::vector<std::vector<CompiledPoly>> c2(dim_);
    std::vector<CompiledPoly> c1(dim_);
    for (int j = 0; j < dim_; ++j) {
        c2[j].reserve(dim_);
        for (int k = 0; k < dim_; ++k) c2[j].emplace_back(a2[j][k]);
        c1[j] = CompiledPoly(a1[j]);
    }
    CompiledPoly c0(a0);

    auto stride_of = [&](int k) {
        int s = 1;
        for (int kk = k + 1; kk < dim_; ++kk) s *= inner_[kk];
        return s;
    };

    for (int flat = 0; flat < ntot_; ++flat) {
        int rem = flat;
        for (int k = dim_ - 1; k >= 0; --k) {
            idx[k] = rem % inner_[k];
            rem /= inner_[k];
            x[k] = grid_.box.lo[k] + (idx[k] + 1) * h_[k];
        }
        for (int j = 0; j < dim_; ++j) {
            for (int k = 0; k < dim_; ++k) {
                double a = c2[j][k].eval(x.data());
                if (a == 0.0) continue;
                if (j == k) {
                    double c = a / (h_[j] * h_[j]);
                    trip.emplace_back(flat, flat, -2.0 * c);
                    if (idx[j] + 1 < inner_[j]) trip.emplace_back(flat, flat + stride_of(j), c);
                    if (idx[j] - 1 >= 0) trip.emplace_back(flat, flat - stride_of(j), c);
                } else {
                    double c = a / (4.0 * h_[j] * h_[k]);
                    int sj = stride_of(j), sk = stride_of(k);
                    bool jp = idx[j] + 1 < inner_[j], jm = idx[j] - 1 >= 0;
                    bool kp = idx[k] + 1 < inner_[k], km = idx[k] - 1 >= 0;
                    if (jp && kp) trip.emplace_back(flat, flat + sj + sk, c);
                    if (jm && km) trip.emplace_back(flat, flat - sj - sk, c);
                    if (jp && km) trip.emplace_back(flat, flat + sj - sk, -c);
                    if (jm && kp) trip.emplace_back(flat, flat - sj + sk, -c);
                }
            }
            double b = c1[j].eval(x.data());
            if (b != 0.0) {
                double c = b / (2.0 * h_[j]);
                if (idx[j] + 1 < inner_[j]) trip.emplace_back(flat, flat + stride_of(j), c);
                if (idx[j] - 1 >= 0) trip.emplace_back(flat, flat - stride_of(j), -c);
            }
        }
        double s = c0.eval(x.data());
        if (s != 0.0) trip.emplace_back(flat, flat, s);
    }
    SpMat M(ntot_, ntot_);
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

KernelEstimate fd_kernel(const HeatModel& model, double t, const FdGrid& grid,
                         const std::vector<double>& source,
                         const std::vector<std::vector<double>>& targets, const FdParams& p)
{
    auto run = [&](const FdGrid& g) {
        FdSolver solver(model, g);
        solver.set_dirac(source);
        int steps = p.steps > 0 ? p.steps : 128;
        solver.steps(steps, t / steps, p.rannacher_steps, p.cg_tol);
        return solver;
    };

    FdSolver solver = run(grid);

    KernelEstimate est = fd_kernel_at(solver, t, source, targets);

    double maxval = 0.0, minval = 0.0;
    for (double v : solver.state()) {
        maxval = std::max(maxval, v);
        minval = std::min(minval, v);
    }
    est.negative_flagged = minval < -1e-8 * maxval;

    if (p.error_estimate) {
        bool ok = true;
        FdGrid coarse = grid;
        for (int k = 0; k < grid.box.dim(); ++k) {
            if ((grid.nodes[k] - 1) % 2 != 0) ok = false;
            coarse.nodes[k] = (grid.nodes[k] - 1) / 2 + 1;
        }
        if (ok) {
            try {
                FdSolver cs = run(coarse);
                // Richardson pair for an h^2 scheme, worst case over the targets
                double err = 0.0;
                for (const auto& x : targets)
                    err = std::max(err, std::abs(solver.value_at(x) - cs.value_at(x)) / 3.0);
                est.error_estimate = err;
            } catch (const std::exception&) {
                est.error_estimate = 0.0;
            }
        }
    }
    return est;
}

KernelEstimate fd_kernel_at(const FdSolver& solver, double t, const std::vector<double>& source,
                            const std::vector<std::vector<double>>& targets)
{
    KernelEstimate est;
    est.method = KernelEstimate::Method::FD;
    est.t = t;
    est.source = source;
    est.targets = targets;
    est.measure_tag = "model";
    est.mass = solver.mass();
    for (const auto& x : targets) est.values.push_back(solver.value_at(x));
    return est;
}

double FdSolver::state_l2_mu() const
{
    double v = 0.0;
    for (int i = 0; i < ntot_; ++i) v += u_[i] * u_[i] * hval_[i];
    return v * cellvol_;
}

KernelEstimate fd_diagonal(const HeatModel& model, double t, const FdGrid& grid,
                           const std::vector<double>& source, const FdParams& p)
{
    auto run = [&](const FdGrid& g) {
        FdSolver solver(model, g);
        if (!solver.symmetric())
            throw std::invalid_argument("fd_diagonal: L2 readout needs a self-adjoint model");
        solver.set_dirac(source);
        int steps = p.steps > 0 ? p.steps : 64;
        solver.steps(steps, 0.5 * t / steps, p.rannacher_steps, p.cg_tol);
        return solver.state_l2_mu();
    };

    KernelEstimate est;
    est.method = KernelEstimate::Method::FD;
    est.t = t;
    est.source = source;
    est.targets = {source};
    est.values = {run(grid)};
    est.measure_tag = "model";

    if (p.error_estimate) {
        bool ok = true;
        FdGrid coarse = grid;
        for (int k = 0; k < grid.box.dim(); ++k) {
            if ((grid.nodes[k] - 1) % 2 != 0) ok = false;
            coarse.nodes[k] = (grid.nodes[k] - 1) / 2 + 1;
        }
        if (ok) {
            try {
                est.error_estimate = std::abs(est.values.front() - run(coarse)) / 3.0;
            } catch (const std::exception&) {
                est.error_estimate = 0.0;
            }
        }
    }
    return est;
}

KacReport kac_check(const HeatModel& model, const std::vector<double>& t_grid,
                    const FdGrid& grid_small, const FdGrid& grid_large,
                    const std::vector<std::vector<double>>& interior_points, const FdParams& p)
{
    if (t_grid.empty()) throw std::invalid_argument("kac_check: empty t grid");
    for (const auto& q : interior_points)
        if (!grid_small.box.contains(q) || !grid_large.box.contains(q))
            throw std::invalid_argument("kac_check: interior point outside a box");

    std::vector<double> ts = t_grid;
    std::sort(ts.begin(), ts.end());

    // evolve each solver once, snapshotting at the grid times
    auto snapshots = [&](const FdGrid& g) {
        FdSolver solver(model, g);
        // source: first interior point's nearest node? use the model box center
        std::vector<double> src = interior_points.front();
        solver.set_dirac(src);
        std::vector<std::vector<double>> snaps;
        double t_cur = 0.0;
        int steps_base = p.steps > 0 ? p.steps : 64;
        double dt = ts.front() / steps_base;
        bool first = true;
        for (double t : ts) {
            int n = static_cast<int>(std::llround((t - t_cur) / dt));
            if (n < 1) n = 1;
            solver.steps(n, (t - t_cur) / n, first ? p.rannacher_steps : 0, p.cg_tol);
            first = false;
            t_cur = t;
            std::vector<double> vals;
            for (const auto& q : interior_points) vals.push_back(solver.value_at(q));
            snaps.push_back(std::move(vals));
        }
        return snaps;
    };

    auto s1 = snapshots(grid_small);
    auto s2 = snapshots(grid_large);

    KacReport rep;
    rep.t_grid = ts;
    double maxkernel = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double sup = 0.0;
        for (std::size_t j = 0; j < interior_points.size(); ++j) {
            sup = std::max(sup, std::abs(s1[i][j] - s2[i][j]));
            maxkernel = std::max(maxkernel, std::abs(s2[i][j]));
        }
        rep.discrepancy.push_back(sup);
    }
    rep.floor = std::max(1e-12, 100.0 * p.cg_tol) * std::max(1.0, maxkernel);

    // log-log fit on points above floor
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (rep.discrepancy[i] <= rep.floor) continue;
        double X = std::log(ts[i]), Y = std::log(rep.discrepancy[i]);
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
        ++m;
    }
    if (m < 2) {
        rep.below_floor = true;
        rep.pass = true;
        return rep;
    }
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    rep.pass = rep.slope > 3.0;
    return rep;
}

std::vector<double> hat_operator_apply_grid(const NilpotentStructure& S, const FdSolver& solver,
                                            const std::vector<double>& u)
{
    // Delta-hat on the grid via the solver's assembled operator is only valid
    // when the solver was built from the hat model; provide a direct assembly.
    const int n = S.dim;
    std::vector<std::vector<MultiPoly>> a2(n, std::vector<MultiPoly>(n, MultiPoly(n)));
    std::vector<MultiPoly> a1(n, MultiPoly(n));
    MultiPoly a0(n);
    for (const auto& hat : S.hat_fields) {
        // (sum_j a_j d_j)^2 = sum_{jk} a_j a_k d_j d_k + sum_k (sum_j a_j d_j a_k) d_k
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                a2[j][k] += hat.component(j) * hat.component(k);
            }
        }
        for (int k = 0; k < n; ++k) a1[k] += hat.apply(hat.component(k));
    }
    if (S.hat_drift)
        for (int k = 0; k < n; ++k) a1[k] += S.hat_drift->component(k);
    auto M = solver.assemble_second_order(a2, a1, a0);
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<int>(u.size()));
    Eigen::VectorXd out = M * uv;
    return std::vector<double>(out.data(), out.data() + out.size());
}

} // namespace srheat
