#include "srheat/heat.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <thread>

namespace srheat {

bool Box::contains(const std::vector<double>& x, double slack) const
{
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    return true;
}

HeatModel HeatModel::make(std::vector<PolyVectorField> fields, Box box)
{
    HeatModel m;
    if (fields.empty()) throw std::invalid_argument("HeatModel: no fields");
    m.dim = fields.front().dim();
    m.fields = std::move(fields);
    m.potential = MultiPoly::zero(m.dim);
    m.density = MultiPoly::constant(m.dim, Rational(1));
    m.box = std::move(box);
    m.validate();
    return m;
}

void HeatModel::validate() const
{
    if (static_cast<int>(box.lo.size()) != dim || static_cast<int>(box.hi.size()) != dim)
        throw DimensionMismatch("HeatModel: box dimension mismatch");
    for (const auto& f : fields)
        if (f.dim() != dim) throw DimensionMismatch("HeatModel: field dimension mismatch");
    if (potential.dim() != dim || density.dim() != dim)
        throw DimensionMismatch("HeatModel: potential/density dimension mismatch");
    // scan grid: V bounded below (record), h > 0
    const int pts = 5;
    std::vector<double> x(dim);
    std::vector<int> idx(dim, 0);
    while (true) {
        for (int k = 0; k < dim; ++k)
            x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * idx[k] / (pts - 1);
        if (density.eval(x) <= 0.0)
            throw NonpositiveDensity("HeatModel: density not positive on the box");
        int k = 0;
        for (; k < dim; ++k) {
            if (++idx[k] < pts) break;
            idx[k] = 0;
        }
        if (k == dim) break;
    }
}

namespace {

// splitmix64: deterministic per-path stream derivation
inline std::uint64_t splitmix64(std::uint64_t& s)
{
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct PathRng {
    std::uint64_t s;
    bool have_spare = false;
    double spare = 0.0;

    explicit PathRng(std::uint64_t seed, std::uint64_t path)
    {
        s = seed ^ (0x9e3779b97f4a7c15ULL * (path + 0x632be59bd9b4e019ULL));
        splitmix64(s);
        splitmix64(s);
    }
    double uniform()
    {
        // (0,1), 53-bit
        return (splitmix64(s) >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }
    double normal()
    {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare = r * std::sin(a);
        have_spare = true;
        return r * std::cos(a);
    }
};

struct McWorkspace {
    std::vector<CompiledField> fields;
    CompiledField drift;
    bool has_drift = false;
    CompiledPoly potential;
    bool has_potential = false;
};

} // namespace

KernelEstimate mc_kernel(const HeatModel& model, double t, const std::vector<double>& source,
                         const std::vector<std::vector<double>>& targets, const McParams& p)
{
    if (t <= 0.0) throw std::invalid_argument("mc_kernel: t must be positive");
    if (p.n_paths < 1000) throw std::invalid_argument("mc_kernel: need at least 1000 paths");
    double dt = p.dt > 0.0 ? p.dt : t / 500.0;
    if (dt > t / 50.0) throw std::invalid_argument("mc_kernel: dt must be <= t/50");
    const int steps = std::max(50, static_cast<int>(std::llround(t / dt)));
    dt = t / steps;
    const int n = model.dim;
    if (static_cast<int>(source.size()) != n) throw DimensionMismatch("mc_kernel: source dim");

    McWorkspace ws;
    for (const auto& f : model.fields) ws.fields.emplace_back(f);
    if (model.drift) {
        ws.drift = CompiledField(*model.drift);
        ws.has_drift = true;
    }
    if (!model.potential.is_zero()) {
        ws.potential = CompiledPoly(model.potential);
        ws.has_potential = true;
    }

    const double sqrt2dt = std::sqrt(2.0 * dt);
    const int m = static_cast<int>(ws.fields.size());
    std::vector<double> blow(n), bhigh(n);
    for (int k = 0; k < n; ++k) {
        double half = 0.5 * (model.box.hi[k] - model.box.lo[k]);
        double c = 0.5 * (model.box.hi[k] + model.box.lo[k]);
        blow[k] = c - 10.0 * half;
        bhigh[k] = c + 10.0 * half;
    }

    struct PathOut {
        std::vector<double> x;
        double weight;  // Feynman-Kac factor; 0 when killed
    };
    std::vector<PathOut> out(static_cast<std::size_t>(p.n_paths));

    auto run_block = [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> x(n), xb(n), incr(n), fx(n), fxb(n), dW(m);
        for (std::int64_t path = lo; path < hi; ++path) {
            PathRng rng(p.seed, static_cast<std::uint64_t>(path));
            x = source;
            double w = 1.0;
            bool alive = true;
            for (int s = 0; s < steps && alive; ++s) {
                for (int i = 0; i < m; ++i) dW[i] = sqrt2dt * rng.normal();
                // predictor
                std::fill(incr.begin(), incr.end(), 0.0);
                for (int i = 0; i < m; ++i) {
                    ws.fields[i].eval(x.data(), fx.data());
                    for (int k = 0; k < n; ++k) incr[k] += fx[k] * dW[i];
                }
                if (ws.has_drift) {
                    ws.drift.eval(x.data(), fx.data());
                    for (int k = 0; k < n; ++k) incr[k] += fx[k] * dt;
                }
                for (int k = 0; k < n; ++k) xb[k] = x[k] + incr[k];
                // corrector (Stratonovich Heun)
                std::fill(incr.begin(), incr.end(), 0.0);
                for (int i = 0; i < m; ++i) {
                    ws.fields[i].eval(x.data(), fx.data());
                    ws.fields[i].eval(xb.data(), fxb.data());
                    for (int k = 0; k < n; ++k) incr[k] += 0.5 * (fx[k] + fxb[k]) * dW[i];
                }
                if (ws.has_drift) {
                    ws.drift.eval(x.data(), fx.data());
                    ws.drift.eval(xb.data(), fxb.data());
                    for (int k = 0; k < n; ++k) incr[k] += 0.5 * (fx[k] + fxb[k]) * dt;
                }
                double v0 = ws.has_potential ? ws.potential.eval(x.data()) : 0.0;
                for (int k = 0; k < n; ++k) x[k] += incr[k];
                if (ws.has_potential) {
                    double v1 = ws.potential.eval(x.data());
                    w *= std::exp(-0.5 * dt * (v0 + v1));
                }
                // Dirichlet kill at box exit; hard kill beyond 10x box
                if (!model.box.contains(x)) alive = false;
                for (int k = 0; k < n && alive; ++k)
                    if (x[k] < blow[k] || x[k] > bhigh[k]) alive = false;
            }
            out[static_cast<std::size_t>(path)].x = x;
            out[static_cast<std::size_t>(path)].weight = alive ? w : 0.0;
        }
    };

    int threads = std::max(1, p.threads);
    if (threads == 1) {
        run_block(0, p.n_paths);
    } else {
        std::vector<std::thread> pool;
        std::int64_t chunk = (p.n_paths + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            std::int64_t lo = w * chunk, hi = std::min<std::int64_t>(p.n_paths, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_block, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // KDE weights per axis
    std::vector<int> kw = p.kde_weights.empty() ? std::vector<int>(n, 1) : p.kde_weights;
    if (static_cast<int>(kw.size()) != n) throw DimensionMismatch("mc_kernel: kde_weights dim");

    // per-axis sample spread (alive paths) for the pilot bandwidth and the
    // bandwidth-bias diagnostic
    std::int64_t alive_count = 0;
    for (const auto& q : out)
        if (q.weight > 0.0) ++alive_count;
    std::vector<double> axis_sd(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double mean = 0.0, m2 = 0.0;
        std::int64_t c = 0;
        for (const auto& q : out) {
            if (q.weight <= 0.0) continue;
            ++c;
            double d = q.x[k] - mean;
            mean += d / c;
            m2 += d * (q.x[k] - mean);
        }
        if (c > 1) axis_sd[k] = std::sqrt(m2 / (c - 1));
    }

    // bandwidth: pilot Silverman on weight-1 axes
    double b = p.bandwidth;
    if (b <= 0.0) {
        double var_sum = 0.0;
        int axes = 0;
        for (int k = 0; k < n; ++k) {
            if (kw[k] != 1 || axis_sd[k] <= 0.0) continue;
            var_sum += axis_sd[k] * axis_sd[k];
            ++axes;
        }
        double sigma = axes ? std::sqrt(var_sum / axes) : std::sqrt(2.0 * t);
        double neff = std::max<std::int64_t>(alive_count, 2);
        b = 1.06 * sigma * std::pow(static_cast<double>(neff), -1.0 / (n + 4));
        if (b <= 0.0) b = std::sqrt(2.0 * t);
        b *= p.bandwidth_scale;
    }

    std::vector<double> bw(n), inv_norm(n);
    double bias_factor = 0.0;
    for (int k = 0; k < n; ++k) {
        bw[k] = std::pow(b, kw[k]);
        inv_norm[k] = 1.0 / (bw[k] * std::sqrt(2.0 * 3.14159265358979323846));
        if (axis_sd[k] > 0.0) bias_factor += 0.5 * (bw[k] / axis_sd[k]) * (bw[k] / axis_sd[k]);
    }

    const int B = std::max(2, p.batches);
    const std::size_t T = targets.size();
    // per-batch accumulators
    std::vector<std::vector<double>> batch_sum(B, std::vector<double>(T, 0.0));
    std::vector<std::int64_t> batch_count(B, 0);
    for (std::int64_t path = 0; path < p.n_paths; ++path) {
        int bi = static_cast<int>(path % B);
        ++batch_count[bi];
        const auto& q = out[static_cast<std::size_t>(path)];
        if (q.weight <= 0.0) continue;
        for (std::size_t ti = 0; ti < T; ++ti) {
            double k = q.weight;
            for (int d = 0; d < n; ++d) {
                double u = (q.x[d] - targets[ti][d]) / bw[d];
                k *= std::exp(-0.5 * u * u) * inv_norm[d];
            }
            batch_sum[bi][ti] += k;
        }
    }

    KernelEstimate est;
    est.method = KernelEstimate::Method::MC;
    est.t = t;
    est.source = source;
    est.targets = targets;
    est.values.assign(T, 0.0);
    est.stderr_.assign(T, 0.0);
    est.killed_fraction = 1.0 - static_cast<double>(alive_count) / p.n_paths;
    est.bias_estimate = bias_factor;  // relative scale of the KDE smoothing bias
    double mass = 0.0;
    for (const auto& q : out) mass += q.weight;
    est.mass = mass / p.n_paths;

    for (std::size_t ti = 0; ti < T; ++ti) {
        // overall mean over all paths
        double total = 0.0;
        for (int bi = 0; bi < B; ++bi) total += batch_sum[bi][ti];
        double mean = total / p.n_paths;
        est.values[ti] = mean;
        // batch means
        double var = 0.0;
        for (int bi = 0; bi < B; ++bi) {
            double bm = batch_sum[bi][ti] / batch_count[bi];
            var += (bm - mean) * (bm - mean);
        }
        var /= (B - 1);
        est.stderr_[ti] = std::sqrt(var / B);
    }

    // density w.r.t. Lebesgue -> w.r.t. model measure h * Lebesgue
    bool unit_density = model.density == MultiPoly::constant(n, Rational(1));
    if (!unit_density) {
        for (std::size_t ti = 0; ti < T; ++ti) {
            double hval = model.density.eval(targets[ti]);
            est.values[ti] /= hval;
            est.stderr_[ti] /= hval;
        }
    }
    est.measure_tag = "model";
    return est;
}

} // namespace srheat
