#include "srheat/heat.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace srheat {

using nlohmann::json;

KernelEstimate kernel_change_measure(const KernelEstimate& est, const MultiPoly& h,
                                     const std::string& new_tag)
{
    KernelEstimate out = est;
    for (std::size_t i = 0; i < out.targets.size(); ++i) {
        double hv = h.eval(out.targets[i]);
        if (hv <= 0.0) throw NonpositiveDensity("kernel_change_measure: density not positive at a target");
        out.values[i] /= hv;
        if (i < out.stderr_.size()) out.stderr_[i] /= hv;
    }
    out.measure_tag = new_tag;
    return out;
}

KernelEstimate kernel_diffeo_transform(const KernelEstimate& est, const DilationSpec& phi)
{
    if (phi.eps == 0.0) throw std::invalid_argument("kernel_diffeo_transform: eps must be nonzero");
    KernelEstimate out = est;
    const double jac = std::pow(std::abs(phi.eps), static_cast<double>(phi.Q));
    const double inv = 1.0 / phi.eps;
    out.source = dilate(est.source, phi.w, inv);
    for (std::size_t i = 0; i < out.targets.size(); ++i) {
        out.targets[i] = dilate(est.targets[i], phi.w, inv);
        out.values[i] *= jac;
        if (i < out.stderr_.size()) out.stderr_[i] *= jac;
    }
    return out;
}

DecayFit exp_decay_check(const std::vector<KernelEstimate>& family,
                         const std::function<double(const std::vector<double>&,
                                                    const std::vector<double>&)>& sr_distance,
                         double eps_slack)
{
    DecayFit fit;
    fit.threshold = -1.0 / (4.0 * (1.0 + eps_slack));
    std::vector<double> U, L;
    for (const auto& est : family) {
        for (std::size_t i = 0; i < est.targets.size(); ++i) {
            if (est.values[i] <= 0.0) continue;
            double d = sr_distance(est.source, est.targets[i]);
            U.push_back(d * d / est.t);
            L.push_back(std::log(est.values[i]));
        }
    }
    if (U.size() < 3) {
        fit.inconclusive = true;
        return fit;
    }
    double umin = U.front(), umax = U.front();
    for (double u : U) {
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    if (umax - umin < 2.0) {
        fit.inconclusive = true;
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = static_cast<int>(U.size());
    for (int i = 0; i < m; ++i) {
        sx += U[i];
        sy += L[i];
        sxx += U[i] * U[i];
        sxy += U[i] * L[i];
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.pass = fit.slope <= fit.threshold;
    return fit;
}

std::string kernel_to_json(const KernelEstimate& e)
{
    json j;
    j["method"] = e.method == KernelEstimate::Method::MC ? "MC" : "FD";
    j["t"] = e.t;
    j["source"] = e.source;
    j["targets"] = e.targets;
    j["values"] = e.values;
    j["stderr"] = e.stderr_;
    j["measure_tag"] = e.measure_tag;
    j["killed_fraction"] = e.killed_fraction;
    j["mass"] = e.mass;
    j["error_estimate"] = e.error_estimate;
    j["bias_estimate"] = e.bias_estimate;
    j["negative_flagged"] = e.negative_flagged;
    return j.dump();
}

std::string kernel_to_csv(const KernelEstimate& e)
{
    std::ostringstream os;
    os.precision(17);
    const int n = e.targets.empty() ? 0 : static_cast<int>(e.targets.front().size());
    for (int k = 0; k < n; ++k) os << "x" << (k + 1) << ",";
    os << "value,stderr\n";
    for (std::size_t i = 0; i < e.targets.size(); ++i) {
        for (int k = 0; k < n; ++k) os << e.targets[i][k] << ",";
        os << e.values[i] << "," << (i < e.stderr_.size() ? e.stderr_[i] : 0.0) << "\n";
    }
    return os.str();
}

} // namespace srheat
