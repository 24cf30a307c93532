#pragma once

#include "srheat/asymptotics.hpp"
#include "srheat/corpus.hpp"

namespace srheat {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string details;  // JSON document
    std::string series_csv;  // optional (eps/t, value) series for plotting
};

// gnuplot script for a two-column series CSV written next to it.
std::string gnuplot_script(const std::string& csv_name, const std::string& title, bool loglog);

// Full geometric pipeline at the model's base point: flag -> exponential chart
// -> pushed fields -> nilpotentization.
struct GeometryBundle {
    FlagData flag;
    PrivilegedChart chart;
    std::vector<PolyVectorField> pushed;
    std::optional<PolyVectorField> pushed_drift;
    NilpotentStructure nilp;
};
GeometryBundle analyze_geometry(const ModelSpec& spec, int trunc_order = 0 /* 0 -> 2r+2 */);

// Shared knobs for the verification checks; each check resolves
// model-dependent defaults internally. tolerance_scale multiplies every
// acceptance tolerance (> 1 loosens).
struct VerifyConfig {
    std::uint64_t seed = 12345;
    double tolerance_scale = 1.0;
    int threads = 1;
    // limit check
    std::vector<double> limit_eps = {1.0, 0.5, 0.25, 0.125};
    int limit_nodes0 = 9;
    int limit_nodes_z = 17;
    int limit_clip_nodes = 65;
    double limit_clip = 8.0;
    int limit_steps = 32;
    std::int64_t limit_mc_paths = 200000;
    // oddness / expansion: sign-symmetric geometric grid, ratio 2^{-1/2}
    std::vector<double> odd_eps = {1.0, 0.70710678118654752, 0.5, 0.35355339059327376, 0.25};
    std::int64_t odd_mc_paths = 120000;
    int odd_fit_order = 2;
    // kac
    std::vector<double> kac_t;      // empty -> model default
    double kac_margin_scale = 1.0;  // shrink factor of the small box
    // weyl
    std::vector<double> weyl_t;  // empty -> model default
    // damping
    double damping_gamma = 0.1;
    std::vector<double> damping_eps = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    int damping_samples = 400;
    // coercivity
    double coercivity_radius = 10.0;
    int coercivity_points = 10000;
    // duhamel
    double duhamel_t = 0.25;
    int duhamel_quad = 16;
    // homogeneity
    std::vector<double> homog_lambda = {0.5, 2.0};
    double homog_t0 = 0.02;
};

CheckResult check_limit(const ModelSpec& spec, const VerifyConfig& cfg);
CheckResult check_expansion(const ModelSpec& spec, const VerifyConfig& cfg);
CheckResult check_kac(const ModelSpec& spec, const VerifyConfig& cfg);
CheckResult check_weyl(const ModelSpec& spec, const VerifyConfig& cfg);
CheckResult check_damping(const ModelSpec& spec, const VerifyConfig& cfg);
CheckResult check_coercivity(const ModelSpec& spec, const VerifyConfig& cfg);
CheckResult check_duhamel(const ModelSpec& spec, const VerifyConfig& cfg);
CheckResult check_homogeneity(const ModelSpec& spec, const VerifyConfig& cfg);

// name in {limit, expansion, kac, weyl, damping, coercivity, duhamel, homogeneity}
CheckResult run_check(const std::string& name, const ModelSpec& spec, const VerifyConfig& cfg);
std::vector<std::string> check_names();

// Euclidean end-to-end sanity (MC + FD Gaussian diagonal, eps-independence of
// the rescaled kernel).
CheckResult check_euclidean_sanity(const VerifyConfig& cfg);

// Manifest document for a run: model hash, code version, seed, config echo,
// wall-clock timestamp (reports themselves stay timestamp-free).
std::string manifest_json(const ModelSpec& spec, const VerifyConfig& cfg,
                          const std::vector<std::string>& checks);

inline const char* code_version() { return "0.1.0"; }

} // namespace srheat
