#include "srheat/checks.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace srheat;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

ModelSpec load_model(const std::string& corpus_name, const std::string& model_path)
{
    if (!corpus_name.empty()) {
        if (!corpus_has(corpus_name)) throw CLI::ValidationError("unknown corpus model: " + corpus_name);
        return corpus_get(corpus_name);
    }
    if (!model_path.empty()) {
        std::ifstream in(model_path);
        if (!in) throw CLI::ValidationError("cannot open model file: " + model_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return model_from_json(text);
    }
    throw CLI::ValidationError("one of --corpus or --model is required");
}

void apply_config_file(VerifyConfig& cfg, const std::string& path)
{
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot open config file: " + path);
    json j = json::parse(in);
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("tolerance_scale")) cfg.tolerance_scale = j["tolerance_scale"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("limit_eps")) cfg.limit_eps = j["limit_eps"].get<std::vector<double>>();
    if (j.contains("limit_mc_paths")) cfg.limit_mc_paths = j["limit_mc_paths"].get<std::int64_t>();
    if (j.contains("odd_eps")) cfg.odd_eps = j["odd_eps"].get<std::vector<double>>();
    if (j.contains("odd_mc_paths")) cfg.odd_mc_paths = j["odd_mc_paths"].get<std::int64_t>();
    if (j.contains("kac_t")) cfg.kac_t = j["kac_t"].get<std::vector<double>>();
    if (j.contains("weyl_t")) cfg.weyl_t = j["weyl_t"].get<std::vector<double>>();
    if (j.contains("damping_gamma")) cfg.damping_gamma = j["damping_gamma"].get<double>();
    if (j.contains("damping_eps")) cfg.damping_eps = j["damping_eps"].get<std::vector<double>>();
    if (j.contains("coercivity_radius")) cfg.coercivity_radius = j["coercivity_radius"].get<double>();
    if (j.contains("coercivity_points")) cfg.coercivity_points = j["coercivity_points"].get<int>();
    if (j.contains("duhamel_t")) cfg.duhamel_t = j["duhamel_t"].get<double>();
    if (j.contains("homog_lambda")) cfg.homog_lambda = j["homog_lambda"].get<std::vector<double>>();
}

void write_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"srheat: sub-Riemannian flags, nilpotentizations and small-time heat-kernel checks"};
    app.require_subcommand(1);

    std::string corpus_name, model_path, config_path, out_dir = ".";
    std::uint64_t seed = 12345;
    double tolerance_scale = 1.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--corpus", corpus_name, "built-in model name");
        cmd->add_option("--model", model_path, "model JSON file");
        cmd->add_option("--config", config_path, "run config JSON file");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--tolerance-scale", tolerance_scale, "multiplies all tolerances");
    };

    auto* cmd_flag = app.add_subcommand("flag", "sR flag, weights, Hausdorff dimension at the base point");
    add_common(cmd_flag);

    auto* cmd_nilp = app.add_subcommand("nilpotentize", "nilpotentization in privileged coordinates");
    add_common(cmd_nilp);
    int trunc_order = 0;
    cmd_nilp->add_option("--trunc", trunc_order, "chart truncation order (default 2r+2)");

    auto* cmd_sim = app.add_subcommand("simulate", "one kernel estimate (MC or FD)");
    add_common(cmd_sim);
    std::string method = "fd";
    double sim_t = 0.1;
    cmd_sim->add_option("--method", method, "mc | fd");
    cmd_sim->add_option("--t", sim_t, "time");

    auto* cmd_verify = app.add_subcommand("verify", "run verification checks");
    add_common(cmd_verify);
    std::string checks_arg = "limit";
    cmd_verify->add_option("--check", checks_arg, "comma-separated check names");

    auto* cmd_corpus = app.add_subcommand("corpus", "list or export the built-in corpus");
    std::string show_name;
    std::string dump_dir;
    cmd_corpus->add_option("--show", show_name, "print one model JSON");
    cmd_corpus->add_option("--dump", dump_dir, "write every model JSON into a directory");

    CLI11_PARSE(app, argc, argv);

    try {
        VerifyConfig cfg;
        cfg.seed = seed;
        cfg.tolerance_scale = tolerance_scale;
        if (const char* tenv = std::getenv("SRHEAT_THREADS")) cfg.threads = std::max(1, std::atoi(tenv));
        apply_config_file(cfg, config_path);

        if (app.got_subcommand(cmd_corpus)) {
            if (!show_name.empty()) {
                std::cout << model_to_json(corpus_get(show_name)) << "\n";
            } else if (!dump_dir.empty()) {
                for (const auto& n : corpus_names())
                    write_file(fs::path(dump_dir) / (n + ".json"), model_to_json(corpus_get(n)));
                std::cout << "wrote " << corpus_names().size() << " models to " << dump_dir << "\n";
            } else {
                json j = json::array();
                for (const auto& n : corpus_names()) {
                    ModelSpec m = corpus_get(n);
                    j.push_back({{"name", n}, {"tags", m.tags}});
                }
                std::cout << j.dump(2) << "\n";
            }
            return kExitPass;
        }

        ModelSpec spec = load_model(corpus_name, model_path);

        if (app.got_subcommand(cmd_flag)) {
            FlagData f = compute_flag(spec.fields, spec.base_point);
            std::cout << flag_to_json(f) << "\n";
            return kExitPass;
        }

        if (app.got_subcommand(cmd_nilp)) {
            GeometryBundle g = analyze_geometry(spec, trunc_order);
            json j = json::parse(nilpotent_to_json(g.nilp));
            DivergenceReport div = check_divergence_free(g.nilp);
            j["divergence_free"] = div.divergence_free;
            std::cout << j.dump(2) << "\n";
            return kExitPass;
        }

        if (app.got_subcommand(cmd_sim)) {
            HeatModel model = spec.heat_model();
            std::vector<double> q = spec.base_point_d();
            KernelEstimate est;
            if (method == "mc") {
                McParams mp;
                mp.seed = cfg.seed;
                mp.threads = cfg.threads;
                est = mc_kernel(model, sim_t, q, {q}, mp);
            } else if (method == "fd") {
                FdGrid g;
                g.box = model.box;
                g.nodes.assign(spec.dim, spec.dim >= 3 ? 41 : 201);
                FdParams fp;
                fp.steps = 128;
                est = fd_kernel(model, sim_t, g, q, {q}, fp);
            } else {
                std::cerr << "unknown method: " << method << "\n";
                return kExitUsage;
            }
            write_file(fs::path(out_dir) / "kernel.json", kernel_to_json(est));
            write_file(fs::path(out_dir) / "kernel.csv", kernel_to_csv(est));
            std::cout << kernel_to_json(est) << "\n";
            return kExitPass;
        }

        if (app.got_subcommand(cmd_verify)) {
            std::vector<std::string> names;
            std::string cur;
            for (char c : checks_arg + ",") {
                if (c == ',') {
                    if (!cur.empty()) names.push_back(cur);
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            bool all_pass = true;
            bool hard_failure = false;
            json report = json::array();
            for (const auto& name : names) {
                try {
                    CheckResult r = run_check(name, spec, cfg);
                    all_pass = all_pass && r.pass;
                    json jr = json::parse(r.details);
                    report.push_back({{"check", r.name}, {"pass", r.pass}, {"report", jr}});
                    write_file(fs::path(out_dir) / ("report_" + name + ".json"), r.details);
                    if (!r.series_csv.empty()) {
                        std::string csv_name = "series_" + name + ".csv";
                        write_file(fs::path(out_dir) / csv_name, r.series_csv);
                        write_file(fs::path(out_dir) / ("plot_" + name + ".gp"),
                                   gnuplot_script(csv_name, spec.name + " " + name, true));
                    }
                    std::cout << (r.pass ? "PASS " : "FAIL ") << name << "\n";
                } catch (const std::exception& e) {
                    // estimator failures propagate with context; partial
                    // results are still written
                    hard_failure = true;
                    all_pass = false;
                    report.push_back({{"check", name}, {"pass", false}, {"error", e.what()}});
                    std::cout << "FAIL " << name << " (error: " << e.what() << ")\n";
                }
            }
            write_file(fs::path(out_dir) / "report.json", report.dump(2));
            write_file(fs::path(out_dir) / "manifest.json", manifest_json(spec, cfg, names));
            if (hard_failure) return kExitNumerical;
            return all_pass ? kExitPass : kExitCheckFailure;
        }

        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DimensionMismatch& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}
