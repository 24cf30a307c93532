#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srheat/checks.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace srheat;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_cli(const std::string& args, const fs::path& out)
{
    std::string cmd = "./srheat " + args + " > " + out.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("corpus contents")
{
    auto names = corpus_names();
    CHECK(names.size() >= 5);
    for (const char* want : {"heisenberg", "grushin_k1", "grushin_pert", "martinet", "euclidean1",
                             "euclidean2", "grushin_k2", "grushin_quadratic"})
        CHECK(corpus_has(want));
    CHECK_FALSE(corpus_has("nope"));
    CHECK_THROWS_AS(corpus_get("nope"), std::invalid_argument);
}

TEST_CASE("model JSON round trip preserves the document")
{
    for (const auto& name : corpus_names()) {
        ModelSpec m = corpus_get(name);
        std::string js = model_to_json(m);
        ModelSpec back = model_from_json(js);
        CHECK(model_to_json(back) == js);
        CHECK(model_hash(back) == model_hash(m));
    }
}

TEST_CASE("flag JSON contract for the corpus")
{
    ModelSpec m = corpus_get("heisenberg");
    FlagData f = compute_flag(m.fields, m.base_point);
    std::string js = flag_to_json(f);
    CHECK(js.find("\"growth_vector\":[2,3]") != std::string::npos);
    CHECK(js.find("\"weights\":[1,1,2]") != std::string::npos);
    CHECK(js.find("\"Q\":4") != std::string::npos);

    ModelSpec e = corpus_get("euclidean2");
    FlagData fe = compute_flag(e.fields, e.base_point);
    CHECK(flag_to_json(fe).find("\"Q\":2") != std::string::npos);

    ModelSpec ma = corpus_get("martinet");
    FlagData fm = compute_flag(ma.fields, ma.base_point);
    CHECK(flag_to_json(fm).find("\"Q\":5") != std::string::npos);
}

TEST_CASE("manifest carries hash, seed and version; reports stay timestamp-free")
{
    ModelSpec m = corpus_get("grushin_k1");
    VerifyConfig cfg;
    cfg.seed = 424242;
    std::string man = manifest_json(m, cfg, {"coercivity"});
    CHECK(man.find("model_hash") != std::string::npos);
    CHECK(man.find("424242") != std::string::npos);
    CHECK(man.find(code_version()) != std::string::npos);
    CHECK(man.find("timestamp_unix") != std::string::npos);

    CheckResult res = check_coercivity(m, cfg);
    CHECK(res.details.find("timestamp") == std::string::npos);
}

TEST_CASE("check reports are byte-identical across reruns with the same seed")
{
    ModelSpec m = corpus_get("grushin_pert");
    VerifyConfig cfg;
    cfg.seed = 7;
    cfg.odd_mc_paths = 3000;
    cfg.odd_eps = {1.0, 0.5, 0.25};
    CheckResult a = check_expansion(m, cfg);
    CheckResult b = check_expansion(m, cfg);
    CHECK(a.details == b.details);
    cfg.seed = 8;
    CheckResult c = check_expansion(m, cfg);
    CHECK(a.details != c.details);
}

TEST_CASE("CLI binary: corpus, flag, exit codes, verify determinism")
{
    // run from the build directory (ctest working dir)
    REQUIRE(fs::exists("./srheat"));
    fs::path tmp = fs::temp_directory_path() / "srheat_cli_test";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    // corpus list names
    CHECK(run_cli("corpus", tmp / "corpus.txt") == 0);
    std::string corpus = slurp(tmp / "corpus.txt");
    for (const char* want : {"heisenberg", "grushin_k1", "grushin_pert", "martinet"})
        CHECK(corpus.find(want) != std::string::npos);

    // flag on the corpus
    CHECK(run_cli("flag --corpus heisenberg", tmp / "flag.txt") == 0);
    std::string flag = slurp(tmp / "flag.txt");
    CHECK(flag.find("\"growth_vector\":[2,3]") != std::string::npos);
    CHECK(flag.find("\"Q\":4") != std::string::npos);

    // nilpotentize reports divergence-free hats
    CHECK(run_cli("nilpotentize --corpus grushin_pert", tmp / "nilp.txt") == 0);
    CHECK(slurp(tmp / "nilp.txt").find("\"divergence_free\": true") != std::string::npos);

    // usage errors exit with 2
    CHECK(run_cli("flag --corpus does_not_exist", tmp / "err.txt") == 2);
    CHECK(run_cli("flag", tmp / "err2.txt") == 2);

    // verify: cheap check, exit 0, byte-identical reports across reruns
    std::string v = "verify --corpus grushin_k1 --check coercivity --seed 5 --out ";
    CHECK(run_cli(v + (tmp / "run1").string(), tmp / "v1.txt") == 0);
    CHECK(run_cli(v + (tmp / "run2").string(), tmp / "v2.txt") == 0);
    CHECK(slurp(tmp / "run1" / "report_coercivity.json") ==
          slurp(tmp / "run2" / "report_coercivity.json"));
    CHECK(slurp(tmp / "run1" / "report.json") == slurp(tmp / "run2" / "report.json"));

    // model round trip through a file
    std::ofstream mf(tmp / "model.json");
    mf << model_to_json(corpus_get("grushin_k1"));
    mf.close();
    CHECK(run_cli("flag --model " + (tmp / "model.json").string(), tmp / "flag2.txt") == 0);
    CHECK(slurp(tmp / "flag2.txt").find("\"Q\":3") != std::string::npos);

    fs::remove_all(tmp);
}
