#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifdef __unix__
#include <sys/wait.h>
#endif

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string output;
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("relab_cli_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path out = workdir / "stdout.txt";
    const std::string cmd =
        std::string(RELAB_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
#ifdef __unix__
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
    r.code = status;
#endif
    r.output = slurp(out);
    return r;
}

std::string config(const char* name) {
    return (fs::path(RELAB_CONFIG_DIR) / name).string();
}

} // namespace

TEST_CASE("cli: validate accepts the shipped fixture") {
    TempDir tmp;
    const RunResult r = run_cli("validate --config " + config("validate_response.json"), tmp.path);
    INFO(r.output);
    CHECK(r.code == 0);
}

TEST_CASE("cli: validate names duplicated boundaries and exits 1") {
    TempDir tmp;
    const RunResult r =
        run_cli("validate --config " + config("bad_duplicate_response.json"), tmp.path);
    CHECK(r.code == 1);
    CHECK(r.output.find("pairwise distinct boundaries") != std::string::npos);
}

TEST_CASE("cli: malformed config exits 2") {
    TempDir tmp;
    const fs::path bad = tmp.path / "broken.json";
    std::ofstream(bad) << "{ not json";
    const RunResult r = run_cli("validate --config " + bad.string(), tmp.path);
    CHECK(r.code == 2);
}

TEST_CASE("cli: missing required section exits 2") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "no_target.json";
    std::ofstream(cfg) << R"({
  "measure": {"box": {"lower": [-1], "upper": [1]}},
  "loss": {"p": 2},
  "train": {"d": 1, "step_size": 0.1, "steps": 10}
})";
    const RunResult r = run_cli("train --config " + cfg.string(), tmp.path);
    CHECK(r.code == 2);
}

TEST_CASE("cli: train run is deterministic byte for byte") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "tiny_train.json";
    std::ofstream(cfg) << R"({
  "measure": {"box": {"lower": [-1], "upper": [1]}},
  "target": {"kind": "ramp", "a": 0.25},
  "loss": {"p": 2},
  "train": {"d": 1, "step_size": 0.1, "steps": 300, "init": {"seed": 4, "scale": 1.0},
            "quadrature": {"kind": "tensor-gauss", "resolution": 16}},
  "output": {"trajectory": "traj.csv", "tuple": "tuple.json"}
})";
    const fs::path out1 = tmp.path / "run1";
    const fs::path out2 = tmp.path / "run2";
    const RunResult r1 =
        run_cli("train --config " + cfg.string() + " --out-dir " + out1.string(), tmp.path);
    INFO(r1.output);
    REQUIRE(r1.code == 0);
    const RunResult r2 =
        run_cli("train --config " + cfg.string() + " --out-dir " + out2.string(), tmp.path);
    REQUIRE(r2.code == 0);

    const std::string csv1 = slurp(out1 / "traj.csv");
    CHECK(!csv1.empty());
    CHECK(csv1 == slurp(out2 / "traj.csv"));
    CHECK(slurp(out1 / "tuple.json") == slurp(out2 / "tuple.json"));
    CHECK(csv1.rfind("step,err,param_norm\n", 0) == 0);
}

TEST_CASE("cli: train reports the closed-form constant for d = 0") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "d0.json";
    std::ofstream(cfg) << R"({
  "measure": {"box": {"lower": [-1], "upper": [1]}},
  "target": {"kind": "abs"},
  "loss": {"p": 2},
  "train": {"d": 0, "step_size": 0.25, "steps": 200, "init": {"seed": 2, "scale": 1.0}},
  "output": {"trajectory": "traj.csv", "tuple": "tuple.json"}
})";
    const RunResult r =
        run_cli("train --config " + cfg.string() + " --out-dir " + tmp.path.string(),
                tmp.path);
    INFO(r.output);
    CHECK(r.code == 0);
    CHECK(r.output.find("closed-form best constant") != std::string::npos);
}

TEST_CASE("cli: perturb writes report and summary") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "perturb.json";
    // Small grid for speed; the full grid lives in the acceptance suite.
    std::ofstream(cfg) << R"({
  "measure": {"box": {"lower": [-1, -1], "upper": [1, 1]}},
  "target": {"kind": "constant", "value": 0.75},
  "loss": {"p": 2},
  "perturbation": {"response": ")" << config("opposing_jumps_response.json") << R"(",
                   "kappa_grid": [50, 100], "surface_resolution": 128},
  "output": {"report": "report.csv", "summary": "summary.json"}
})";
    const RunResult r =
        run_cli("perturb --config " + cfg.string() + " --out-dir " + tmp.path.string(),
                tmp.path);
    INFO(r.output);
    CHECK(r.code == 0);
    const std::string report = slurp(tmp.path / "report.csv");
    CHECK(report.rfind("kappa,err_R,err_plus,err_minus,scaled_sum\n", 0) == 0);
    CHECK(r.output.find("improving kappa") != std::string::npos);
    CHECK(!slurp(tmp.path / "summary.json").empty());
}

TEST_CASE("cli: closure demo emits one row per grid point") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "demo.json";
    std::ofstream(cfg) << R"({
  "measure": {"box": {"lower": [-1], "upper": [1]}},
  "loss": {"p": 2},
  "closure_demo": {"halfspace": {"normal": [1.0], "offset": 0.0}, "jump": 1.0,
                   "t_grid": [25]},
  "output": {"csv": "closure.csv"}
})";
    const RunResult r = run_cli(
        "closure-demo --config " + cfg.string() + " --out-dir " + tmp.path.string(),
        tmp.path);
    INFO(r.output);
    CHECK(r.code == 0);
    const std::string csv = slurp(tmp.path / "closure.csv");
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 2); // header + single row
}

TEST_CASE("cli: oracle writes its summary") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "oracle.json";
    std::ofstream(cfg) << R"({
  "measure": {"box": {"lower": [-1], "upper": [1]}},
  "target": {"kind": "ramp", "a": 0.25},
  "loss": {"p": 2},
  "oracle": {"d": 1, "budget": 200000, "seed": 3},
  "output": {"summary": "oracle.json"}
})";
    const RunResult r =
        run_cli("oracle --config " + cfg.string() + " --out-dir " + tmp.path.string(),
                tmp.path);
    INFO(r.output);
    CHECK(r.code == 0);
    CHECK(r.output.find("oracle err") != std::string::npos);
    CHECK(fs::exists(tmp.path / "oracle.json"));
}

TEST_CASE("cli: eval prints values for a serialized tuple") {
    TempDir tmp;
    const RunResult r = run_cli("eval --config " + config("eval_example.json"), tmp.path);
    INFO(r.output);
    CHECK(r.code == 0);
    // |x| at -0.5, 0, 0.75
    CHECK(r.output.find("-0.5,0.5") != std::string::npos);
    CHECK(r.output.find("0.75,0.75") != std::string::npos);
}

TEST_CASE("cli: unknown subcommand or missing flag exits 2") {
    TempDir tmp;
    CHECK(run_cli("frobnicate", tmp.path).code == 2);
    CHECK(run_cli("train", tmp.path).code == 2);
}

TEST_CASE("cli: environment variable supplies the default output dir") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "demo.json";
    std::ofstream(cfg) << R"({
  "measure": {"box": {"lower": [-1], "upper": [1]}},
  "loss": {"p": 2},
  "closure_demo": {"t_grid": [50]},
  "output": {"csv": "env_out.csv"}
})";
    const fs::path envdir = tmp.path / "via_env";
    const std::string cmd = "RELAB_OUT_DIR=" + envdir.string() + " " +
                            std::string(RELAB_CLI_PATH) + " closure-demo --config " +
                            cfg.string() + " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(envdir / "env_out.csv"));
}
