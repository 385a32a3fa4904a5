// End-to-end tests against the installed CLI binary: subcommand wiring, exit
// codes, artifact determinism and manifest round trips.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const std::string out_file =
        (fs::temp_directory_path() / "spinamp_cli_out.txt").string();
    const std::string cmd = env_prefix + std::string(SPINAMP_CLI_PATH) + " " + args +
                            " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string scenario_path(const std::string& name) {
    return (fs::path(SPINAMP_SOURCE_DIR) / "scenarios" / (name + ".json")).string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("cli_test_out") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("constants prints the proton gyromagnetic ratio", "[cli]") {
    const CliResult r = run_cli("constants");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("gamma_MHz_per_T 1H 42.576") != std::string::npos);
    CHECK(r.out.find("mu0_T_m_per_A 1.25663706212e-06") != std::string::npos);
}

TEST_CASE("help and version succeed", "[cli]") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("--version").out.find("0.1.0") != std::string::npos);
    const CliResult sub_help = run_cli("fit --help");
    CHECK(sub_help.exit_code == 0);
    CHECK(sub_help.out.find("--model") != std::string::npos);
    CHECK(sub_help.out.find("--data") != std::string::npos);
}

TEST_CASE("unknown flags fail fast with exit 2", "[cli]") {
    CHECK(run_cli("constants --no-such-flag").exit_code == 2);
    CHECK(run_cli("definitely-not-a-subcommand").exit_code == 2);
}

TEST_CASE("zf-spectrum resolves a two-spin XA cluster", "[cli]") {
    const fs::path dir = fresh_dir("zf_xa");
    const fs::path cluster = dir / "xa.json";
    {
        std::ofstream out(cluster);
        out << R"({"spins": [{"nuclide": "15N"}, {"nuclide": "1H"}],
                   "j_hz": [[0, 5.0], [5.0, 0]]})";
    }
    const fs::path spectrum = dir / "spectrum.csv";
    const CliResult r = run_cli("zf-spectrum --cluster " + cluster.string() +
                                " --grid-min-hz 4 --grid-max-hz 6 --grid-points 201" +
                                " --out " + spectrum.string());
    REQUIRE(r.exit_code == 0);
    // exactly one line, at 5 Hz
    CHECK(r.out.find("line 5 Hz") != std::string::npos);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
    const std::string spec = slurp(spectrum);
    CHECK(spec.rfind("freq_hz,amplitude\n", 0) == 0);
}

TEST_CASE("missing input files exit 4, bad schema exits 2", "[cli]") {
    CHECK(run_cli("run does_not_exist.json").exit_code == 4);
    CHECK(run_cli("fit --model buildup --data does_not_exist.csv").exit_code == 4);
    CHECK(run_cli("fit --model no_such_model --data x.csv").exit_code == 2);

    const fs::path dir = fresh_dir("bad_schema");
    const fs::path bad = dir / "bad.json";
    {
        std::ofstream out(bad);
        out << R"({"schema_version": 99, "kind": "zf_spectrum"})";
    }
    const CliResult r = run_cli("run " + bad.string() + " --out-dir " + dir.string());
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("schema_version") != std::string::npos);
}

TEST_CASE("scenario runs are byte-identical across invocations", "[cli]") {
    const fs::path dir_a = fresh_dir("det_a");
    const fs::path dir_b = fresh_dir("det_b");
    REQUIRE(run_cli("run " + scenario_path("fig2b") + " --out-dir " + dir_a.string())
                .exit_code == 0);
    REQUIRE(run_cli("run " + scenario_path("fig2b") + " --out-dir " + dir_b.string())
                .exit_code == 0);
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const auto name = entry.path().filename();
        REQUIRE(slurp(entry.path()) == slurp(dir_b / name));
        ++compared;
    }
    CHECK(compared >= 3);  // with/without records, summary, manifest
}

TEST_CASE("a manifest alone reproduces the artifacts", "[cli]") {
    const fs::path dir_a = fresh_dir("manifest_a");
    const fs::path dir_b = fresh_dir("manifest_b");
    REQUIRE(run_cli("run " + scenario_path("fig5b") + " --out-dir " + dir_a.string())
                .exit_code == 0);
    REQUIRE(run_cli("run " + (dir_a / "manifest.json").string() + " --out-dir " +
                    dir_b.string())
                .exit_code == 0);
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const auto name = entry.path().filename();
        REQUIRE(slurp(entry.path()) == slurp(dir_b / name));
    }
}

TEST_CASE("output directory falls back to the environment variable", "[cli]") {
    const fs::path dir = fresh_dir("env_dir");
    const CliResult r = run_cli("run " + scenario_path("fig5b"),
                                "SPINAMP_OUT_DIR=" + dir.string() + " ");
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(dir / "fit.json"));
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("fig4a artifacts carry exactly the two expected line groups", "[cli]") {
    const fs::path dir = fresh_dir("fig4a");
    REQUIRE(run_cli("run " + scenario_path("fig4a") + " --out-dir " + dir.string())
                .exit_code == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    REQUIRE(summary["lines"].size() == 2);
    CHECK(std::abs(summary["lines"][0]["freq_hz"].get<double>() - 1.688) < 1e-9);
    CHECK(std::abs(summary["lines"][1]["freq_hz"].get<double>() - 3.376) < 1e-9);
    CHECK(summary["lines"][0]["manifold"] == "J");
    CHECK(summary["lines"][1]["manifold"] == "2J");
}

TEST_CASE("fit subcommand recovers Qc within its printed uncertainty", "[cli]") {
    const fs::path dir = fresh_dir("fit_flow");
    REQUIRE(run_cli("run " + scenario_path("fig5a") + " --out-dir " + dir.string())
                .exit_code == 0);
    const fs::path fit_out = dir / "cli_fit.json";
    const CliResult r = run_cli("fit --model flowrate --data " +
                                (dir / "data.csv").string() + " --out " +
                                fit_out.string());
    REQUIRE(r.exit_code == 0);
    const auto fit = nlohmann::json::parse(slurp(fit_out));
    REQUIRE(fit["converged"].get<bool>());
    const double qc = fit["params"]["qc"].get<double>();
    const double qc_err = fit["stderr"]["qc"].get<double>();
    CHECK(std::abs(qc - 151.7) <= qc_err);
}

TEST_CASE("single-operation subcommands emit their documented CSV schemas",
          "[cli]") {
    const fs::path dir = fresh_dir("wrappers");
    SECTION("amp-scan over time") {
        const fs::path out = dir / "amp.csv";
        REQUIRE(run_cli("amp-scan --scan t --min 0 --max 2.4 --points 25 --out " +
                        out.string())
                    .exit_code == 0);
        CHECK(slurp(out).rfind("t_s,G\n", 0) == 0);
    }
    SECTION("amp-scan over detuning") {
        const fs::path out = dir / "amp_delta.csv";
        REQUIRE(run_cli("amp-scan --scan delta --t-s 0.8 --min -6 --max 6 "
                        "--points 25 --out " +
                        out.string())
                    .exit_code == 0);
        CHECK(slurp(out).rfind("delta_rad_s,G\n", 0) == 0);
    }
    SECTION("dispersive-scan") {
        const fs::path out = dir / "disp.csv";
        REQUIRE(run_cli("dispersive-scan --points 21 --out " + out.string())
                    .exit_code == 0);
        CHECK(slurp(out).rfind("delta_rad_s,R,phi_rad\n", 0) == 0);
    }
    SECTION("bloch-evolve") {
        const fs::path out = dir / "bs.csv";
        REQUIRE(run_cli("bloch-evolve --duration-s 0.2 --out " + out.string())
                    .exit_code == 0);
        CHECK(slurp(out).rfind("t_s,value_T\n", 0) == 0);
    }
    SECTION("saturation-scan") {
        const fs::path out = dir / "sat.csv";
        REQUIRE(run_cli("saturation-scan --amplitudes-nt 0.1,0.5 --record-s 0.4 "
                        "--out " +
                        out.string())
                    .exit_code == 0);
        CHECK(slurp(out).rfind("amplitude_T,R\n", 0) == 0);
    }
}

TEST_CASE("flags win over config-file values", "[cli]") {
    const fs::path dir = fresh_dir("config");
    const fs::path cfg = dir / "amp.ini";
    {
        std::ofstream out(cfg);
        out << "[amp-scan]\nscan=t\nmin=0\nmax=2.4\npoints=5\nout=" +
                   (dir / "from_config.csv").string() + "\n";
    }
    // config supplies everything; the explicit flag overrides the output path
    const fs::path flag_out = dir / "from_flag.csv";
    const CliResult r = run_cli("amp-scan --config " + cfg.string() + " --out " +
                                flag_out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(flag_out));
    CHECK_FALSE(fs::exists(dir / "from_config.csv"));
}
