#include <catch2/catch_amalgamated.hpp>

#include <lvnet/app.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace lvnet;
using Catch::Matchers::ContainsSubstring;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("lvnet-cli-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliResult res;
    res.code = cli_main(std::move(args), out, err);
    res.out = out.str();
    res.err = err.str();
    return res;
}

std::string config_path(const std::string& name) {
    return std::string(LVNET_CONFIG_DIR) + "/" + name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 2", "[cli]") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"simulate", config_path("fig4.cfg")}).code == 2);  // --out is required
    CHECK(run_cli({"reproduce", "fig9"}).code == 2);
    CHECK(run_cli({"simulate", "no-such-file.cfg", "--out", "x"}).code == 2);
}

TEST_CASE("help is not an error", "[cli]") {
    const CliResult res = run_cli({"--help"});
    CHECK(res.code == 0);
    CHECK_THAT(res.out, ContainsSubstring("simulate"));
    CHECK_THAT(res.out, ContainsSubstring("reproduce"));
}

TEST_CASE("certify reports structural certificates as JSON", "[cli]") {
    const CliResult res = run_cli({"certify", config_path("fig4.cfg")});
    CHECK(res.code == 0);
    CHECK_THAT(res.out, ContainsSubstring("\"kind\": \"gershgorin\""));
    CHECK_THAT(res.out, ContainsSubstring("\"holds\": true"));
    CHECK_THAT(res.out, !ContainsSubstring("\"holds\": false"));
}

TEST_CASE("certify exits 1 when a certificate fails", "[cli]") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "lossy.cfg";
    std::ofstream(cfg) << R"({
      "mode": "coupled",
      "network": {
        "nodes": [
          {"id": "a", "gain": 2.0, "reference": 1.0},
          {"id": "b", "gain": 2.0, "reference": 1.0}
        ],
        "lines": [{"from": "a", "to": "b", "susceptance": -1.0, "conductance": 0.5}]
      },
      "initial_conditions": [[1.0, 1.0]],
      "sim": {"t_end": 1.0},
      "checks": [{"name": "cooperativity", "beta": 1.2}]
    })";
    const CliResult res = run_cli({"certify", cfg.string()});
    CHECK(res.code == 1);
    CHECK_THAT(res.out, ContainsSubstring("\"holds\": false"));
}

TEST_CASE("equilibrium prints the frozen fixed point", "[cli]") {
    const CliResult res = run_cli({"equilibrium", config_path("fig4.cfg")});
    CHECK(res.code == 0);
    CHECK_THAT(res.out, ContainsSubstring("\"v_bar\""));
    CHECK_THAT(res.out, ContainsSubstring("\"interior\": true"));
}

TEST_CASE("verify runs the property checks on fresh trajectories", "[cli]") {
    const CliResult res = run_cli({"verify", config_path("fig4.cfg")});
    CHECK(res.code == 0);
    CHECK_THAT(res.out, ContainsSubstring("\"property\": \"monotone_order\""));
    CHECK_THAT(res.out, !ContainsSubstring("\"holds\": false"));
}

TEST_CASE("reproduce writes trajectories and a bundle, deterministically", "[cli]") {
    TempDir tmp;
    const fs::path first = tmp.path / "a";
    const fs::path second = tmp.path / "b";

    const CliResult res = run_cli({"reproduce", "fig4", "--out", first.string()});
    CHECK(res.code == 0);
    CHECK_THAT(res.out, ContainsSubstring("all checks hold"));
    REQUIRE(fs::exists(first / "run-1.csv"));
    REQUIRE(fs::exists(first / "run-2.csv"));
    REQUIRE(fs::exists(first / "run.json"));

    const CliResult rerun = run_cli({"reproduce", "fig4", "--out", second.string()});
    CHECK(rerun.code == 0);
    CHECK(slurp(first / "run-1.csv") == slurp(second / "run-1.csv"));
    CHECK(slurp(first / "run-2.csv") == slurp(second / "run-2.csv"));
    CHECK(slurp(first / "run.json") == slurp(second / "run.json"));

    const Json bundle = Json::parse(slurp(first / "run.json"));
    CHECK(bundle.at("trajectory_files").size() == 2);
    CHECK(bundle.at("seed") == 42);
    CHECK(bundle.at("equilibrium").at("interior") == true);
}

TEST_CASE("verify accepts previously written trajectories", "[cli]") {
    TempDir tmp;
    const fs::path out = tmp.path / "run";
    REQUIRE(run_cli({"reproduce", "fig4", "--out", out.string()}).code == 0);

    const CliResult res = run_cli({"verify", config_path("fig4.cfg"), "--traj",
                                   (out / "run-1.csv").string(), "--traj",
                                   (out / "run-2.csv").string()});
    CHECK(res.code == 0);
    CHECK_THAT(res.out, ContainsSubstring("run-1.csv"));

    SECTION("dimension mismatches are caught") {
        const fs::path narrow = tmp.path / "narrow.csv";
        std::ofstream(narrow) << "t,V_1\n0,1\n1,1\n";
        const CliResult bad = run_cli({"verify", config_path("fig4.cfg"), "--traj", narrow.string()});
        CHECK(bad.code == 2);
        CHECK_THAT(bad.err, ContainsSubstring("state columns"));
    }
}

TEST_CASE("window overrides reshape the recorded grid", "[cli]") {
    TempDir tmp;
    const fs::path out = tmp.path / "short";
    const CliResult res = run_cli({"simulate", config_path("fig4.cfg"), "--out", out.string(),
                                   "--t-end", "0.5"});
    CHECK(res.code == 0);
    const Trajectory traj = read_trajectory_csv((out / "run-1.csv").string());
    CHECK(traj.samples() == 51);
    CHECK(traj.times.back() == 0.5);

    SECTION("inconsistent overrides are usage errors") {
        const CliResult bad = run_cli({"simulate", config_path("fig4.cfg"), "--out",
                                       (tmp.path / "bad").string(), "--t-end", "-1.0"});
        CHECK(bad.code == 2);
        CHECK_THAT(bad.err, ContainsSubstring("command line"));
    }
}
