#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& workspace() {
    static fs::path ws = [] {
        fs::path p = fs::temp_directory_path() /
                     ("frictionchan_cli_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return ws;
}

RunResult run_cli(const std::string& args) {
    const char* bin = std::getenv("FRICTIONCHAN_BIN");
    REQUIRE(bin != nullptr);
    const fs::path out = workspace() / "stdout.txt", err = workspace() / "stderr.txt";
    const std::string cmd = std::string(bin) + " " + args + " >" + out.string() +
                            " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = workspace() / name;
    std::ofstream(p) << text;
    return p;
}

// file contents with the run-dependent timestamp line removed
std::string stable_part(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line, acc;
    while (std::getline(in, line))
        if (line.find("timestamp") == std::string::npos) acc += line + "\n";
    return acc;
}

const std::string sim_cfg = R"([grid]
n = 32
p_max = 6.0
[mu]
type = gaussian
sigma = 1.0
[feedback]
type = linear
coeff = 0.5
[channel]
rate = 1.0
[hamiltonian]
type = harmonic
mass = 1.0
omega = 1.0
[state]
x0 = 1.0
width = 0.8
[time]
t_final = 1.0
dt = 0.0015
record_every = 100
)";

} // namespace

TEST_CASE("exit codes and diagnostics") {
    SUBCASE("unknown scenario") {
        auto cfg = write_config("any.cfg", sim_cfg);
        auto r = run_cli("frobnicate --config " + cfg.string());
        CHECK(r.exit_code == 2);
    }

    SUBCASE("missing config file") {
        auto r = run_cli("simulate --config /nonexistent.cfg");
        CHECK(r.exit_code == 2);
    }

    SUBCASE("malformed config line") {
        auto cfg = write_config("bad.cfg", "[grid]\nn 32\n");
        auto r = run_cli("simulate --config " + cfg.string());
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("key = value") != std::string::npos);
    }

    SUBCASE("missing required key is named") {
        std::string text = sim_cfg;
        auto pos = text.find("sigma = 1.0\n");
        text.erase(pos, 12);
        auto cfg = write_config("nosigma.cfg", text);
        auto r = run_cli("simulate --config " + cfg.string() + " --out " +
                         (workspace() / "nosig").string());
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("mu.sigma") != std::string::npos);
    }

    SUBCASE("violated numerical precondition") {
        std::string text = sim_cfg;
        auto pos = text.find("dt = 0.0015");
        text.replace(pos, 11, "dt = 0.5000");
        auto cfg = write_config("bigdt.cfg", text);
        auto r = run_cli("simulate --config " + cfg.string() + " --out " +
                         (workspace() / "bigdt").string());
        CHECK(r.exit_code == 3);
        CHECK(r.err.find("time.dt") != std::string::npos);
    }
}

TEST_CASE("validate-only") {
    SUBCASE("valid config reports cleanly and writes nothing") {
        auto cfg = write_config("v.cfg", sim_cfg);
        const fs::path out = workspace() / "vnone";
        auto r = run_cli("simulate --config " + cfg.string() + " --out " +
                         out.string() + " --validate-only");
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("valid") == 0);
        CHECK(!fs::exists(out));
    }

    SUBCASE("heating regime is a warning, not an error") {
        std::string text = sim_cfg;
        auto pos = text.find("coeff = 0.5");
        text.replace(pos, 11, "coeff = 2.5");
        auto cfg = write_config("heat.cfg", text);
        auto r = run_cli("simulate --config " + cfg.string() + " --validate-only");
        CHECK(r.exit_code == 0);
        CHECK(r.err.find("heating regime") != std::string::npos);
    }

    SUBCASE("dCSL scaling below the critical mass fails validation") {
        auto cfg = write_config("crit.cfg", R"([dcsl]
gamma = 1.0
r_csl = 1.0
k = 1.0
scale_to = 0.4
)");
        auto r = run_cli("dcsl-map --config " + cfg.string() + " --validate-only");
        CHECK(r.exit_code == 3);
        CHECK(r.err.find("critical mass") != std::string::npos);
    }
}

TEST_CASE("simulate: outputs, metadata, determinism") {
    auto cfg = write_config("sim.cfg", sim_cfg);
    const fs::path o1 = workspace() / "sim1", o2 = workspace() / "sim2";
    auto r1 = run_cli("simulate --config " + cfg.string() + " --out " + o1.string());
    auto r2 = run_cli("simulate --config " + cfg.string() + " --out " + o2.string());
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);

    const std::string csv = slurp(o1 / "simulate.csv");
    CHECK(csv.find("# version: ") == 0);
    CHECK(csv.find("# config_hash: ") != std::string::npos);
    CHECK(csv.find("t,x,p,xx,xp,pp,energy") != std::string::npos);

    // bit-identical modulo the timestamp line
    CHECK(stable_part(o1 / "simulate.csv") == stable_part(o2 / "simulate.csv"));
    CHECK(stable_part(o1 / "simulate.json") == stable_part(o2 / "simulate.json"));

    auto j = nlohmann::json::parse(slurp(o1 / "simulate.json"));
    CHECK(j["meta"]["scenario"] == "simulate");
    CHECK(std::abs(j["final_moments"]["pp"].get<double>()) < 10.0);
}

TEST_CASE("trajectories: seeded reproducibility") {
    std::string text = sim_cfg + R"([trajectories]
n_traj = 8
)";
    auto cfg = write_config("traj.cfg", text);
    const fs::path o1 = workspace() / "t1", o2 = workspace() / "t2",
                   o3 = workspace() / "t3";
    auto r1 = run_cli("trajectories --config " + cfg.string() + " --seed 7 --workers 2 --out " + o1.string());
    auto r2 = run_cli("trajectories --config " + cfg.string() + " --seed 7 --workers 1 --out " + o2.string());
    auto r3 = run_cli("trajectories --config " + cfg.string() + " --seed 8 --workers 2 --out " + o3.string());
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    REQUIRE(r3.exit_code == 0);
    // same seed: identical even across worker counts; different seed: not
    CHECK(stable_part(o1 / "trajectories.csv") == stable_part(o2 / "trajectories.csv"));
    CHECK(stable_part(o1 / "trajectories.csv") != stable_part(o3 / "trajectories.csv"));
    CHECK(slurp(o1 / "trajectories.csv").find("pp_se") != std::string::npos);
}

TEST_CASE("stability: sign structure of the scan") {
    auto cfg = write_config("stab.cfg", R"([stability]
resolution = 24
)");
    const fs::path out = workspace() / "stab";
    auto r = run_cli("stability --config " + cfg.string() + " --out " + out.string());
    REQUIRE(r.exit_code == 0);

    std::istringstream in(slurp(out / "stability.csv"));
    std::string line;
    int rows = 0;
    bool ok = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'g') continue;
        double g, a, m;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &g, &a, &m) == 3);
        ok = ok && ((m < 0) == (a > 0 && a < 2));
        ++rows;
    }
    CHECK(rows == 24 * 24);
    CHECK(ok);

    auto j = nlohmann::json::parse(slurp(out / "stability.json"));
    CHECK(j["stable_cells"].get<long>() > 0);
    CHECK(j["stable_cells"].get<long>() < j["cells"].get<long>());
}

TEST_CASE("dcsl-identity: residual from the operator comparison") {
    auto cfg = write_config("dcsl.cfg", R"([grid]
n = 512
p_max = 24.0
[dcsl]
gamma = 1.0
r_csl = 1.0
k = 0.2
)");
    const fs::path out = workspace() / "dcsl";
    auto r = run_cli("dcsl-identity --config " + cfg.string() + " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(slurp(out / "dcsl-identity.json"));
    CHECK(j["residual"].get<double>() <= 1e-8);
    CHECK(j["alpha"].get<double>() == doctest::Approx(2.0 * 0.2 / 1.2).epsilon(1e-12));
}

TEST_CASE("equilibrium and charfunc-iterate emit scalar records") {
    auto ecfg = write_config("eq.cfg", R"([mu]
sigma = 1.0
[equilibrium]
omega = 1.0
rate = 0.5
alpha = 0.5
)");
    const fs::path eo = workspace() / "eq";
    auto r = run_cli("equilibrium --config " + ecfg.string() + " --out " + eo.string());
    REQUIRE(r.exit_code == 0);
    auto je = nlohmann::json::parse(slurp(eo / "equilibrium.json"));
    CHECK(je["energy"].get<double>() > 0);
    CHECK(je["energy"].get<double>() ==
          doctest::Approx(je["energy_closed"].get<double>()).epsilon(1e-10));

    auto ccfg = write_config("cf.cfg", R"([grid]
n = 64
p_max = 6.0
[mu]
sigma = 1.0
[state]
x0 = 0.5
p0 = 0.3
[charfunc]
alpha = 0.5
iterations = 4
)");
    const fs::path co = workspace() / "cf";
    auto rc = run_cli("charfunc-iterate --config " + ccfg.string() + " --out " + co.string());
    REQUIRE(rc.exit_code == 0);
    auto jc = nlohmann::json::parse(slurp(co / "charfunc-iterate.json"));
    CHECK(jc["decay_bound"].get<double>() < 1.0);
    CHECK(jc["final_off_axis_sup"].get<double>() < 1.0);
    const std::string chi = slurp(co / "charfunc-chi.csv");
    CHECK(chi.find("P,X,re,im") != std::string::npos);
}
