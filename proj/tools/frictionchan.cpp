// frictionchan: scenario runner for the measurement-feedback friction models.
// One scenario per process; reads a flat key-value config, writes CSV/JSON
// with a metadata header. Exit codes: 0 success, 2 config error, 3 violated
// numerical precondition.

#include "friction/charfunc.hpp"
#include "friction/dcsl.hpp"
#include "friction/diffusion.hpp"
#include "friction/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

using namespace friction;
using nlohmann::json;

namespace {

// ---------- logging ----------

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

Level log_threshold() {
    const char* env = std::getenv("FRICTIONCHAN_LOG");
    if (!env) return Level::Info;
    const std::string v = env;
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    if (v == "warn") return Level::Warn;
    if (v == "error") return Level::Error;
    return Level::Info;
}

void log(Level lv, const std::string& msg) {
    static const Level thr = log_threshold();
    if (lv < thr) return;
    static const char* tag[] = {"debug", "info", "warn", "error"};
    std::cerr << "[" << tag[(int)lv] << "] " << msg << "\n";
}

// ---------- config -> domain objects ----------

Grid grid_from(const Config& c) {
    return make_grid((int)c.integer_or("grid.n", 128), c.num("grid.p_max"),
                     c.num_or("grid.hbar", 1.0));
}

MeasurementDistribution mu_from(const Config& c, double hbar) {
    const std::string type = c.str_or("mu.type", "gaussian");
    if (type == "gaussian")
        return MeasurementDistribution::gaussian1d(c.num("mu.sigma"),
                                                   c.num_or("mu.bias", 0.0), hbar);
    if (type == "csv") return read_distribution_csv(c.str("mu.file"), hbar);
    throw ConfigError("key 'mu.type': unknown value '" + type + "'");
}

FeedbackLaw feedback_from(const Config& c) {
    const std::string type = c.str_or("feedback.type", "linear");
    const double coeff = c.num("feedback.coeff");
    if (type == "linear") return FeedbackLaw::linear(coeff);
    if (type == "constant") return FeedbackLaw::constant(coeff);
    if (type == "quadratic") return FeedbackLaw::quadratic(coeff);
    throw ConfigError("key 'feedback.type': unknown value '" + type + "'");
}

ChannelSpec spec_from(const Config& c, double hbar) {
    ChannelSpec spec;
    spec.mu = mu_from(c, hbar);
    spec.feedback = feedback_from(c);
    spec.rate = c.num_or("channel.rate", 1.0);
    return spec;
}

Hamiltonian hamiltonian_from(const Config& c) {
    const std::string type = c.str_or("hamiltonian.type", "free");
    const double mass = c.num_or("hamiltonian.mass", 1.0);
    if (type == "free") return Hamiltonian::free_particle(mass);
    if (type == "harmonic") return Hamiltonian::harmonic(mass, c.num("hamiltonian.omega"));
    throw ConfigError("key 'hamiltonian.type': unknown value '" + type + "'");
}

WavefunctionState state_from(const Config& c, const Grid& g) {
    return gaussian_state(g, c.num_or("state.x0", 0.0), c.num_or("state.p0", 0.0),
                          c.num_or("state.width", 1.0));
}

DcslParams dcsl_from(const Config& c) {
    DcslParams p;
    p.gamma = c.num("dcsl.gamma");
    p.r_csl = c.num("dcsl.r_csl");
    p.k = c.num("dcsl.k");
    p.m = c.num_or("dcsl.m", 1.0);
    p.m0 = c.num_or("dcsl.m0", 1.0);
    p.hbar = c.num_or("grid.hbar", 1.0);
    return p;
}

// ---------- output helpers ----------

std::string iso_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json meta_json(const RunMeta& m) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)m.config_hash);
    return {{"version", version_string},
            {"scenario", m.scenario},
            {"config_hash", hex},
            {"seed", m.seed},
            {"timestamp", m.timestamp}};
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file '" + path + "'");
    os << j.dump(2) << "\n";
}

json moments_json(const Moments1D& m) {
    return {{"x", m.x}, {"p", m.p}, {"xx", m.xx}, {"xp", m.xp}, {"pp", m.pp}};
}

// ---------- validation (dry run of the precondition checks) ----------

struct Report {
    std::vector<std::string> errors, warnings;
};

bool uses_dynamics(const std::string& s) {
    return s == "simulate" || s == "trajectories" || s == "moments" ||
           s == "diffusion-compare";
}

void check_time_step(const Config& c, const Grid& g, const Hamiltonian& h,
                     double rate, Report& rep) {
    const double dt = c.num("time.dt");
    if (!(dt > 0) || !(c.num("time.t_final") > 0)) {
        rep.errors.push_back("time.dt and time.t_final must be positive");
        return;
    }
    if (dt * rate > 0.1)
        rep.errors.push_back("time.dt too large: dt * rate must stay <= 0.1");
    const double e_max =
        h.kinetic_diag(g).maxCoeff() + h.potential_diag(g).maxCoeff();
    if (dt * e_max > 0.1 * g.hbar)
        rep.errors.push_back(
            "time.dt too large for the grid spectrum: dt * E_max <= 0.1 hbar");
}

Report validate_scenario(const std::string& scenario, const Config& c) {
    Report rep;
    auto guard = [&](const std::function<void()>& fn) {
        // library precondition throws become report entries
        try {
            fn();
        } catch (const ConfigError&) {
            throw; // malformed config stays a config error
        } catch (const std::exception& e) {
            rep.errors.push_back(e.what());
        }
    };

    if (uses_dynamics(scenario)) {
        guard([&] {
            ChannelSpec spec = spec_from(c, c.num_or("grid.hbar", 1.0));
            spec.validate();
            if (spec.feedback.is_linear() &&
                (spec.feedback.coeff <= 0 || spec.feedback.coeff >= 2))
                rep.warnings.push_back("heating regime: linear feedback coefficient " +
                                       std::to_string(spec.feedback.coeff) +
                                       " outside (0, 2), no stationary state");
        });
    }
    if (scenario == "simulate" || scenario == "trajectories" ||
        scenario == "diffusion-compare") {
        guard([&] {
            Grid g = grid_from(c);
            state_from(c, g);
            if (scenario != "diffusion-compare")
                check_time_step(c, g, hamiltonian_from(c),
                                c.num_or("channel.rate", 1.0), rep);
            else
                c.num("time.t_final");
        });
    }
    if (scenario == "moments") {
        guard([&] {
            hamiltonian_from(c);
            c.num("time.t_final");
        });
    }
    if (scenario == "trajectories") guard([&] { c.integer("trajectories.n_traj"); });
    if (scenario == "stability") {
        guard([&] {
            if (!(c.num_or("stability.gamma_min", 1e-2) > 0))
                rep.errors.push_back("stability.gamma_min must be positive (log axis)");
        });
    }
    if (scenario == "equilibrium") {
        guard([&] {
            mu_from(c, c.num_or("grid.hbar", 1.0));
            const double a = c.num("equilibrium.alpha");
            if (!(a > 0 && a < 2))
                rep.errors.push_back("equilibrium.alpha must lie in (0, 2)");
            if (!(c.num("equilibrium.rate") > 0))
                rep.errors.push_back("equilibrium.rate must be positive");
        });
    }
    if (scenario == "dcsl-map" || scenario == "dcsl-identity") {
        guard([&] {
            DcslParams p = dcsl_from(c);
            p.validate();
            if (scenario == "dcsl-map" && c.has("dcsl.scale_to"))
                scale_params(reference_scaled(p), c.num("dcsl.scale_to"));
            if (scenario == "dcsl-identity") grid_from(c);
        });
    }
    if (scenario == "bystander") {
        guard([&] {
            Grid g = grid_from(c);
            state_from(c, g);
            for (const char* pfx : {"particle1", "particle2"}) {
                const double a = c.num(std::string(pfx) + ".alpha");
                if (!(a > 0))
                    rep.errors.push_back(std::string(pfx) + ".alpha must be positive");
                c.num(std::string(pfx) + ".sigma");
            }
            c.num("bystander.x2");
        });
    }
    if (scenario == "charfunc-iterate") {
        guard([&] {
            Grid g = grid_from(c);
            state_from(c, g);
            mu_from(c, g.hbar);
            const double a = c.num("charfunc.alpha");
            if (!(a > 0 && a < 2))
                rep.errors.push_back("charfunc.alpha must lie in (0, 2)");
            if (c.integer_or("charfunc.iterations", 10) < 0)
                rep.errors.push_back("charfunc.iterations must be >= 0");
        });
    }
    return rep;
}

// ---------- scenario runners ----------

std::string opath(const std::string& out, const std::string& name) {
    return (std::filesystem::path(out) / name).string();
}

void run_simulate(const Config& c, const RunMeta& meta, const std::string& out) {
    Grid g = grid_from(c);
    ChannelSpec spec = spec_from(c, g.hbar);
    Hamiltonian h = hamiltonian_from(c);
    GridState rho0 = to_density(state_from(c, g));
    EvolutionResult res = evolve_master(
        h, spec, rho0, c.num("time.t_final"), c.num("time.dt"),
        (int)c.integer_or("time.record_every", 1),
        (int)c.integer_or("time.snapshot_every", 0));
    write_timeseries_csv(opath(out, "simulate.csv"), meta, res);
    write_json(opath(out, "simulate.json"),
               {{"meta", meta_json(meta)},
                {"samples", res.times.size()},
                {"final_time", res.times[res.times.size() - 1]},
                {"final_energy", res.energy[res.energy.size() - 1]},
                {"final_moments", moments_json(res.moments.back().m1)}});
}

void run_trajectories(const Config& c, const RunMeta& meta, const std::string& out,
                      int workers) {
    Grid g = grid_from(c);
    ChannelSpec spec = spec_from(c, g.hbar);
    Hamiltonian h = hamiltonian_from(c);
    WavefunctionState psi0 = state_from(c, g);
    if (workers <= 0) workers = std::max(1u, std::thread::hardware_concurrency());
    log(Level::Info, "running " + c.str("trajectories.n_traj") + " trajectories on " +
                         std::to_string(workers) + " workers");
    EvolutionResult res = unravel(h, spec, psi0, c.num("time.t_final"),
                                  c.num("time.dt"),
                                  (int)c.integer("trajectories.n_traj"), meta.seed,
                                  (int)c.integer_or("time.record_every", 1), workers);
    write_timeseries_csv(opath(out, "trajectories.csv"), meta, res);
    write_json(opath(out, "trajectories.json"),
               {{"meta", meta_json(meta)},
                {"n_traj", c.integer("trajectories.n_traj")},
                {"workers", workers},
                {"final_moments", moments_json(res.moments.back().m1)},
                {"final_std_error", moments_json(res.std_error.back())}});
}

void run_moments(const Config& c, const RunMeta& meta, const std::string& out) {
    const double hbar = c.num_or("grid.hbar", 1.0);
    ChannelSpec spec = spec_from(c, hbar);
    Hamiltonian h = hamiltonian_from(c);
    const double x0 = c.num_or("state.x0", 0.0), p0 = c.num_or("state.p0", 0.0);
    const double w = c.num_or("state.width", 1.0);
    Moments1D m0{x0, p0, x0 * x0 + w * w, 2 * x0 * p0,
                 p0 * p0 + hbar * hbar / (4 * w * w)};
    EvolutionResult res =
        moment_ode(h, spec, MomentState::from_1d(m0), c.num("time.t_final"));
    write_timeseries_csv(opath(out, "moments.csv"), meta, res);
    write_json(opath(out, "moments.json"),
               {{"meta", meta_json(meta)},
                {"final_moments", moments_json(res.moments.back().m1)}});
}

void run_stability(const Config& c, const RunMeta& meta, const std::string& out) {
    StabilityScan scan = stability_scan(
        c.num_or("stability.omega", 1.0),
        {c.num_or("stability.gamma_min", 1e-2), c.num_or("stability.gamma_max", 10.0)},
        {c.num_or("stability.alpha_min", -0.5), c.num_or("stability.alpha_max", 2.5)},
        (int)c.integer_or("stability.resolution", 100));
    write_stability_csv(opath(out, "stability.csv"), meta, scan);
    long stable = 0;
    for (Eigen::Index i = 0; i < scan.max_re.rows(); ++i)
        for (Eigen::Index j = 0; j < scan.max_re.cols(); ++j)
            if (scan.max_re(i, j) < 0) ++stable;
    write_json(opath(out, "stability.json"),
               {{"meta", meta_json(meta)},
                {"omega", scan.omega},
                {"cells", scan.max_re.size()},
                {"stable_cells", stable}});
}

void run_equilibrium(const Config& c, const RunMeta& meta, const std::string& out) {
    const double hbar = c.num_or("grid.hbar", 1.0);
    EquilibriumResult eq = equilibrium_moments(
        c.num_or("equilibrium.omega", 1.0), c.num("equilibrium.rate"),
        c.num("equilibrium.alpha"), mu_from(c, hbar),
        c.num_or("hamiltonian.mass", 1.0));
    write_json(opath(out, "equilibrium.json"),
               {{"meta", meta_json(meta)},
                {"moments", moments_json(eq.moments.m1)},
                {"energy", eq.energy},
                {"correlation_closed", eq.correlation_closed},
                {"imbalance_closed", eq.imbalance_closed},
                {"energy_closed", eq.energy_closed}});
}

void run_diffusion_compare(const Config& c, const RunMeta& meta,
                           const std::string& out) {
    Grid g = grid_from(c);
    ChannelSpec spec = spec_from(c, g.hbar);
    Hamiltonian h = hamiltonian_from(c);
    GridState rho0 = to_density(state_from(c, g));
    DiffusionComparison cmp =
        compare_full_vs_diffusion(h, spec, rho0, c.num("time.t_final"),
                                  (int)c.integer_or("time.samples", 10));
    {
        std::ofstream os(opath(out, "diffusion-compare.csv"));
        if (!os) throw std::runtime_error("cannot open output file");
        write_metadata_header(os, meta);
        os << "t,trace_dist,d_xx,d_xp,d_pp\n";
        char buf[160];
        for (Eigen::Index i = 0; i < cmp.times.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          cmp.times[i], cmp.trace_dist[i], cmp.d_xx[i], cmp.d_xp[i],
                          cmp.d_pp[i]);
            os << buf;
        }
    }
    DiffusionCoefficients d =
        diffusion_coefficients(spec.mu, spec.feedback, spec.rate);
    write_json(opath(out, "diffusion-compare.json"),
               {{"meta", meta_json(meta)},
                {"max_rel_second", cmp.max_rel_second},
                {"coefficients",
                 {{"A", d.A}, {"B", d.B}, {"C", d.C}, {"F", d.F}}}});
}

void run_dcsl_map(const Config& c, const RunMeta& meta, const std::string& out) {
    DcslParams p = dcsl_from(c);
    MappedParams m = map_params(p);
    json j{{"meta", meta_json(meta)},
           {"sigma", m.frictionless ? json() : json(m.sigma)},
           {"alpha", m.alpha},
           {"Gamma", m.Gamma},
           {"frictionless", m.frictionless}};
    if (c.has("dcsl.scale_to")) {
        ScaledParams s = scale_params(reference_scaled(p), c.num("dcsl.scale_to"));
        j["scaled"] = {{"mass", s.mass},   {"Gamma", s.Gamma}, {"alpha", s.alpha},
                       {"sigma", s.sigma}, {"k", s.k},         {"r_csl", s.r_csl}};
    }
    write_json(opath(out, "dcsl-map.json"), j);
}

void run_dcsl_identity(const Config& c, const RunMeta& meta, const std::string& out) {
    DcslParams p = dcsl_from(c);
    Grid g = grid_from(c);
    const double residual = verify_identity(p, g);
    MappedParams m = map_params(p);
    write_json(opath(out, "dcsl-identity.json"),
               {{"meta", meta_json(meta)},
                {"residual", residual},
                {"sigma", m.sigma},
                {"alpha", m.alpha},
                {"Gamma", m.Gamma}});
}

ChannelSpec particle_spec(const Config& c, const std::string& pfx, double hbar) {
    ChannelSpec spec;
    spec.mu = MeasurementDistribution::gaussian1d(c.num(pfx + ".sigma"), 0.0, hbar);
    spec.feedback = FeedbackLaw::linear(c.num(pfx + ".alpha"));
    spec.rate = c.num_or(pfx + ".rate", 1.0);
    return spec;
}

void run_bystander(const Config& c, const RunMeta& meta, const std::string& out) {
    Grid g = grid_from(c);
    GridState rho1 = to_density(state_from(c, g));
    BystanderResult r =
        bystander_cross_term(particle_spec(c, "particle1", g.hbar),
                             particle_spec(c, "particle2", g.hbar), rho1,
                             c.num("bystander.x2"));
    write_json(opath(out, "bystander.json"),
               {{"meta", meta_json(meta)},
                {"cross_norm", r.cross_norm},
                {"imbalance", r.imbalance},
                {"control_norm", r.control_norm},
                {"trace_weight", r.trace_weight},
                {"trace_real_error", r.trace_real_error}});
}

void run_charfunc_iterate(const Config& c, const RunMeta& meta,
                          const std::string& out) {
    Grid g = grid_from(c);
    MeasurementDistribution mu = mu_from(c, g.hbar);
    CharFunction chi0 = char_function(to_density(state_from(c, g)));
    CharIteration it =
        iterate_channel_char(c.num("charfunc.alpha"), mu, chi0,
                             (int)c.integer_or("charfunc.iterations", 10));
    {
        std::ofstream os(opath(out, "charfunc-iterate.csv"));
        if (!os) throw std::runtime_error("cannot open output file");
        write_metadata_header(os, meta);
        os << "iteration,off_axis_sup\n";
        char buf[64];
        for (std::size_t k = 0; k < it.off_axis_sup.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, it.off_axis_sup[k]);
            os << buf;
        }
    }
    write_char_csv(opath(out, "charfunc-chi.csv"), meta, it.chi);
    write_json(opath(out, "charfunc-iterate.json"),
               {{"meta", meta_json(meta)},
                {"decay_bound", it.decay_bound},
                {"iterations", it.off_axis_sup.size() - 1},
                {"final_off_axis_sup", it.off_axis_sup.back()}});
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> scenarios{
        "simulate",  "trajectories",      "moments",  "stability",
        "equilibrium", "diffusion-compare", "dcsl-map", "dcsl-identity",
        "bystander", "charfunc-iterate"};

    CLI::App app{"measurement-feedback friction scenario runner"};
    std::string scenario, config_path, out_dir = ".";
    std::optional<std::uint64_t> seed_cli;
    std::optional<int> workers_cli;
    bool validate_only = false;
    app.add_option("scenario", scenario, "scenario to run")
        ->required()
        ->check(CLI::IsMember(scenarios));
    app.add_option("--config", config_path, "config file path")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_cli, "RNG seed (overrides run.seed)");
    app.add_option("--workers", workers_cli, "worker threads (overrides run.workers)");
    app.add_flag("--validate-only", validate_only, "check preconditions, run nothing");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        const Config cfg = Config::parse_file(config_path);

        Report rep = validate_scenario(scenario, cfg);
        for (const auto& w : rep.warnings) log(Level::Warn, "warning: " + w);
        for (const auto& e : rep.errors) log(Level::Error, "error: " + e);
        if (validate_only) {
            std::cout << (rep.errors.empty() ? "valid" : "invalid") << ": "
                      << rep.errors.size() << " error(s), " << rep.warnings.size()
                      << " warning(s)\n";
            return rep.errors.empty() ? 0 : 3;
        }
        if (!rep.errors.empty()) return 3;

        RunMeta meta;
        meta.scenario = scenario;
        meta.config_hash = cfg.hash();
        meta.seed = seed_cli ? *seed_cli : cfg.u64_or("run.seed", 0);
        meta.timestamp = iso_now();
        const int workers =
            workers_cli ? *workers_cli : (int)cfg.integer_or("run.workers", 0);

        std::filesystem::create_directories(out_dir);
        log(Level::Debug, "scenario " + scenario + ", output to " + out_dir);

        if (scenario == "simulate") run_simulate(cfg, meta, out_dir);
        else if (scenario == "trajectories") run_trajectories(cfg, meta, out_dir, workers);
        else if (scenario == "moments") run_moments(cfg, meta, out_dir);
        else if (scenario == "stability") run_stability(cfg, meta, out_dir);
        else if (scenario == "equilibrium") run_equilibrium(cfg, meta, out_dir);
        else if (scenario == "diffusion-compare") run_diffusion_compare(cfg, meta, out_dir);
        else if (scenario == "dcsl-map") run_dcsl_map(cfg, meta, out_dir);
        else if (scenario == "dcsl-identity") run_dcsl_identity(cfg, meta, out_dir);
        else if (scenario == "bystander") run_bystander(cfg, meta, out_dir);
        else if (scenario == "charfunc-iterate") run_charfunc_iterate(cfg, meta, out_dir);
        return 0;
    } catch (const ConfigError& e) {
        log(Level::Error, e.what());
        return 2;
    } catch (const std::exception& e) {
        log(Level::Error, e.what());
        return 3;
    }
}
