// fsan: command-line harness for frequency-selective atomic norm recovery.
//
// Subcommands: synth, solve, retrieve, trial, phase, certify. Global flags
// (--seed, --config, --out, --mode, --tol, --backend, --jobs, --strict) may
// appear before or after the subcommand.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <fsan/experiments.hpp>
#include <fsan/serialize.hpp>
#include <fsan/vandermonde.hpp>

namespace
{

using namespace fsan;
using io::json;

/// Exit status for trial-level solver failures under --strict.
constexpr int kStrictFailure = 2;

struct Globals
{
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out = ".";
    std::string mode = "fs";
    std::optional<double> tol;
    std::string backend;
    unsigned jobs = 1;
    bool strict   = false;
};

std::filesystem::path out_path(const Globals& g, const std::string& name)
{
    std::filesystem::create_directories(g.out);
    return std::filesystem::path(g.out) / name;
}

SolverOptions apply_solver_flags(const Globals& g, SolverOptions o)
{
    if (g.tol)
    {
        o.eps_abs = o.eps_rel = o.ipm_tol = *g.tol;
    }
    if (!g.backend.empty())
    {
        o.backend = solver_backend_from_string(g.backend);
    }
    o.validate();
    return o;
}

TrialConfig load_trial_config(const Globals& g, const std::string& preset)
{
    TrialConfig cfg;
    if (preset == "fig1")
    {
        cfg = fig1_config(1);
    }
    else if (preset != "random")
    {
        throw std::invalid_argument("unknown preset '" + preset + "' (expected fig1 or random)");
    }
    if (!g.config.empty())
    {
        cfg = io::trial_config_from_json(io::read_json_file(g.config), cfg);
    }
    if (g.seed)
    {
        cfg.seed = *g.seed;
    }
    cfg.solver = apply_solver_flags(g, cfg.solver);
    cfg.validate();
    return cfg;
}

std::optional<BandSystem> parse_prior(const std::string& s)
{
    if (s == "accurate")
    {
        return BandSystem::accurate_prior();
    }
    if (s == "rough")
    {
        return BandSystem::rough_prior();
    }
    if (s == "none")
    {
        return std::nullopt;
    }
    return io::bands_from_json(io::read_json_file(s));
}

HalfSpectrumTensor load_tensor(const std::string& path)
{
    if (std::filesystem::path(path).extension() == ".fsb1")
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
        {
            throw std::runtime_error("cannot open " + path);
        }
        return io::read_fsb1(is);
    }
    const json j = io::read_json_file(path);
    return io::tensor_from_json(j.contains("b_hat") ? j.at("b_hat") : j);
}

void print_trial(const TrialResult& r)
{
    std::printf("mode=%s seed=%llu nmse=%.3e success=%d frequencies_ok=%d status=%s "
                "iterations=%d seconds=%.2f\n",
                to_string(r.mode).c_str(), static_cast<unsigned long long>(r.seed), r.nmse,
                r.success ? 1 : 0, r.frequencies_ok ? 1 : 0,
                to_string(r.diagnostics.status).c_str(), r.diagnostics.iterations, r.seconds);
    if (!r.error.empty())
    {
        std::printf("  note: %s\n", r.error.c_str());
    }
}

int cmd_synth(const Globals& g, const std::string& preset)
{
    const TrialConfig cfg = load_trial_config(g, preset);
    const TrialData data  = draw_trial(cfg);
    const bool fs         = trial_mode_from_string(g.mode) == TrialMode::FsAn && cfg.bands;
    const SDPInstance inst =
        assemble(data.observation, cfg.dims, fs ? cfg.bands : std::optional<BandSystem>{});

    const auto synth_path = out_path(g, "synth.json");
    io::write_json_file(synth_path.string(), {{"schema", io::kSchemaVersion},
                                              {"config", io::to_json(cfg)},
                                              {"truth", io::to_json(data.truth)},
                                              {"x_star", io::to_json(data.x_star)},
                                              {"observation", io::to_json(data.observation)}});
    const auto inst_path = out_path(g, "instance.json");
    io::write_json_file(inst_path.string(), io::to_json(inst));
    std::printf("wrote %s\nwrote %s\n", synth_path.c_str(), inst_path.c_str());
    return 0;
}

int cmd_solve(const Globals& g, const std::string& instance_path, const std::string& preset)
{
    SDPInstance inst;
    SolverOptions opts;
    if (!instance_path.empty())
    {
        inst = io::instance_from_json(io::read_json_file(instance_path));
        if (!g.config.empty())
        {
            const json j = io::read_json_file(g.config);
            if (j.contains("solver"))
            {
                opts = io::solver_options_from_json(j.at("solver"));
            }
        }
        opts = apply_solver_flags(g, opts);
    }
    else
    {
        const TrialConfig cfg = load_trial_config(g, preset);
        const TrialData data  = draw_trial(cfg);
        const bool fs         = trial_mode_from_string(g.mode) == TrialMode::FsAn && cfg.bands;
        inst = assemble(data.observation, cfg.dims, fs ? cfg.bands : std::optional<BandSystem>{});
        opts = cfg.solver;
    }
    const SDPSolution sol = solve(inst, opts);
    const auto path       = out_path(g, "solution.json");
    io::write_json_file(path.string(), io::to_json(sol));
    const auto& d = sol.diagnostics;
    std::printf("status=%s objective=%.12g iterations=%d primal=%.2e dual=%.2e rank_t=%lld "
                "seconds=%.2f\nwrote %s\n",
                to_string(d.status).c_str(), sol.objective, d.iterations, d.primal_residual,
                d.dual_residual, static_cast<long long>(d.rank_t), d.seconds, path.c_str());
    const bool failed = d.status == SolveStatus::InfeasibleLike;
    return (g.strict && failed) ? kStrictFailure : 0;
}

int cmd_retrieve(const Globals& g, const std::string& instance_path,
                 const std::string& solution_path, bool dump_spectrum)
{
    if (solution_path.empty())
    {
        throw std::invalid_argument("retrieve: --solution is required");
    }
    const SDPSolution sol = io::solution_from_json(io::read_json_file(solution_path));
    const DimsSpec dims   = sol.b_hat.dims();
    BandSystem bands      = BandSystem::unconstrained(dims.d());
    if (!instance_path.empty())
    {
        const SDPInstance inst = io::instance_from_json(io::read_json_file(instance_path));
        if (inst.bands)
        {
            bands = *inst.bands;
        }
    }
    const RetrievalResult rr = retrieve(sol, dims, bands);
    const auto path          = out_path(g, "retrieval.json");
    io::write_json_file(path.string(), io::to_json(rr));
    for (const auto& e : rr.model.entries())
    {
        std::printf("f = (");
        for (Index i = 0; i < e.frequency.d(); ++i)
        {
            std::printf("%s%.9f", i ? ", " : "", e.frequency[i]);
        }
        std::printf(")  gain = %.6f %+.6fi\n", e.gain.real(), e.gain.imag());
    }
    std::printf("wrote %s\n", path.c_str());
    if (dump_spectrum)
    {
        const Pseudospectrum ps =
            music_pseudospectrum(build_level_toeplitz(sol.b_hat), dims, bands, rr.order);
        const auto csv = out_path(g, "pseudospectrum.csv");
        std::ofstream os(csv);
        write_pseudospectrum_csv(ps, os);
        std::printf("wrote %s\n", csv.c_str());
    }
    return 0;
}

int cmd_trial(const Globals& g, const std::string& preset)
{
    const TrialConfig cfg = load_trial_config(g, preset);
    const TrialMode mode  = trial_mode_from_string(g.mode);
    const TrialResult r   = run_trial(cfg, mode);
    print_trial(r);
    const auto path = out_path(g, "trial_" + to_string(mode) + "_" + std::to_string(cfg.seed) + ".json");
    io::write_json_file(path.string(), io::to_json(r));
    std::printf("wrote %s\n", path.c_str());
    return (g.strict && r.solver_failed) ? kStrictFailure : 0;
}

int cmd_phase(const Globals& g, const std::vector<Index>& ns, const std::vector<Index>& r,
              int trials)
{
    PhaseGrid grid = PhaseGrid::desk_scale();
    if (!g.config.empty())
    {
        grid = io::phase_grid_from_json(io::read_json_file(g.config), grid);
    }
    if (!ns.empty())
    {
        grid.ns_values = ns;
    }
    if (!r.empty())
    {
        grid.r_values = r;
    }
    if (trials > 0)
    {
        grid.trials = trials;
    }
    if (g.seed)
    {
        grid.base_seed = *g.seed;
    }
    grid.base.solver = apply_solver_flags(g, grid.base.solver);
    grid.validate();

    const PhaseResult res = phase_transition(grid, g.jobs, [](std::size_t done, std::size_t total) {
        if (done == total || done % 10 == 0)
        {
            std::fprintf(stderr, "\r%zu / %zu trials", done, total);
            if (done == total)
            {
                std::fputc('\n', stderr);
            }
        }
    });
    for (std::size_t a = 0; a < res.tables.size(); ++a)
    {
        std::printf("[%s] mean rate %.3f\n", grid.arms[a].name.c_str(), res.tables[a].mean());
        res.tables[a].write_csv(std::cout);
    }
    for (const auto& p : emit_plotdata(res, g.out))
    {
        std::printf("wrote %s\n", p.c_str());
    }
    const auto path = out_path(g, "phase.json");
    io::write_json_file(path.string(), io::to_json(res));
    std::printf("wrote %s\nsolver failures: %d, %.1f s\n", path.c_str(), res.solver_failures,
                res.seconds);
    return (g.strict && res.solver_failures > 0) ? kStrictFailure : 0;
}

int cmd_certify(const Globals& g, const std::string& tensor_path, const std::string& prior,
                double psd_tol, double rank_tol)
{
    if (tensor_path.empty())
    {
        throw std::invalid_argument("certify: --tensor is required");
    }
    const HalfSpectrumTensor b = load_tensor(tensor_path);
    const auto bands           = parse_prior(prior);
    const DimsSpec& dims       = b.dims();
    json report;
    bool pass = true;
    if (bands)
    {
        const CertificateReport rep = verify_fs_certificate(b, *bands, psd_tol, rank_tol);
        json blocks                 = json::array();
        for (const auto& gc : rep.g)
        {
            blocks.push_back({{"dim", gc.dim},
                              {"constrained", gc.constrained},
                              {"lambda_min", gc.block.lambda_min},
                              {"lambda_max", gc.block.lambda_max},
                              {"psd", gc.block.psd}});
        }
        report["certificate"] = {{"t_lambda_min", rep.t.lambda_min},
                                 {"t_lambda_max", rep.t.lambda_max},
                                 {"t_psd", rep.t.psd},
                                 {"rank_t", rep.rank_t},
                                 {"rank_hypothesis", rep.rank_hypothesis},
                                 {"g_blocks", blocks},
                                 {"pass", rep.pass}};
        pass = rep.pass;
    }
    // decomposition round trip
    DecompositionOptions dopt;
    dopt.rank_tol = rank_tol;
    try
    {
        const Decomposition dec = vandermonde_decompose(build_level_toeplitz(b), dims, dopt);
        report["decomposition"] = {{"model", io::to_json(dec.model)}, {"residual", dec.residual}};
        if (bands)
        {
            bool inside = true;
            for (const auto& e : dec.model.entries())
            {
                inside = inside && bands->contains(e.frequency);
            }
            report["decomposition"]["inside_bands"] = inside;
        }
    }
    catch (const DecompositionError& e)
    {
        report["decomposition"] = {{"error", e.what()}};
    }
    report["pass"] = pass;
    const auto path = out_path(g, "certificate.json");
    io::write_json_file(path.string(), report);
    std::printf("%s\nwrote %s\n", report.dump(2).c_str(), path.c_str());
    return (g.strict && !pass) ? kStrictFailure : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fsan - frequency-selective atomic norm harmonic retrieval"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed (trial seed, or phase base seed)");
    app.add_option("--config", g.config, "JSON config file (schema 1)");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--mode", g.mode, "fs (band-constrained) or an (baseline)")
        ->check(CLI::IsMember({"fs", "an"}))
        ->capture_default_str();
    app.add_option("--tol", g.tol, "Solver termination tolerance");
    app.add_option("--backend", g.backend, "Solver backend")->check(CLI::IsMember({"ipm", "admm"}));
    app.add_option("--jobs", g.jobs, "Worker threads for sweeps (0: all cores)")->capture_default_str();
    app.add_flag("--strict", g.strict, "Exit with status 2 on any trial-level solver failure");

    std::string preset = "fig1";
    auto add_preset    = [&](CLI::App* sub) {
        sub->add_option("--preset", preset, "Base trial config: fig1 or random")
            ->check(CLI::IsMember({"fig1", "random"}))
            ->capture_default_str();
    };

    auto* synth = app.add_subcommand("synth", "Draw a trial and write its truth, observation and instance");
    add_preset(synth);

    std::string instance_path;
    std::string solution_path;
    auto* solve_cmd = app.add_subcommand("solve", "Solve an instance (from --instance or a drawn trial)");
    solve_cmd->add_option("--instance", instance_path, "Instance JSON");
    add_preset(solve_cmd);

    bool dump_spectrum = false;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "MUSIC retrieval from a solution");
    retrieve_cmd->add_option("--solution", solution_path, "Solution JSON")->required();
    retrieve_cmd->add_option("--instance", instance_path, "Instance JSON (supplies the bands)");
    retrieve_cmd->add_flag("--pseudospectrum", dump_spectrum, "Also write pseudospectrum.csv");

    auto* trial = app.add_subcommand("trial", "Run one seeded trial");
    add_preset(trial);

    std::vector<Index> ns_values;
    std::vector<Index> r_values;
    int trials  = 0;
    auto* phase = app.add_subcommand("phase", "Phase-transition sweep over (r, Ns)");
    phase->add_option("--ns", ns_values, "Ns values")->delimiter(',');
    phase->add_option("--r", r_values, "r values")->delimiter(',');
    phase->add_option("--trials", trials, "Trials per cell");

    std::string tensor_path;
    std::string prior = "accurate";
    double psd_tol    = 1e-8;
    double rank_tol   = 1e-6;
    auto* certify     = app.add_subcommand("certify", "Certificate and decomposition checks on a tensor");
    certify->add_option("--tensor", tensor_path, "Tensor (.json, solution .json or .fsb1)")->required();
    certify->add_option("--bands", prior, "accurate, rough, none or a band-system JSON file")
        ->capture_default_str();
    certify->add_option("--psd-tol", psd_tol)->capture_default_str();
    certify->add_option("--rank-tol", rank_tol)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (synth->parsed())
        {
            return cmd_synth(g, preset);
        }
        if (solve_cmd->parsed())
        {
            return cmd_solve(g, instance_path, preset);
        }
        if (retrieve_cmd->parsed())
        {
            return cmd_retrieve(g, instance_path, solution_path, dump_spectrum);
        }
        if (trial->parsed())
        {
            return cmd_trial(g, preset);
        }
        if (phase->parsed())
        {
            return cmd_phase(g, ns_values, r_values, trials);
        }
        if (certify->parsed())
        {
            return cmd_certify(g, tensor_path, prior, psd_tol, rank_tol);
        }
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
