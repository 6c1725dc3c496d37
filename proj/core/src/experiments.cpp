#include <fsan/experiments.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fsan/rng.hpp>

namespace fsan
{

std::string to_string(TrialMode mode)
{
    return mode == TrialMode::FsAn ? "fs" : "an";
}

TrialMode trial_mode_from_string(const std::string& s)
{
    if (s == "fs" || s == "fs-an")
    {
        return TrialMode::FsAn;
    }
    if (s == "an")
    {
        return TrialMode::An;
    }
    throw std::invalid_argument("unknown trial mode '" + s + "' (expected fs or an)");
}

void TrialConfig::validate() const
{
    if (dims.d() == 0)
    {
        throw std::invalid_argument("TrialConfig: empty grid");
    }
    if (ns < 0 || ns > dims.total())
    {
        throw std::invalid_argument("TrialConfig: Ns = " + std::to_string(ns) +
                                    " outside [0, N_D = " + std::to_string(dims.total()) + "]");
    }
    if (r < 1)
    {
        throw std::invalid_argument("TrialConfig: r must be at least 1");
    }
    if (!(threshold > 0.0) || !(min_separation >= 0.0) || !(frequency_tol > 0.0))
    {
        throw std::invalid_argument("TrialConfig: thresholds must be positive");
    }
    if (bands && bands->d() != dims.d())
    {
        throw std::invalid_argument("TrialConfig: band system dimension differs from the grid");
    }
    if (frequencies)
    {
        if (static_cast<Index>(frequencies->size()) != r)
        {
            throw std::invalid_argument("TrialConfig: r differs from the number of fixed tuples");
        }
        for (const auto& f : *frequencies)
        {
            if (f.d() != dims.d())
            {
                throw std::invalid_argument("TrialConfig: fixed tuple dimension differs from the grid");
            }
        }
        return;
    }
    if (static_cast<Index>(region.size()) != dims.d())
    {
        throw std::invalid_argument("TrialConfig: one sampling interval per dimension is required");
    }
    for (std::size_t i = 0; i < region.size(); ++i)
    {
        const auto& iv = region[i];
        if (!(iv.lo >= 0.0 && iv.lo < iv.hi && iv.hi <= 1.0))
        {
            throw std::invalid_argument("TrialConfig: sampling interval must satisfy 0 <= lo < hi <= 1");
        }
        // the truth must be feasible for the prior
        if (bands)
        {
            const double last = std::nextafter(iv.hi, iv.lo);
            const double mid  = 0.5 * (iv.lo + iv.hi);
            const auto& band  = bands->bands(static_cast<Index>(i));
            const bool inside = std::any_of(band.begin(), band.end(), [&](const FrequencyBand& b) {
                return band_contains(b, iv.lo) && band_contains(b, mid) && band_contains(b, last);
            });
            if (!inside)
            {
                throw std::invalid_argument("TrialConfig: sampling region of dimension " +
                                            std::to_string(i) + " is not inside the prior bands");
            }
        }
    }
}

TrialConfig fig1_config(std::uint64_t seed)
{
    TrialConfig c;
    c.dims        = DimsSpec{8, 8};
    c.bands       = BandSystem::accurate_prior();
    c.r           = 3;
    c.ns          = 12;
    c.frequencies = std::vector<FrequencyTuple>{{0.35, 0.51}, {0.31, 0.59}, {0.37, 0.57}};
    c.seed        = seed;
    return c;
}

TrialData draw_trial(const TrialConfig& config)
{
    config.validate();
    std::vector<FrequencyTuple> freqs;
    if (config.frequencies)
    {
        freqs = *config.frequencies;
    }
    else
    {
        CounterRng rng(config.seed, kFrequencyStream);
        constexpr int kMaxAttempts = 100000;
        int attempts               = 0;
        while (static_cast<Index>(freqs.size()) < config.r)
        {
            if (++attempts > kMaxAttempts)
            {
                throw std::runtime_error("draw_trial: cannot place " + std::to_string(config.r) +
                                         " tuples with the requested separation");
            }
            std::vector<double> comp;
            for (const auto& iv : config.region)
            {
                comp.push_back(rng.uniform(iv.lo, iv.hi));
            }
            FrequencyTuple f(std::move(comp));
            const bool crowded = std::any_of(freqs.begin(), freqs.end(), [&](const FrequencyTuple& g) {
                for (Index i = 0; i < f.d(); ++i)
                {
                    if (torus_distance(f[i], g[i]) < config.min_separation)
                    {
                        return true;
                    }
                }
                return false;
            });
            if (!crowded)
            {
                freqs.push_back(std::move(f));
            }
        }
    }

    CounterRng phases(config.seed, kPhaseStream);
    std::vector<SpectralComponent> comps;
    for (auto& f : freqs)
    {
        comps.push_back({std::move(f), std::polar(1.0, kTwoPi * phases.uniform())});
    }
    TrialData data;
    data.truth  = SpectralModel(std::move(comps));
    data.x_star = synthesize(data.truth, config.dims);
    const ObservationMask mask =
        random_mask(config.dims, config.ns, derive_seed(config.seed, kMaskStream));
    data.observation = apply_mask(data.x_star, mask);
    return data;
}

TrialResult run_trial(const TrialConfig& config, TrialMode mode)
{
    const auto t0 = std::chrono::steady_clock::now();
    TrialResult res;
    res.mode = mode;
    res.seed = config.seed;

    const TrialData data = draw_trial(config);
    res.truth            = data.truth;
    const Index r        = data.truth.order();
    res.frequency_errors.assign(static_cast<std::size_t>(r), std::numeric_limits<double>::infinity());

    const bool fs = mode == TrialMode::FsAn && config.bands.has_value();
    const BandSystem search =
        fs ? *config.bands : BandSystem::unconstrained(config.dims.d());

    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    SDPSolution sol;
    try
    {
        const SDPInstance inst = assemble(data.observation, config.dims,
                                          fs ? std::optional<BandSystem>(search) : std::nullopt);
        sol = solve(inst, config.solver);
    }
    catch (const std::exception& e)
    {
        res.solver_failed = true;
        res.error         = e.what();
        res.nmse          = std::numeric_limits<double>::infinity();
        res.seconds       = elapsed();
        return res;
    }
    res.diagnostics   = sol.diagnostics;
    res.objective     = sol.objective;
    res.solver_failed = sol.diagnostics.status == SolveStatus::InfeasibleLike;
    res.nmse          = nmse(sol.x_hat, data.x_star);
    res.success       = res.nmse < config.threshold;

    try
    {
        const RetrievalResult rr = retrieve(sol, config.dims, search, config.music);
        res.estimate             = rr.model;
        const auto truth_f       = data.truth.frequencies();
        const auto est_f         = rr.model.frequencies();
        const FrequencyMatch m   = match_frequencies(truth_f, est_f);
        res.frequency_errors     = m.max_component_error;
    }
    catch (const std::exception& e)
    {
        res.retrieval_failed = true;
        res.error            = e.what();
    }
    res.frequencies_ok = std::all_of(res.frequency_errors.begin(), res.frequency_errors.end(),
                                     [&](double e) { return e <= config.frequency_tol; });
    res.seconds = elapsed();
    return res;
}

std::vector<PhaseArm> default_arms()
{
    return {{"accurate", TrialMode::FsAn, BandSystem::accurate_prior()},
            {"rough", TrialMode::FsAn, BandSystem::rough_prior()},
            {"none", TrialMode::An, std::nullopt}};
}

PhaseGrid PhaseGrid::desk_scale()
{
    PhaseGrid g;
    for (Index ns = 4; ns <= 40; ns += 4)
    {
        g.ns_values.push_back(ns);
    }
    for (Index r = 1; r <= 6; ++r)
    {
        g.r_values.push_back(r);
    }
    return g;
}

void PhaseGrid::validate() const
{
    if (trials < 1)
    {
        throw std::invalid_argument("PhaseGrid: trials per cell must be at least 1");
    }
    if (arms.empty())
    {
        throw std::invalid_argument("PhaseGrid: no arms");
    }
    for (const Index ns : ns_values)
    {
        if (ns < 0 || ns > base.dims.total())
        {
            throw std::invalid_argument("PhaseGrid: Ns value " + std::to_string(ns) + " out of range");
        }
    }
    for (const Index r : r_values)
    {
        if (r < 1)
        {
            throw std::invalid_argument("PhaseGrid: r values must be positive");
        }
    }
}

std::uint64_t cell_seed(std::uint64_t base, Index r, Index ns, int trial)
{
    const auto cell = (static_cast<std::uint64_t>(r) << 32) ^ static_cast<std::uint64_t>(ns);
    return derive_seed(base, cell, static_cast<std::uint64_t>(trial));
}

double RateTable::mean() const
{
    return rates.size() == 0 ? 0.0 : rates.mean();
}

namespace
{

std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
    {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',')
    {
        out.emplace_back();
    }
    return out;
}

template <class T>
T parse_value(const std::string& s)
{
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    {
        throw std::runtime_error("RateTable: cannot parse '" + s + "'");
    }
    return v;
}

} // namespace

void RateTable::write_csv(std::ostream& os) const
{
    os << "r/Ns";
    for (const Index ns : ns_values)
    {
        os << ',' << ns;
    }
    os << '\n';
    for (std::size_t i = 0; i < r_values.size(); ++i)
    {
        os << r_values[i];
        for (std::size_t j = 0; j < ns_values.size(); ++j)
        {
            os << ',' << format_number(rates(static_cast<Index>(i), static_cast<Index>(j)));
        }
        os << '\n';
    }
}

RateTable RateTable::parse_csv(std::istream& is)
{
    RateTable t;
    std::string line;
    if (!std::getline(is, line))
    {
        throw std::runtime_error("RateTable: missing header");
    }
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "r/Ns")
    {
        throw std::runtime_error("RateTable: header must start with r/Ns");
    }
    for (std::size_t j = 1; j < header.size(); ++j)
    {
        t.ns_values.push_back(parse_value<Index>(header[j]));
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line))
    {
        if (line.empty())
        {
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
        {
            throw std::runtime_error("RateTable: row width differs from the header");
        }
        t.r_values.push_back(parse_value<Index>(cells[0]));
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j)
        {
            row.push_back(parse_value<double>(cells[j]));
        }
        rows.push_back(std::move(row));
    }
    t.rates.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.ns_values.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        for (std::size_t j = 0; j < rows[i].size(); ++j)
        {
            t.rates(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return t;
}

PhaseResult phase_transition(const PhaseGrid& grid, unsigned jobs, const ProgressFn& progress)
{
    grid.validate();
    const auto t0 = std::chrono::steady_clock::now();

    struct Task
    {
        std::size_t arm;
        std::size_t ri;
        std::size_t ni;
        int trial;
    };
    std::vector<Task> tasks;
    for (std::size_t a = 0; a < grid.arms.size(); ++a)
    {
        for (std::size_t ri = 0; ri < grid.r_values.size(); ++ri)
        {
            for (std::size_t ni = 0; ni < grid.ns_values.size(); ++ni)
            {
                for (int k = 0; k < grid.trials; ++k)
                {
                    tasks.push_back({a, ri, ni, k});
                }
            }
        }
    }
    std::vector<char> success(tasks.size(), 0);
    std::vector<char> failed(tasks.size(), 0);

    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex progress_mutex;
    auto worker = [&] {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size())
            {
                return;
            }
            const Task& t      = tasks[i];
            const PhaseArm& arm = grid.arms[t.arm];
            TrialConfig cfg     = grid.base;
            cfg.frequencies.reset();
            cfg.r     = grid.r_values[t.ri];
            cfg.ns    = grid.ns_values[t.ni];
            cfg.bands = arm.bands;
            cfg.seed  = cell_seed(grid.base_seed, cfg.r, cfg.ns, t.trial);
            try
            {
                const TrialResult res = run_trial(cfg, arm.mode);
                success[i]            = res.success ? 1 : 0;
                failed[i]             = res.solver_failed ? 1 : 0;
            }
            catch (const std::exception&)
            {
                failed[i] = 1;
            }
            if (progress)
            {
                const std::lock_guard lock(progress_mutex);
                progress(++done, tasks.size());
            }
        }
    };
    if (jobs == 0)
    {
        jobs = std::max(1u, std::thread::hardware_concurrency());
    }
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(tasks.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j)
    {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool)
    {
        th.join();
    }

    PhaseResult out;
    out.grid = grid;
    for (std::size_t a = 0; a < grid.arms.size(); ++a)
    {
        RateTable t;
        t.ns_values = grid.ns_values;
        t.r_values  = grid.r_values;
        t.rates     = RMatrix::Zero(static_cast<Index>(grid.r_values.size()),
                                    static_cast<Index>(grid.ns_values.size()));
        out.tables.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < tasks.size(); ++i)
    {
        const Task& t = tasks[i];
        out.tables[t.arm].rates(static_cast<Index>(t.ri), static_cast<Index>(t.ni)) +=
            success[i] ? 1.0 : 0.0;
        out.solver_failures += failed[i];
    }
    // divide once so a rate is exactly k / trials
    for (auto& t : out.tables)
    {
        t.rates /= static_cast<double>(grid.trials);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

namespace
{

std::string file_stem(const std::string& name)
{
    std::string s;
    for (const char c : name)
    {
        s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return s.empty() ? std::string("arm") : s;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path);
    if (!os)
    {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    os << text;
    if (!os)
    {
        throw std::runtime_error("write to " + path.string() + " failed");
    }
}

} // namespace

std::vector<std::string> emit_plotdata(const PhaseResult& result, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    for (std::size_t a = 0; a < result.tables.size(); ++a)
    {
        const std::string stem = "rates_" + file_stem(a < result.grid.arms.size() ? result.grid.arms[a].name
                                                                                   : std::to_string(a));
        std::ostringstream csv;
        result.tables[a].write_csv(csv);
        const fs::path csv_path = fs::path(dir) / (stem + ".csv");
        write_file(csv_path, csv.str());
        written.push_back(csv_path.string());

        std::ostringstream gp;
        gp << "# success-rate heatmap, black = 0, white = 1\n"
           << "set datafile separator ','\n"
           << "set terminal pngcairo size 640,480\n"
           << "set output '" << stem << ".png'\n"
           << "set palette gray\n"
           << "set cbrange [0:1]\n"
           << "set xlabel 'N_s'\n"
           << "set ylabel 'r'\n"
           << "set title '" << stem << "'\n"
           << "plot '" << stem << ".csv' matrix rowheaders columnheaders with image notitle\n";
        const fs::path gp_path = fs::path(dir) / (stem + ".gp");
        write_file(gp_path, gp.str());
        written.push_back(gp_path.string());
    }
    return written;
}

void write_pseudospectrum_csv(const Pseudospectrum& spectrum, std::ostream& os)
{
    const std::size_t d = spectrum.axes.size();
    for (std::size_t i = 0; i < d; ++i)
    {
        os << (i ? "," : "") << 'f' << (i + 1);
    }
    os << (d ? "," : "") << "P\n";
    std::vector<std::size_t> idx(d, 0);
    for (const double v : spectrum.values)
    {
        for (std::size_t i = 0; i < d; ++i)
        {
            os << format_number(spectrum.axes[i][idx[i]]) << ',';
        }
        os << format_number(v) << '\n';
        // advance the multi-index, last dimension fastest
        for (std::size_t i = d; i-- > 0;)
        {
            if (++idx[i] < spectrum.axes[i].size())
            {
                break;
            }
            idx[i] = 0;
        }
    }
}

} // namespace fsan
