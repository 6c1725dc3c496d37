#include <fsan/serialize.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fsan::io
{

namespace
{

void require(bool ok, const std::string& what)
{
    if (!ok)
    {
        throw std::invalid_argument("json: " + what);
    }
}

const json& field(const json& j, const char* key)
{
    require(j.is_object() && j.contains(key), std::string("missing field '") + key + "'");
    return j.at(key);
}

std::vector<Complex> complex_list(const json& j)
{
    require(j.is_array(), "expected an array of [re, im] pairs");
    std::vector<Complex> out;
    out.reserve(j.size());
    for (const auto& z : j)
    {
        out.push_back(complex_from_json(z));
    }
    return out;
}

json complex_list(const std::vector<Complex>& v)
{
    json a = json::array();
    for (const auto& z : v)
    {
        a.push_back(to_json(z));
    }
    return a;
}

void check_schema(const json& j)
{
    if (j.contains("schema"))
    {
        require(j.at("schema").get<int>() == kSchemaVersion,
                "unsupported schema version " + j.at("schema").dump());
    }
}

/// Finite doubles as numbers, anything else as null.
json number(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_from(const json& j)
{
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

} // namespace

json to_json(const Complex& z)
{
    return json::array({z.real(), z.imag()});
}

Complex complex_from_json(const json& j)
{
    require(j.is_array() && j.size() == 2, "complex numbers are [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const DimsSpec& dims)
{
    return json(dims.sizes());
}

DimsSpec dims_from_json(const json& j)
{
    require(j.is_array(), "dims must be an array of sizes");
    return DimsSpec(j.get<std::vector<Index>>());
}

json to_json(const FrequencyTuple& f)
{
    return json(f.components());
}

FrequencyTuple tuple_from_json(const json& j)
{
    require(j.is_array(), "a frequency tuple is an array of reals");
    return FrequencyTuple(j.get<std::vector<double>>());
}

json to_json(const SpectralModel& model)
{
    json comps = json::array();
    for (const auto& e : model.entries())
    {
        comps.push_back({{"frequency", to_json(e.frequency)}, {"gain", to_json(e.gain)}});
    }
    return {{"components", comps}};
}

SpectralModel model_from_json(const json& j)
{
    std::vector<SpectralComponent> entries;
    for (const auto& c : field(j, "components"))
    {
        entries.push_back({tuple_from_json(field(c, "frequency")), complex_from_json(field(c, "gain"))});
    }
    return SpectralModel(std::move(entries));
}

json to_json(const ObservationMask& mask)
{
    return {{"dims", to_json(mask.dims())},
            {"indices", mask.indices()},
            {"weights", complex_list(mask.weights())}};
}

ObservationMask mask_from_json(const json& j)
{
    const DimsSpec dims = dims_from_json(field(j, "dims"));
    auto indices        = field(j, "indices").get<std::vector<Index>>();
    if (j.contains("weights"))
    {
        return ObservationMask(dims, std::move(indices), complex_list(j.at("weights")));
    }
    return ObservationMask(dims, std::move(indices));
}

json to_json(const Observation& y)
{
    return {{"mask", to_json(y.mask)}, {"values", complex_list(y.values)}};
}

Observation observation_from_json(const json& j)
{
    Observation y{mask_from_json(field(j, "mask")), complex_list(field(j, "values"))};
    require(static_cast<Index>(y.values.size()) == y.mask.count(),
            "observation has " + std::to_string(y.values.size()) + " values for " +
                std::to_string(y.mask.count()) + " indices");
    return y;
}

json to_json(const FrequencyBand& band)
{
    if (band.is_full())
    {
        return nullptr;
    }
    return {{"f_L", band.f_low()}, {"f_H", band.f_high()}};
}

FrequencyBand band_from_json(const json& j)
{
    if (j.is_null())
    {
        return FrequencyBand::full();
    }
    return FrequencyBand(field(j, "f_L").get<double>(), field(j, "f_H").get<double>());
}

json to_json(const BandSystem& bands)
{
    json dims = json::array();
    for (const auto& list : bands.all())
    {
        json a = json::array();
        for (const auto& b : list)
        {
            a.push_back(to_json(b));
        }
        dims.push_back(a);
    }
    return dims;
}

BandSystem bands_from_json(const json& j)
{
    require(j.is_array(), "a band system is one list of bands per dimension");
    std::vector<std::vector<FrequencyBand>> all;
    bool single = true;
    for (const auto& list : j)
    {
        std::vector<FrequencyBand> dim;
        if (list.is_array())
        {
            for (const auto& b : list)
            {
                dim.push_back(band_from_json(b));
            }
        }
        else
        {
            // shorthand: a bare band (or null) for the dimension
            dim.push_back(band_from_json(list));
        }
        single = single && dim.size() == 1;
        all.push_back(std::move(dim));
    }
    if (single)
    {
        std::vector<FrequencyBand> flat;
        for (auto& d : all)
        {
            flat.push_back(d.front());
        }
        return BandSystem(std::move(flat));
    }
    return BandSystem(std::move(all));
}

json to_json(const HalfSpectrumTensor& b)
{
    json values = json::array();
    for (Index k = 0; k < b.size(); ++k)
    {
        values.push_back(to_json(b.values()(k)));
    }
    return {{"dims", to_json(b.dims())}, {"values", values}};
}

HalfSpectrumTensor tensor_from_json(const json& j)
{
    const DimsSpec dims = dims_from_json(field(j, "dims"));
    const auto vals     = complex_list(field(j, "values"));
    CVector v(static_cast<Index>(vals.size()));
    for (std::size_t k = 0; k < vals.size(); ++k)
    {
        v(static_cast<Index>(k)) = vals[k];
    }
    return HalfSpectrumTensor(dims, std::move(v));
}

json to_json(const CVector& v)
{
    json a = json::array();
    for (Index k = 0; k < v.size(); ++k)
    {
        a.push_back(to_json(v(k)));
    }
    return a;
}

CVector cvector_from_json(const json& j)
{
    const auto vals = complex_list(j);
    CVector v(static_cast<Index>(vals.size()));
    for (std::size_t k = 0; k < vals.size(); ++k)
    {
        v(static_cast<Index>(k)) = vals[k];
    }
    return v;
}

json to_json(const SolverOptions& o)
{
    return {{"backend", to_string(o.backend)},
            {"eps_abs", o.eps_abs},
            {"eps_rel", o.eps_rel},
            {"max_iter", o.max_iter},
            {"ipm_max_iter", o.ipm_max_iter},
            {"ipm_tol", o.ipm_tol},
            {"rho", o.rho},
            {"adaptive_rho", o.adaptive_rho},
            {"adapt_ratio", o.adapt_ratio},
            {"adapt_interval", o.adapt_interval},
            {"relaxation", o.relaxation}};
}

SolverOptions solver_options_from_json(const json& j, SolverOptions o)
{
    require(j.is_object(), "solver options must be an object");
    if (j.contains("backend"))
    {
        o.backend = solver_backend_from_string(j.at("backend").get<std::string>());
    }
    o.eps_abs        = j.value("eps_abs", o.eps_abs);
    o.eps_rel        = j.value("eps_rel", o.eps_rel);
    o.max_iter       = j.value("max_iter", o.max_iter);
    o.ipm_max_iter   = j.value("ipm_max_iter", o.ipm_max_iter);
    o.ipm_tol        = j.value("ipm_tol", o.ipm_tol);
    o.rho            = j.value("rho", o.rho);
    o.adaptive_rho   = j.value("adaptive_rho", o.adaptive_rho);
    o.adapt_ratio    = j.value("adapt_ratio", o.adapt_ratio);
    o.adapt_interval = j.value("adapt_interval", o.adapt_interval);
    o.relaxation     = j.value("relaxation", o.relaxation);
    o.validate();
    return o;
}

json to_json(const SolverDiagnostics& d)
{
    return {{"iterations", d.iterations},
            {"primal_residual", number(d.primal_residual)},
            {"dual_residual", number(d.dual_residual)},
            {"gap", number(d.gap)},
            {"rho", number(d.rho)},
            {"status", to_string(d.status)},
            {"seconds", d.seconds},
            {"rank_t", d.rank_t},
            {"rank_condition", d.rank_condition}};
}

SolverDiagnostics diagnostics_from_json(const json& j)
{
    SolverDiagnostics d;
    d.iterations      = field(j, "iterations").get<int>();
    d.primal_residual = number_from(field(j, "primal_residual"));
    d.dual_residual   = number_from(field(j, "dual_residual"));
    d.gap             = j.contains("gap") ? number_from(j.at("gap")) : 0.0;
    d.rho             = j.contains("rho") ? number_from(j.at("rho")) : 0.0;
    d.status          = solve_status_from_string(field(j, "status").get<std::string>());
    d.seconds         = j.value("seconds", 0.0);
    d.rank_t          = j.value("rank_t", Index{0});
    d.rank_condition  = j.value("rank_condition", false);
    return d;
}

json to_json(const SDPInstance& inst)
{
    return {{"schema", kSchemaVersion},
            {"dims", to_json(inst.dims)},
            {"bands", inst.bands ? to_json(*inst.bands) : json(nullptr)},
            {"observation", to_json(inst.observation)}};
}

SDPInstance instance_from_json(const json& j)
{
    check_schema(j);
    const DimsSpec dims = dims_from_json(field(j, "dims"));
    std::optional<BandSystem> bands;
    if (j.contains("bands") && !j.at("bands").is_null())
    {
        bands = bands_from_json(j.at("bands"));
    }
    return assemble(observation_from_json(field(j, "observation")), dims, std::move(bands));
}

json to_json(const SDPSolution& sol)
{
    return {{"schema", kSchemaVersion},
            {"x_hat", to_json(sol.x_hat)},
            {"b_hat", to_json(sol.b_hat)},
            {"t_hat", sol.t_hat},
            {"objective", sol.objective},
            {"diagnostics", to_json(sol.diagnostics)}};
}

SDPSolution solution_from_json(const json& j)
{
    check_schema(j);
    SDPSolution sol;
    sol.x_hat       = cvector_from_json(field(j, "x_hat"));
    sol.b_hat       = tensor_from_json(field(j, "b_hat"));
    sol.t_hat       = field(j, "t_hat").get<double>();
    sol.objective   = field(j, "objective").get<double>();
    sol.diagnostics = diagnostics_from_json(field(j, "diagnostics"));
    return sol;
}

json to_json(const RetrievalResult& r)
{
    return {{"model", to_json(r.model)},
            {"refinement_residual", r.refinement_residual},
            {"order", r.order},
            {"source", r.source == RetrievalSource::FromT ? "T" : "x"},
            {"degraded", r.degraded},
            {"ill_conditioned", r.ill_conditioned}};
}

json to_json(const MusicOptions& o)
{
    return {{"grid_factor", o.grid_factor},
            {"refine_rounds", o.refine_rounds},
            {"shrink", o.shrink},
            {"polish_iterations", o.polish_iterations},
            {"order_rel_tol", o.order_rel_tol}};
}

MusicOptions music_options_from_json(const json& j, MusicOptions o)
{
    require(j.is_object(), "music options must be an object");
    o.grid_factor       = j.value("grid_factor", o.grid_factor);
    o.refine_rounds     = j.value("refine_rounds", o.refine_rounds);
    o.shrink            = j.value("shrink", o.shrink);
    o.polish_iterations = j.value("polish_iterations", o.polish_iterations);
    o.order_rel_tol     = j.value("order_rel_tol", o.order_rel_tol);
    return o;
}

namespace
{

json prior_to_json(const std::optional<BandSystem>& bands)
{
    if (!bands)
    {
        return "none";
    }
    if (*bands == BandSystem::accurate_prior())
    {
        return "accurate";
    }
    if (*bands == BandSystem::rough_prior())
    {
        return "rough";
    }
    return to_json(*bands);
}

std::optional<BandSystem> prior_from_json(const json& j)
{
    if (j.is_null())
    {
        return std::nullopt;
    }
    if (j.is_string())
    {
        const auto s = j.get<std::string>();
        if (s == "none")
        {
            return std::nullopt;
        }
        if (s == "accurate")
        {
            return BandSystem::accurate_prior();
        }
        if (s == "rough")
        {
            return BandSystem::rough_prior();
        }
        throw std::invalid_argument("json: unknown prior '" + s + "'");
    }
    return bands_from_json(j);
}

} // namespace

json to_json(const TrialConfig& c)
{
    json region = json::array();
    for (const auto& iv : c.region)
    {
        region.push_back(json::array({iv.lo, iv.hi}));
    }
    json j = {{"schema", kSchemaVersion},
              {"dims", to_json(c.dims)},
              {"bands", prior_to_json(c.bands)},
              {"r", c.r},
              {"ns", c.ns},
              {"region", region},
              {"seed", c.seed},
              {"threshold", c.threshold},
              {"min_separation", c.min_separation},
              {"frequency_tol", c.frequency_tol},
              {"solver", to_json(c.solver)},
              {"music", to_json(c.music)}};
    if (c.frequencies)
    {
        json f = json::array();
        for (const auto& t : *c.frequencies)
        {
            f.push_back(to_json(t));
        }
        j["frequencies"] = f;
    }
    return j;
}

TrialConfig trial_config_from_json(const json& j, TrialConfig c)
{
    require(j.is_object(), "trial config must be an object");
    check_schema(j);
    if (j.contains("dims"))
    {
        c.dims = dims_from_json(j.at("dims"));
    }
    if (j.contains("bands"))
    {
        c.bands = prior_from_json(j.at("bands"));
    }
    c.r  = j.value("r", c.r);
    c.ns = j.value("ns", c.ns);
    if (j.contains("region"))
    {
        c.region.clear();
        for (const auto& iv : j.at("region"))
        {
            require(iv.is_array() && iv.size() == 2, "region entries are [lo, hi] pairs");
            c.region.push_back({iv[0].get<double>(), iv[1].get<double>()});
        }
    }
    if (j.contains("frequencies"))
    {
        if (j.at("frequencies").is_null())
        {
            c.frequencies.reset();
        }
        else
        {
            std::vector<FrequencyTuple> f;
            for (const auto& t : j.at("frequencies"))
            {
                f.push_back(tuple_from_json(t));
            }
            c.r           = static_cast<Index>(f.size());
            c.frequencies = std::move(f);
        }
    }
    c.seed           = j.value("seed", c.seed);
    c.threshold      = j.value("threshold", c.threshold);
    c.min_separation = j.value("min_separation", c.min_separation);
    c.frequency_tol  = j.value("frequency_tol", c.frequency_tol);
    if (j.contains("solver"))
    {
        c.solver = solver_options_from_json(j.at("solver"), c.solver);
    }
    if (j.contains("music"))
    {
        c.music = music_options_from_json(j.at("music"), c.music);
    }
    c.validate();
    return c;
}

json to_json(const TrialResult& r)
{
    json errs = json::array();
    for (const double e : r.frequency_errors)
    {
        errs.push_back(number(e));
    }
    json j = {{"mode", to_string(r.mode)},
              {"seed", r.seed},
              {"nmse", number(r.nmse)},
              {"success", r.success},
              {"frequency_errors", errs},
              {"frequencies_ok", r.frequencies_ok},
              {"seconds", r.seconds},
              {"objective", r.objective},
              {"diagnostics", to_json(r.diagnostics)},
              {"solver_failed", r.solver_failed},
              {"retrieval_failed", r.retrieval_failed},
              {"truth", to_json(r.truth)},
              {"estimate", to_json(r.estimate)}};
    if (!r.error.empty())
    {
        j["error"] = r.error;
    }
    return j;
}

json to_json(const PhaseGrid& g)
{
    json arms = json::array();
    for (const auto& a : g.arms)
    {
        arms.push_back({{"name", a.name}, {"mode", to_string(a.mode)}, {"bands", prior_to_json(a.bands)}});
    }
    json base = to_json(g.base);
    base.erase("schema");
    return {{"schema", kSchemaVersion},
            {"ns", g.ns_values},
            {"r", g.r_values},
            {"trials", g.trials},
            {"base_seed", g.base_seed},
            {"base", base},
            {"arms", arms}};
}

PhaseGrid phase_grid_from_json(const json& j, PhaseGrid g)
{
    require(j.is_object(), "phase grid must be an object");
    check_schema(j);
    if (j.contains("ns"))
    {
        g.ns_values = j.at("ns").get<std::vector<Index>>();
    }
    if (j.contains("r"))
    {
        g.r_values = j.at("r").get<std::vector<Index>>();
    }
    g.trials    = j.value("trials", g.trials);
    g.base_seed = j.value("base_seed", g.base_seed);
    if (j.contains("base"))
    {
        // r and Ns are overridden per cell; validate with harmless values
        json base = j.at("base");
        base.erase("frequencies");
        g.base = trial_config_from_json(base, g.base);
    }
    if (j.contains("arms"))
    {
        g.arms.clear();
        for (const auto& a : j.at("arms"))
        {
            g.arms.push_back({field(a, "name").get<std::string>(),
                              trial_mode_from_string(a.value("mode", std::string("fs"))),
                              a.contains("bands") ? prior_from_json(a.at("bands")) : std::nullopt});
        }
    }
    g.validate();
    return g;
}

json to_json(const PhaseResult& r)
{
    json tables = json::array();
    for (std::size_t a = 0; a < r.tables.size(); ++a)
    {
        const auto& t = r.tables[a];
        json rows     = json::array();
        for (Index i = 0; i < t.rates.rows(); ++i)
        {
            json row = json::array();
            for (Index k = 0; k < t.rates.cols(); ++k)
            {
                row.push_back(t.rates(i, k));
            }
            rows.push_back(row);
        }
        tables.push_back({{"arm", a < r.grid.arms.size() ? r.grid.arms[a].name : std::to_string(a)},
                          {"mean", t.mean()},
                          {"rates", rows}});
    }
    return {{"schema", kSchemaVersion},
            {"grid", to_json(r.grid)},
            {"tables", tables},
            {"solver_failures", r.solver_failures},
            {"seconds", r.seconds}};
}

json read_json_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
    {
        throw std::runtime_error("cannot open " + path);
    }
    try
    {
        return json::parse(is);
    }
    catch (const json::parse_error& e)
    {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j)
{
    std::ofstream os(path);
    if (!os)
    {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    os << j.dump(2) << '\n';
    if (!os)
    {
        throw std::runtime_error("write to " + path + " failed");
    }
}

namespace
{

template <class T>
T to_little(T v)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <class T>
void put(std::ostream& os, T v)
{
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is)
    {
        throw std::runtime_error("FSB1: truncated input");
    }
    return to_little(v);
}

} // namespace

void write_fsb1(std::ostream& os, const HalfSpectrumTensor& b)
{
    os.write("FSB1", 4);
    const auto& sizes = b.dims().sizes();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(sizes.size()));
    for (const Index n : sizes)
    {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(n));
    }
    for (Index k = 0; k < b.size(); ++k)
    {
        put<double>(os, b.values()(k).real());
        put<double>(os, b.values()(k).imag());
    }
    if (!os)
    {
        throw std::runtime_error("FSB1: write failed");
    }
}

HalfSpectrumTensor read_fsb1(std::istream& is)
{
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FSB1", 4) != 0)
    {
        throw std::runtime_error("FSB1: bad magic");
    }
    const auto d = get<std::uint32_t>(is);
    if (d == 0 || d > 16)
    {
        throw std::runtime_error("FSB1: implausible dimension count " + std::to_string(d));
    }
    std::vector<Index> sizes;
    for (std::uint32_t i = 0; i < d; ++i)
    {
        sizes.push_back(static_cast<Index>(get<std::uint32_t>(is)));
    }
    HalfSpectrumTensor b{DimsSpec(sizes)};
    for (Index k = 0; k < b.size(); ++k)
    {
        const double re = get<double>(is);
        const double im = get<double>(is);
        b.values()(k)   = Complex(re, im);
    }
    return b;
}

} // namespace fsan::io
