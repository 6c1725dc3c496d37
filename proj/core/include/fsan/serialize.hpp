#ifndef FSAN_SERIALIZE_HPP
#define FSAN_SERIALIZE_HPP

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include <fsan/bands.hpp>
#include <fsan/experiments.hpp>
#include <fsan/model.hpp>
#include <fsan/music.hpp>
#include <fsan/sdp.hpp>
#include <fsan/toeplitz.hpp>

///
/// JSON and binary persistence.
///
/// Conventions shared by every document:
///  - complex numbers are [re, im] pairs;
///  - grids are {"dims": [N_1, ..., N_d]};
///  - frequency tuples are arrays of d reals in [0, 1);
///  - a band is {"f_L": ..., "f_H": ...}, the full circle is null, and a
///    band system is one list of bands per dimension;
///  - top-level config documents carry "schema": 1.
///
namespace fsan::io
{

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json to_json(const Complex& z);
Complex complex_from_json(const json& j);

json to_json(const DimsSpec& dims);
DimsSpec dims_from_json(const json& j);

json to_json(const FrequencyTuple& f);
FrequencyTuple tuple_from_json(const json& j);

/// {"components": [{"frequency": [...], "gain": [re, im]}, ...]}
json to_json(const SpectralModel& model);
SpectralModel model_from_json(const json& j);

/// {"dims": [...], "indices": [sorted], "weights": [[re, im], ...]}
json to_json(const ObservationMask& mask);
ObservationMask mask_from_json(const json& j);

/// {"mask": {...}, "values": [[re, im], ...]}
json to_json(const Observation& y);
Observation observation_from_json(const json& j);

json to_json(const FrequencyBand& band);
FrequencyBand band_from_json(const json& j);

/// [[band, ...] per dimension]
json to_json(const BandSystem& bands);
BandSystem bands_from_json(const json& j);

/// {"dims": [...], "values": [[re, im], ...]} in the tensor's flat layout
/// (row-major over shifted lags, dimension 1 outermost).
json to_json(const HalfSpectrumTensor& b);
HalfSpectrumTensor tensor_from_json(const json& j);

json to_json(const CVector& v);
CVector cvector_from_json(const json& j);

json to_json(const SolverOptions& o);
/// Missing keys keep their defaults.
SolverOptions solver_options_from_json(const json& j, SolverOptions base = {});

json to_json(const SolverDiagnostics& d);
SolverDiagnostics diagnostics_from_json(const json& j);

/// {"schema": 1, "dims", "bands" (null in baseline mode), "observation"}
json to_json(const SDPInstance& inst);
SDPInstance instance_from_json(const json& j);

json to_json(const SDPSolution& sol);
SDPSolution solution_from_json(const json& j);

json to_json(const RetrievalResult& r);

json to_json(const MusicOptions& o);
MusicOptions music_options_from_json(const json& j, MusicOptions base = {});

/// "bands" accepts "accurate", "rough", "none" or an explicit band system.
json to_json(const TrialConfig& c);
TrialConfig trial_config_from_json(const json& j, TrialConfig base = {});

json to_json(const TrialResult& r);

json to_json(const PhaseGrid& g);
PhaseGrid phase_grid_from_json(const json& j, PhaseGrid base = PhaseGrid::desk_scale());

json to_json(const PhaseResult& r);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

///
/// Little-endian binary dump of a coefficient tensor:
///   bytes 0..3   "FSB1"
///   u32          d
///   u32 x d      N_1 .. N_d (grid sizes; the tensor has prod(2 N_i - 1) slots)
///   f64 x 2M     re, im of every slot in flat order
///
void write_fsb1(std::ostream& os, const HalfSpectrumTensor& b);
HalfSpectrumTensor read_fsb1(std::istream& is);

} // namespace fsan::io

#endif // FSAN_SERIALIZE_HPP
