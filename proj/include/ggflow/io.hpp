#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggflow/evolution.hpp"
#include "ggflow/functionals.hpp"
#include "ggflow/graph_core.hpp"
#include "ggflow/jko.hpp"
#include "ggflow/ldp.hpp"
#include "ggflow/potentials.hpp"

namespace ggflow::io {

using nlohmann::json;

json to_json(const Vector& v);
json to_json(const Matrix& m);
Vector vector_from_json(const json& j, const std::string& field);
Matrix matrix_from_json(const json& j, const std::string& field);

/// {"pi": [...], "kappa": [[...]]}
json system_to_json(const GraphSystem& sys);
/// Re-validates detailed balance.
GraphSystem system_from_json(const json& j);

/// {"family": "...", "params": {...}}
json spec_to_json(const DissipationSpec& spec);
DissipationSpec spec_from_json(const json& j);
json entropy_to_json(const EntropySpec& e);
EntropySpec entropy_from_json(const json& j);

json edb_to_json(const EDBReport& r);

/// Writes through a temporary file in the same directory followed by a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

/// t, state_index, u
std::string states_csv(const std::vector<double>& times, const std::vector<Measure>& states);
/// t, i, j, w with t the interval midpoint and w = 2 j / theta (edges with theta > 0 only).
std::string flux_csv(const GraphSystem& sys, const CurveWithFlux& curve);
/// t, i, j, u_i, u_j, w, upsilon, d_phi, b_phi
std::string edge_diagnostics_csv(const std::vector<EdgeDiagnostic>& rows);
/// n, t, W_value, energy, slope_sample where slope_sample = (E_{n-1} - E_n) / tau_n.
std::string mm_csv(const MMRun& run);
/// t, particle, from, to
std::string events_csv(const ParticleEnsemble& ens);

}  // namespace ggflow::io
