#pragma once

// Serialization: JSON codecs for forms, phase points, run configs and check
// reports; CSV emitters with fixed 17-significant-digit formatting; a
// deterministic SVG frame writer for boundary curves. Everything here is
// byte-reproducible: no timestamps, no locale dependence, fixed field order.

#include "fbdp/dualpair.hpp"
#include "fbdp/euler.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace fbdp {

// %.17g, the round-trip-exact text form used in every CSV cell.
std::string format_double(double x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Parses with a SchemaError on malformed JSON, IoError on unreadable files.
nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// { "degree": k, "values": [...] }; values in canonical simplex order.
nlohmann::json form_to_json(const DiscreteForm& f);
DiscreteForm form_from_json(const Mesh& mesh, const nlohmann::json& j);

// { "positions": [[x,y],...], "alpha": [[ax,ay],...] }. Loading gates the
// volume constraint and normalizes the covector gauge (idempotent, so a
// saved point reloads to itself).
nlohmann::json phase_to_json(const PhasePoint& z);
PhasePoint phase_from_json(MeshPtr mesh, const nlohmann::json& j);

// Dense debug layout: { "rows": r, "cols": c, "data": [...] } row-major.
nlohmann::json matrix_to_json(const MatX& a);
MatX matrix_from_json(const nlohmann::json& j);

// Reads a V x 2 per-vertex field stored under `key` as [[x,y],...].
MatX vertex_field_from_json(const Mesh& mesh, const nlohmann::json& j, const char* key);

nlohmann::json report_to_json(const DualPairReport& r);
std::string report_csv_header();
std::string report_csv_row(int index, const DualPairReport& r);

nlohmann::json witness_to_json(const WitnessReport& w);
nlohmann::json split_to_json(const ConnectionSplit& s, const MatX& tangent_part,
                             bool projected);

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

// Simulation run description:
// { "mesh": path, "tau": t, "dt": dt, "steps": N, "volume_correction": bool,
//   "initial_velocity": { "kind": "zero" }
//                     | { "kind": "rotation", "omega": w, "center": [x,y] }
//                     | { "kind": "stream", "family": "poly"|"trig",
//                         "a": a, "b": b, "sin_x": bool, "sin_y": bool,
//                         "scale": s } }
struct RunConfig {
    std::string mesh_path;
    double tau = 0.0;
    double dt = 0.0;
    int steps = 0;
    bool volume_correction = false;
    nlohmann::json initial_velocity;
};
RunConfig runconfig_from_json(const nlohmann::json& j);
MatX initial_velocity_field(const Mesh& mesh, const MatX& positions,
                            const nlohmann::json& spec);

// One closed polyline per boundary loop in a frame fitted to the positions,
// caption under the drawing. A plot artifact: stable output, no metadata.
std::string boundary_svg(const Mesh& mesh, const MatX& positions,
                         const std::string& caption);

} // namespace fbdp
