#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "config.hpp"
#include "discretization.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "solver.hpp"
#include "time_loop.hpp"

namespace chho {

inline constexpr const char* version = "0.1.0";

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw OutputError("cannot write '" + path + "'");
    return out;
}

inline void check_written(std::ostream& out, const std::string& path)
{
    out.flush();
    if (!out)
        throw OutputError("write failed for '" + path + "'");
}

inline void write_cell_scalars(std::ostream& out, const char* name, const Eigen::VectorXd& values)
{
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < values.size(); ++i)
        out << format_double(values[i]) << "\n";
}

} // namespace detail

/// Cell averages of the broken polynomial field `v`.
inline Eigen::VectorXd cell_means(const Discretization& disc, const Eigen::VectorXd& v)
{
    const GeometryCache& geo = disc.geometry();
    Eigen::VectorXd m(static_cast<Eigen::Index>(disc.num_elements()));
    for (std::size_t t = 0; t < disc.num_elements(); ++t)
        m[static_cast<Eigen::Index>(t)] =
            disc.cell_block(disc.cell_integrals(), t).dot(disc.cell_block(v, t)) / geo.element(t).area;
    return m;
}

/// Legacy ASCII VTK unstructured grid: one POLYGON cell per element, cell
/// data "order_parameter" and "chemical_potential" (cell means).
inline void write_vtk_snapshot_stream(const Mesh& mesh, const Discretization& disc, const SolverState& state,
                                      std::ostream& out)
{
    if (!state.c.allFinite() || !state.w.allFinite())
        throw OutputError("snapshot at step " + std::to_string(state.step) + ": non-finite field values");
    out << "# vtk DataFile Version 3.0\n";
    out << "order parameter step " << state.step << " time " << format_double(state.time) << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Point& p : mesh.vertices())
        out << format_double(p.x()) << ' ' << format_double(p.y()) << " 0\n";
    std::size_t total = 0;
    for (std::size_t t = 0; t < mesh.num_elements(); ++t)
        total += mesh.element(t).size() + 1;
    out << "CELLS " << mesh.num_elements() << ' ' << total << "\n";
    for (std::size_t t = 0; t < mesh.num_elements(); ++t) {
        out << mesh.element(t).size();
        for (auto v : mesh.element(t))
            out << ' ' << v;
        out << "\n";
    }
    out << "CELL_TYPES " << mesh.num_elements() << "\n";
    for (std::size_t t = 0; t < mesh.num_elements(); ++t)
        out << "7\n";
    out << "CELL_DATA " << mesh.num_elements() << "\n";
    detail::write_cell_scalars(out, "order_parameter", cell_means(disc, state.c));
    detail::write_cell_scalars(out, "chemical_potential", cell_means(disc, state.w));
}

inline void write_vtk_snapshot(const Mesh& mesh, const Discretization& disc, const SolverState& state,
                               const std::string& path)
{
    auto out = detail::open_output(path);
    write_vtk_snapshot_stream(mesh, disc, state, out);
    detail::check_written(out, path);
}

/// High-order variant: the centroid-fan sub-triangulation with unshared
/// vertices and point data sampling the cell polynomials.
inline void write_vtk_high_order_stream(const Discretization& disc, const SolverState& state, std::ostream& out)
{
    const GeometryCache& geo = disc.geometry();
    std::size_t ntri = 0;
    for (std::size_t t = 0; t < geo.num_elements(); ++t)
        ntri += geo.element(t).triangles.size();
    out << "# vtk DataFile Version 3.0\n";
    out << "order parameter (high order) step " << state.step << " time " << format_double(state.time) << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << 3 * ntri << " double\n";
    std::ostringstream c_vals, w_vals;
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const auto& basis = disc.cell_basis(t);
        for (const Triangle& tri : geo.element(t).triangles)
            for (const Point& p : tri) {
                out << format_double(p.x()) << ' ' << format_double(p.y()) << " 0\n";
                c_vals << format_double(basis.eval(disc.cell_block(state.c, t), p)) << "\n";
                w_vals << format_double(basis.eval(disc.cell_block(state.w, t), p)) << "\n";
            }
    }
    out << "CELLS " << ntri << ' ' << 4 * ntri << "\n";
    for (std::size_t i = 0; i < ntri; ++i)
        out << "3 " << 3 * i << ' ' << 3 * i + 1 << ' ' << 3 * i + 2 << "\n";
    out << "CELL_TYPES " << ntri << "\n";
    for (std::size_t i = 0; i < ntri; ++i)
        out << "5\n";
    out << "POINT_DATA " << 3 * ntri << "\n";
    out << "SCALARS order_parameter double 1\nLOOKUP_TABLE default\n" << c_vals.str();
    out << "SCALARS chemical_potential double 1\nLOOKUP_TABLE default\n" << w_vals.str();
}

inline void write_vtk_high_order(const Discretization& disc, const SolverState& state, const std::string& path)
{
    auto out = detail::open_output(path);
    write_vtk_high_order_stream(disc, state, out);
    detail::check_written(out, path);
}

// CSV -------------------------------------------------------------------------

inline constexpr const char* timeseries_header = "time,mass,energy,newton_iters,residual";

/// One row per time step; the initial record (first in the series) is the
/// reference state and is not a step, so it is left out.
inline void write_timeseries_csv_stream(const DiagnosticsSeries& series, std::ostream& out)
{
    out << timeseries_header << "\n";
    for (std::size_t i = 1; i < series.steps.size(); ++i) {
        const StepRecord& s = series.steps[i];
        out << format_double(s.time) << ',' << format_double(s.mass) << ',' << format_double(s.energy) << ','
            << s.newton_iterations << ',' << format_double(s.residual) << "\n";
    }
}

inline void write_timeseries_csv(const DiagnosticsSeries& series, const std::string& path)
{
    auto out = detail::open_output(path);
    write_timeseries_csv_stream(series, out);
    detail::check_written(out, path);
}

// Manifest ----------------------------------------------------------------------

struct RunManifest {
    SimulationConfig config;
    std::string mesh_provenance;
    std::string code_version = version;
    std::uint64_t seed = 0;
    std::string started;    ///< UTC, ISO 8601
    std::string finished;
    double wall_seconds = 0.0;

    /// Hash of the resolved config and mesh provenance; names the run directory.
    std::string hash() const
    {
        const std::string key = serialize_config(config) + "\n" + mesh_provenance;
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char ch : key) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

inline std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json to_json(const RunManifest& m)
{
    return {{"config", serialize_config(m.config)},
            {"mesh", m.mesh_provenance},
            {"version", m.code_version},
            {"seed", m.seed},
            {"started", m.started},
            {"finished", m.finished},
            {"wall_seconds", m.wall_seconds},
            {"hash", m.hash()}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j)
{
    RunManifest m;
    try {
        m.config = parse_config_string(j.at("config").get<std::string>(), "manifest config");
        m.mesh_provenance = j.at("mesh").get<std::string>();
        m.code_version = j.value("version", std::string());
        m.seed = j.value("seed", std::uint64_t{0});
        m.started = j.value("started", std::string());
        m.finished = j.value("finished", std::string());
        m.wall_seconds = j.value("wall_seconds", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

inline void write_manifest(const RunManifest& m, const std::string& path)
{
    auto out = detail::open_output(path);
    out << to_json(m).dump(2) << "\n";
    detail::check_written(out, path);
}

inline RunManifest read_manifest(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open manifest '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return manifest_from_json(j);
}

/// Sidecar describing one snapshot file.
inline nlohmann::json snapshot_sidecar(const SolverState& s, const FieldRange& c_range, const std::string& vtk_file)
{
    return {{"step", s.step},
            {"time", s.time},
            {"file", vtk_file},
            {"c_min", c_range.min},
            {"c_max", c_range.max},
            {"lambda", s.lambda},
            {"newton_iterations", s.newton_iterations()}};
}

/// Output root: $CHHO_OUTPUT_ROOT if set, else "runs".
inline std::filesystem::path output_root()
{
    if (const char* env = std::getenv("CHHO_OUTPUT_ROOT"); env && *env)
        return env;
    return "runs";
}

/// Run directory: the configured one, or <root>/<name>-<hash>.
inline std::filesystem::path run_directory(const RunManifest& m)
{
    if (!m.config.output.directory.empty()) {
        const std::filesystem::path p = m.config.output.directory;
        return p.is_absolute() ? p : output_root() / p;
    }
    return output_root() / (m.config.name + "-" + m.hash());
}

} // namespace chho
