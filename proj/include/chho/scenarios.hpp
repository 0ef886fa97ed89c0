#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "config.hpp"
#include "diagnostics.hpp"
#include "discretization.hpp"
#include "geometry.hpp"
#include "initial_condition.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "solver.hpp"
#include "time_loop.hpp"

namespace chho {

// Mesh ----------------------------------------------------------------------

/// Looks for a mesh file as given, then under the data directory compiled
/// into the build (if any).
inline std::string resolve_data_path(const std::string& path)
{
    namespace fs = std::filesystem;
    if (fs::exists(path))
        return path;
#ifdef CHHO_DATA_DIR
    {
        const fs::path p = fs::path(CHHO_DATA_DIR) / path;
        if (fs::exists(p))
            return p.string();
    }
#endif
    throw MeshError("mesh file '" + path + "' not found");
}

inline Mesh load_mesh(const MeshSpec& spec)
{
    switch (spec.kind) {
    case MeshKind::cartesian: return generate_cartesian_mesh(spec.nx, spec.ny, spec.domain);
    case MeshKind::triangular: return generate_triangular_mesh(spec.nx, spec.ny, spec.domain);
    case MeshKind::file: return read_polygonal_mesh(resolve_data_path(spec.path));
    }
    throw MeshError("unknown mesh kind");
}

/// Generator parameters, or path and content hash for file meshes.
inline std::string mesh_provenance(const MeshSpec& spec)
{
    if (spec.kind == MeshKind::file) {
        const std::string p = resolve_data_path(spec.path);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(file_hash(p)));
        return "file " + spec.path + " fnv1a64=" + buf;
    }
    return std::string(spec.kind == MeshKind::cartesian ? "cartesian" : "triangular") + " " +
           std::to_string(spec.nx) + "x" + std::to_string(spec.ny) + " [" + format_double(spec.domain.x0) + ", " +
           format_double(spec.domain.x1) + "]x[" + format_double(spec.domain.y0) + ", " +
           format_double(spec.domain.y1) + "]";
}

// Velocity fields -------------------------------------------------------------

inline VelocityField circular_velocity()
{
    VelocityField u;
    u.value = [](const Point& x) {
        return Point(20.0 * x.x() * (x.x() - 1.0) * (2.0 * x.y() - 1.0),
                     -20.0 * x.y() * (x.y() - 1.0) * (2.0 * x.x() - 1.0));
    };
    u.quadrature_degree = 3;
    return u;
}

inline VelocityField vortex_velocity()
{
    VelocityField u;
    u.value = [](const Point& x) {
        const double r = std::hypot(x.x() - 0.5, x.y() - 0.5);
        const double s = 0.5 * (1.0 + std::tanh(80.0 - 200.0 * r));
        return Point(s * (2.0 * x.y() - 1.0), s * (1.0 - 2.0 * x.x()));
    };
    u.polynomial = false;
    u.quadrature_degree = 4;
    return u;
}

inline VelocityField cellular_velocity()
{
    VelocityField u;
    u.value = [](const Point& x) {
        constexpr double pi = std::numbers::pi;
        return Point(std::sin(pi * x.x()) * std::cos(pi * x.y()), -std::cos(pi * x.x()) * std::sin(pi * x.y()));
    };
    u.polynomial = false;
    u.quadrature_degree = 4;
    return u;
}

inline VelocityField make_velocity(const VelocitySpec& spec)
{
    switch (spec.kind) {
    case VelocityKind::zero: return VelocityField::zero();
    case VelocityKind::constant: return VelocityField::constant(Point(spec.ux, spec.uy));
    case VelocityKind::circular: return circular_velocity();
    case VelocityKind::vortex: return vortex_velocity();
    case VelocityKind::cellular: return cellular_velocity();
    }
    return {};
}

// Initial conditions -------------------------------------------------------------

/// c0 = tanh((2 x1 - 1) / (2 sqrt(2) gamma^2)) and its Laplacian.
inline InitialCondition tanh_initial_condition(double gamma, int refinement = 3)
{
    const double a = 2.0 * std::numbers::sqrt2 * gamma * gamma;
    InitialCondition ic;
    ic.value = [a](const Point& x) { return std::tanh((2.0 * x.x() - 1.0) / a); };
    ic.laplacian = [a](const Point& x) {
        const double t = std::tanh((2.0 * x.x() - 1.0) / a);
        return -8.0 / (a * a) * t * (1.0 - t * t);
    };
    ic.quadrature_refinement = refinement;
    return ic;
}

/// Element-wise values: U(-1, 1) (scaled by `amplitude`, shifted by `value`)
/// for elements whose centroid lies in the disc, `outside` elsewhere. The
/// generator is std::mt19937_64 seeded with `seed`, one draw per element in
/// the disc, in element order.
inline InitialCondition random_circle_initial_condition(const GeometryCache& geo, const InitialSpec& spec)
{
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const Point c(spec.center_x, spec.center_y);
    InitialCondition ic;
    ic.element_values.resize(geo.num_elements());
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const bool inside = (geo.element(t).centroid - c).norm() < spec.radius;
        ic.element_values[t] = inside ? spec.value + spec.amplitude * dist(rng) : spec.outside;
    }
    return ic;
}

/// value + amplitude * U(-1, 1) on every element.
inline InitialCondition random_initial_condition(const GeometryCache& geo, const InitialSpec& spec)
{
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    InitialCondition ic;
    ic.element_values.resize(geo.num_elements());
    for (auto& v : ic.element_values)
        v = spec.value + spec.amplitude * dist(rng);
    return ic;
}

inline InitialCondition make_initial_condition(const InitialSpec& spec, const GeometryCache& geo, double gamma)
{
    switch (spec.kind) {
    case InitialKind::tanh: return tanh_initial_condition(gamma, spec.quadrature_refinement);
    case InitialKind::random_circle: return random_circle_initial_condition(geo, spec);
    case InitialKind::random: return random_initial_condition(geo, spec);
    case InitialKind::constant: {
        InitialCondition ic;
        const double v = spec.value;
        ic.value = [v](const Point&) { return v; };
        ic.laplacian = [](const Point&) { return 0.0; };
        ic.quadrature_refinement = 0;
        return ic;
    }
    }
    return {};
}

// Simulation -------------------------------------------------------------------

/// Everything built from a config; the solver refers to the discretization,
/// so the object is not copyable.
struct Simulation {
    SimulationConfig config;
    Mesh mesh;
    std::unique_ptr<Discretization> disc;
    std::unique_ptr<CahnHilliardSolver> solver;
    InitialCondition initial_condition;

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;
    Simulation(Simulation&&) = default;
    Simulation& operator=(Simulation&&) = default;

    explicit Simulation(SimulationConfig cfg) : config(std::move(cfg))
    {
        config.validate();
        mesh = load_mesh(config.mesh);
        disc = std::make_unique<Discretization>(compute_geometry(mesh), config.k, make_velocity(config.velocity),
                                                config.hho);
        solver = std::make_unique<CahnHilliardSolver>(*disc, config.model);
        initial_condition = make_initial_condition(config.initial, disc->geometry(), config.model.gamma);
    }

    const GeometryCache& geometry() const { return disc->geometry(); }
    int num_steps(bool* rounded = nullptr) const { return steps_for(config.t_final, config.model.tau, rounded); }

    /// Step indices matching the configured snapshot times.
    std::vector<int> snapshot_steps() const
    {
        std::vector<int> s;
        for (double t : config.output.snapshot_times)
            s.push_back(static_cast<int>(std::lround(t / config.model.tau)));
        return s;
    }
};

struct RunResult {
    DiagnosticsSeries diagnostics;
    SolverState final_state;
    InitialMode initial_mode = InitialMode::elliptic;
    double h = 0.0;
    double initial_l1 = 0.0;              ///< L1 norm of c_h^0, the mass drift scale
    std::vector<double> rotation;         ///< unwrapped circular-moment angle per step
    std::vector<double> max_gradients;    ///< max |grad c_h| per step
    bool steps_rounded = false;

    double mass_drift() const { return diagnostics.max_relative_mass_drift(initial_l1); }
};

inline double l1_norm(const Discretization& disc, const Eigen::VectorXd& c)
{
    double s = 0.0;
    for (std::size_t t = 0; t < disc.num_elements(); ++t) {
        const TabulatedRule& nl = disc.nonlinear_rule(t);
        s += nl.weights.dot((nl.values * disc.cell_block(c, t)).cwiseAbs());
    }
    return s;
}

/// Hook invoked for every state (initial included), e.g. to write snapshots.
using StateHook = std::function<void(const Simulation&, const SolverState&, const StepRecord&)>;

/// Runs `sim` from its initial condition over `num_steps` (all configured
/// steps when negative).
inline RunResult run_simulation(Simulation& sim, int num_steps = -1, const StateHook& hook = {})
{
    RunResult r;
    const int n = num_steps < 0 ? sim.num_steps(&r.steps_rounded) : num_steps;
    const InitialField f = solve_initial_condition(*sim.disc, sim.initial_condition);
    r.initial_mode = f.mode;
    r.h = sim.geometry().h();
    SolverState s0;
    s0.c = f.c;
    s0.w = initial_chemical_potential(*sim.disc, f.c, sim.config.model.gamma);
    sim.solver->set_mass_target(sim.solver->discrete_mass(f.c));
    r.initial_l1 = l1_norm(*sim.disc, f.c);

    RotationTracker rot(Point(0.5, 0.5));
    auto observer = [&](const SolverState& s, const StepRecord& rec) {
        r.rotation.push_back(rot.update(*sim.disc, s.c));
        r.max_gradients.push_back(max_gradient(*sim.disc, s.c));
        if (hook)
            hook(sim, s, rec);
        return true;
    };
    TimeLoopResult out = run_time_loop(*sim.solver, s0, n, sim.config.newton, observer, sim.snapshot_steps());
    r.diagnostics = std::move(out.diagnostics);
    r.final_state = std::move(out.final_state);
    return r;
}

/// Builds and runs the preset `id` with "section.key=value" overrides.
inline RunResult run_test_case(const std::string& id, const std::vector<std::string>& overrides = {},
                               int num_steps = -1, const StateHook& hook = {})
{
    Simulation sim(resolve_preset(id, overrides));
    return run_simulation(sim, num_steps, hook);
}

// Manufactured solutions ----------------------------------------------------------

/// Exact (c, w) with the derivatives needed to build source terms.
struct ManufacturedSolution {
    std::function<double(const Point&, double)> c, w;
    std::function<double(const Point&, double)> c_t;
    std::function<Point(const Point&, double)> grad_c, grad_w;
    std::function<double(const Point&, double)> lap_c, lap_w;
    std::function<double(double)> mass;   ///< integral of c(., t) over the domain
};

/// Sources making `sol` an exact solution of the continuous problem:
///   d_t c - lap w / Pe + u . grad c = f_c,   w = Phi'(c) - gamma^2 lap c + g_w
/// with the normal derivatives of c and w imposed weakly on the boundary.
/// Valid for divergence-free u.
inline ManufacturedSources make_sources(const ManufacturedSolution& sol, const VelocityField& u,
                                        const ModelParameters& p, int exactness_bump = 6)
{
    ManufacturedSources s;
    s.c_source = [sol, u, pe = p.peclet](const Point& x, double t) {
        return sol.c_t(x, t) - sol.lap_w(x, t) / pe + u(x).dot(sol.grad_c(x, t));
    };
    s.w_source = [sol, g2 = p.gamma * p.gamma](const Point& x, double t) {
        return sol.w(x, t) - potential_derivative(sol.c(x, t)) + g2 * sol.lap_c(x, t);
    };
    s.c_gradient = sol.grad_c;
    s.w_gradient = sol.grad_w;
    s.mass = sol.mass;
    s.exactness_bump = exactness_bump;
    return s;
}

/// c = 4/5 + e^{-t} sin(pi x1) sin(pi x2) / 5, w = e^{-t} cos(pi x1) cos(pi x2)
/// on (0,1)^2. c stays in [0.8, 1], where Phi'' > 0, so the problem is not in
/// the spinodal regime and errors are not amplified in time.
inline ManufacturedSolution trigonometric_solution()
{
    constexpr double pi = std::numbers::pi;
    ManufacturedSolution s;
    s.c = [](const Point& x, double t) { return 0.8 + 0.2 * std::exp(-t) * std::sin(pi * x.x()) * std::sin(pi * x.y()); };
    s.c_t = [c = s.c](const Point& x, double t) { return 0.8 - c(x, t); };
    s.grad_c = [](const Point& x, double t) {
        const double a = 0.2 * pi * std::exp(-t);
        return Point(a * std::cos(pi * x.x()) * std::sin(pi * x.y()), a * std::sin(pi * x.x()) * std::cos(pi * x.y()));
    };
    s.lap_c = [c = s.c](const Point& x, double t) { return -2.0 * pi * pi * (c(x, t) - 0.8); };
    s.w = [](const Point& x, double t) { return std::exp(-t) * std::cos(pi * x.x()) * std::cos(pi * x.y()); };
    s.grad_w = [](const Point& x, double t) {
        const double a = pi * std::exp(-t);
        return Point(-a * std::sin(pi * x.x()) * std::cos(pi * x.y()), -a * std::cos(pi * x.x()) * std::sin(pi * x.y()));
    };
    s.lap_w = [w = s.w](const Point& x, double t) { return -2.0 * pi * pi * w(x, t); };
    s.mass = [](double t) { return 0.8 + 0.8 * std::exp(-t) / (pi * pi); };
    return s;
}

struct ConvergenceRow {
    int n = 0;            ///< elements per side
    double h = 0.0;
    int steps = 0;
    double tau = 0.0;
    ErrorNorms errors;
};

struct ConvergenceTable {
    int k = 0;
    std::vector<ConvergenceRow> rows;

    /// Least-squares slope of log(error) against log(h).
    template <class Select>
    double rate(Select select) const
    {
        const std::size_t n = rows.size();
        if (n < 2)
            return 0.0;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& r : rows) {
            const double x = std::log(r.h), y = std::log(select(r.errors));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    double rate_c_h1() const { return rate([](const ErrorNorms& e) { return e.c.h1; }); }
    double rate_c_l2() const { return rate([](const ErrorNorms& e) { return e.c.l2; }); }
    double rate_w_h1() const { return rate([](const ErrorNorms& e) { return e.w.h1; }); }
};

/// Runs the manufactured problem on Cartesian n x n meshes of (0,1)^2 up to
/// `t_final`, with base_steps * (n / n_0)^(k+1) steps, so tau ~ h^{k+1}.
/// The initial state is the interpolant of the exact solution.
inline ConvergenceTable manufactured_convergence_study(int k, const std::vector<int>& levels,
                                                       const ManufacturedSolution& sol, const VelocityField& u,
                                                       const ModelParameters& params, double t_final, int base_steps,
                                                       const NewtonConfig& newton = {}, HhoOptions options = {})
{
    ConvergenceTable table;
    table.k = k;
    for (int n : levels) {
        const double ratio = static_cast<double>(n) / levels.front();
        const int steps = static_cast<int>(std::lround(base_steps * std::pow(ratio, k + 1)));
        ModelParameters p = params;
        p.tau = t_final / steps;
        const Discretization disc(compute_geometry(generate_cartesian_mesh(n, n)), k, u, options);
        CahnHilliardSolver solver(disc, p);
        solver.set_sources(make_sources(sol, u, p));
        SolverState s;
        s.c = interpolate_global(disc, [&](const Point& x) { return sol.c(x, 0.0); });
        s.w = interpolate_global(disc, [&](const Point& x) { return sol.w(x, 0.0); });
        for (int i = 0; i < steps; ++i)
            s = solver.advance(s, newton);
        ConvergenceRow row;
        row.n = n;
        row.h = disc.geometry().h();
        row.steps = steps;
        row.tau = p.tau;
        const double tf = s.time;
        row.errors = compute_errors(
            disc, s.c, s.w, [&](const Point& x) { return sol.c(x, tf); }, [&](const Point& x) { return sol.w(x, tf); });
        table.rows.push_back(row);
    }
    return table;
}

} // namespace chho
