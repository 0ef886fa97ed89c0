#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hho_local.hpp"
#include "mesh_io.hpp"
#include "solver.hpp"

namespace chho {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MeshKind { cartesian, triangular, file };
enum class VelocityKind { zero, constant, circular, vortex, cellular };
enum class InitialKind { tanh, random_circle, random, constant };

struct MeshSpec {
    MeshKind kind = MeshKind::cartesian;
    int nx = 16;
    int ny = 16;
    Rectangle domain{};
    std::string path;   ///< for MeshKind::file
};

struct VelocitySpec {
    VelocityKind kind = VelocityKind::zero;
    double ux = 0.0;   ///< constant field only
    double uy = 0.0;
};

struct InitialSpec {
    InitialKind kind = InitialKind::constant;
    double value = 0.0;        ///< constant value; mean of the random mixture
    double amplitude = 1.0;    ///< random mixture: value + amplitude * U(-1, 1)
    double outside = -1.0;     ///< random-circle: value outside the disc
    double radius = 0.4;
    double center_x = 0.5;
    double center_y = 0.5;
    std::uint64_t seed = 1;
    int quadrature_refinement = 3;
};

struct OutputSpec {
    std::string directory;               ///< empty: derived from the manifest hash
    std::vector<double> snapshot_times;
    bool vtk = true;
    bool high_order = false;             ///< point data on the sub-triangulation
    bool csv = true;
};

struct ConvergenceSpec {
    std::vector<int> levels{8, 16, 32};   ///< Cartesian n per side
    double t_final = 0.1;
    int base_steps = 4;                   ///< steps on the coarsest mesh; scaled by (n / n_0)^(k+1)
};

struct SimulationConfig {
    std::string name = "custom";
    bool desk_scale = false;
    ModelParameters model{};
    double t_final = 0.1;
    int k = 0;
    HhoOptions hho{};
    MeshSpec mesh{};
    VelocitySpec velocity{};
    InitialSpec initial{};
    NewtonConfig newton{};
    OutputSpec output{};
    ConvergenceSpec convergence{};

    void validate() const
    {
        model.validate();
        newton.validate();
        if (!(t_final >= model.tau))
            throw ConfigError("t_final must be at least tau");
        if (k < 0)
            throw ConfigError("k must be non-negative");
        if (mesh.kind != MeshKind::file && (mesh.nx < 1 || mesh.ny < 1))
            throw ConfigError("mesh nx and ny must be positive");
        if (mesh.kind == MeshKind::file && mesh.path.empty())
            throw ConfigError("mesh path is required for type = file");
        if (mesh.kind != MeshKind::file && !(mesh.domain.x1 > mesh.domain.x0 && mesh.domain.y1 > mesh.domain.y0))
            throw ConfigError("mesh domain must have positive extent");
        if (initial.kind == InitialKind::random_circle && !(initial.radius > 0.0))
            throw ConfigError("initial radius must be positive");
        for (double t : output.snapshot_times)
            if (t < 0.0 || t > t_final * (1.0 + 1e-12))
                throw ConfigError("snapshot time " + format_double(t) + " outside [0, t_final]");
        if (convergence.levels.empty() || convergence.base_steps < 1)
            throw ConfigError("convergence levels and base_steps must be positive");
        for (int n : convergence.levels)
            if (n < 1)
                throw ConfigError("convergence levels must be positive");
    }
};

namespace detail {

template <class E>
struct EnumName {
    E value;
    const char* name;
};

inline constexpr EnumName<MeshKind> mesh_kinds[] = {
    {MeshKind::cartesian, "cartesian"}, {MeshKind::triangular, "triangular"}, {MeshKind::file, "file"}};
inline constexpr EnumName<VelocityKind> velocity_kinds[] = {{VelocityKind::zero, "zero"},
                                                            {VelocityKind::constant, "constant"},
                                                            {VelocityKind::circular, "circular"},
                                                            {VelocityKind::vortex, "vortex"},
                                                            {VelocityKind::cellular, "cellular"}};
inline constexpr EnumName<InitialKind> initial_kinds[] = {{InitialKind::tanh, "tanh"},
                                                          {InitialKind::random_circle, "random-circle"},
                                                          {InitialKind::random, "random"},
                                                          {InitialKind::constant, "constant"}};
inline constexpr EnumName<BasisKind> basis_kinds[] = {{BasisKind::scaled_monomial, "scaled-monomial"},
                                                      {BasisKind::orthonormal, "orthonormal"}};
inline constexpr EnumName<UpwindWeight> upwind_weights[] = {{UpwindWeight::outflow, "outflow"},
                                                            {UpwindWeight::inflow, "inflow"}};
inline constexpr EnumName<UpwindIntegration> upwind_integrations[] = {{UpwindIntegration::exact, "exact"},
                                                                      {UpwindIntegration::projected, "projected"}};

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v)
{
    for (const auto& e : table)
        if (e.value == v)
            return e.name;
    return "?";
}

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], std::string_view s)
{
    std::string options;
    for (const auto& e : table) {
        if (s == e.name)
            return e.value;
        options += options.empty() ? "" : ", ";
        options += e.name;
    }
    throw ConfigError("unknown value '" + std::string(s) + "' (expected one of: " + options + ")");
}

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& s)
{
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("invalid number '" + s + "'");
    return v;
}

template <class I>
I parse_integer(const std::string& s)
{
    I v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("invalid integer '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw ConfigError("invalid boolean '" + s + "'");
}

template <class T, class P>
std::vector<T> parse_list(const std::string& s, P parse)
{
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(parse(item));
    }
    return out;
}

// One accessor per key: reads a value into the config, or writes it out.
struct Field {
    std::string key;   // "section.name"
    std::function<void(SimulationConfig&, const std::string&)> set;
    std::function<std::string(const SimulationConfig&)> get;
};

template <class E, std::size_t N, class M>
Field enum_field(std::string key, const EnumName<E> (&table)[N], M member)
{
    return {std::move(key), [&table, member](SimulationConfig& c, const std::string& v) { member(c) = parse_enum(table, v); },
            [&table, member](const SimulationConfig& c) {
                return std::string(enum_name(table, member(const_cast<SimulationConfig&>(c))));
            }};
}

template <class M>
Field double_field(std::string key, M member)
{
    return {std::move(key), [member](SimulationConfig& c, const std::string& v) { member(c) = parse_double(v); },
            [member](const SimulationConfig& c) { return format_double(member(const_cast<SimulationConfig&>(c))); }};
}

template <class I, class M>
Field int_field(std::string key, M member)
{
    return {std::move(key), [member](SimulationConfig& c, const std::string& v) { member(c) = parse_integer<I>(v); },
            [member](const SimulationConfig& c) { return std::to_string(member(const_cast<SimulationConfig&>(c))); }};
}

template <class M>
Field bool_field(std::string key, M member)
{
    return {std::move(key), [member](SimulationConfig& c, const std::string& v) { member(c) = parse_bool(v); },
            [member](const SimulationConfig& c) { return std::string(member(const_cast<SimulationConfig&>(c)) ? "true" : "false"); }};
}

template <class M>
Field string_field(std::string key, M member)
{
    return {std::move(key), [member](SimulationConfig& c, const std::string& v) { member(c) = v; },
            [member](const SimulationConfig& c) { return member(const_cast<SimulationConfig&>(c)); }};
}

inline const std::vector<Field>& config_fields()
{
    using C = SimulationConfig;
    static const std::vector<Field> fields = {
        string_field("run.name", [](C& c) -> std::string& { return c.name; }),
        bool_field("run.desk_scale", [](C& c) -> bool& { return c.desk_scale; }),
        double_field("model.gamma", [](C& c) -> double& { return c.model.gamma; }),
        double_field("model.peclet", [](C& c) -> double& { return c.model.peclet; }),
        double_field("model.tau", [](C& c) -> double& { return c.model.tau; }),
        double_field("model.t_final", [](C& c) -> double& { return c.t_final; }),
        int_field<int>("discretization.k", [](C& c) -> int& { return c.k; }),
        enum_field("discretization.basis", basis_kinds, [](C& c) -> BasisKind& { return c.hho.basis; }),
        enum_field("discretization.upwind_weight", upwind_weights, [](C& c) -> UpwindWeight& { return c.hho.upwind_weight; }),
        enum_field("discretization.upwind_integration", upwind_integrations,
                   [](C& c) -> UpwindIntegration& { return c.hho.upwind_integration; }),
        enum_field("mesh.type", mesh_kinds, [](C& c) -> MeshKind& { return c.mesh.kind; }),
        int_field<int>("mesh.nx", [](C& c) -> int& { return c.mesh.nx; }),
        int_field<int>("mesh.ny", [](C& c) -> int& { return c.mesh.ny; }),
        double_field("mesh.x0", [](C& c) -> double& { return c.mesh.domain.x0; }),
        double_field("mesh.y0", [](C& c) -> double& { return c.mesh.domain.y0; }),
        double_field("mesh.x1", [](C& c) -> double& { return c.mesh.domain.x1; }),
        double_field("mesh.y1", [](C& c) -> double& { return c.mesh.domain.y1; }),
        string_field("mesh.path", [](C& c) -> std::string& { return c.mesh.path; }),
        enum_field("velocity.field", velocity_kinds, [](C& c) -> VelocityKind& { return c.velocity.kind; }),
        double_field("velocity.ux", [](C& c) -> double& { return c.velocity.ux; }),
        double_field("velocity.uy", [](C& c) -> double& { return c.velocity.uy; }),
        enum_field("initial.type", initial_kinds, [](C& c) -> InitialKind& { return c.initial.kind; }),
        double_field("initial.value", [](C& c) -> double& { return c.initial.value; }),
        double_field("initial.amplitude", [](C& c) -> double& { return c.initial.amplitude; }),
        double_field("initial.outside", [](C& c) -> double& { return c.initial.outside; }),
        double_field("initial.radius", [](C& c) -> double& { return c.initial.radius; }),
        double_field("initial.center_x", [](C& c) -> double& { return c.initial.center_x; }),
        double_field("initial.center_y", [](C& c) -> double& { return c.initial.center_y; }),
        int_field<std::uint64_t>("initial.seed", [](C& c) -> std::uint64_t& { return c.initial.seed; }),
        int_field<int>("initial.quadrature_refinement", [](C& c) -> int& { return c.initial.quadrature_refinement; }),
        double_field("newton.tolerance", [](C& c) -> double& { return c.newton.tolerance; }),
        int_field<int>("newton.max_iterations", [](C& c) -> int& { return c.newton.max_iterations; }),
        bool_field("newton.condense", [](C& c) -> bool& { return c.newton.condense; }),
        string_field("output.directory", [](C& c) -> std::string& { return c.output.directory; }),
        Field{"output.snapshot_times",
              [](C& c, const std::string& v) { c.output.snapshot_times = parse_list<double>(v, parse_double); },
              [](const C& c) {
                  std::string s;
                  for (double t : c.output.snapshot_times)
                      s += (s.empty() ? "" : ", ") + format_double(t);
                  return s;
              }},
        bool_field("output.vtk", [](C& c) -> bool& { return c.output.vtk; }),
        bool_field("output.high_order", [](C& c) -> bool& { return c.output.high_order; }),
        bool_field("output.csv", [](C& c) -> bool& { return c.output.csv; }),
        Field{"convergence.levels",
              [](C& c, const std::string& v) { c.convergence.levels = parse_list<int>(v, parse_integer<int>); },
              [](const C& c) {
                  std::string s;
                  for (int n : c.convergence.levels)
                      s += (s.empty() ? "" : ", ") + std::to_string(n);
                  return s;
              }},
        double_field("convergence.t_final", [](C& c) -> double& { return c.convergence.t_final; }),
        int_field<int>("convergence.base_steps", [](C& c) -> int& { return c.convergence.base_steps; }),
    };
    return fields;
}

inline const Field* find_field(const std::string& key)
{
    for (const auto& f : config_fields())
        if (f.key == key)
            return &f;
    return nullptr;
}

} // namespace detail

/// Applies one "section.key=value" assignment.
inline void apply_override(SimulationConfig& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "': expected section.key=value");
    const std::string key = detail::trim(std::string_view(assignment).substr(0, eq));
    const std::string value = detail::trim(std::string_view(assignment).substr(eq + 1));
    const detail::Field* f = detail::find_field(key);
    if (!f)
        throw ConfigError("override: unknown key '" + key + "'");
    try {
        f->set(cfg, value);
    } catch (const ConfigError& e) {
        throw ConfigError("override " + key + ": " + e.what());
    }
}

/// Parses the sectioned key=value format on top of `base`:
///   # comment
///   [model]
///   gamma = 5e-2
/// Unknown sections or keys are errors reported with their line.
inline SimulationConfig parse_config_stream(std::istream& in, const std::string& origin = "<config>",
                                            SimulationConfig base = {})
{
    SimulationConfig cfg = std::move(base);
    std::string section, raw;
    std::size_t line = 0;
    auto fail = [&](const std::string& what) {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
    };
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty())
            continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                fail("malformed section header '" + text + "'");
            section = detail::trim(std::string_view(text).substr(1, text.size() - 2));
            bool known = false;
            for (const auto& f : detail::config_fields())
                known = known || f.key.starts_with(section + ".");
            if (!known)
                fail("unknown section '" + section + "'");
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            fail("expected key = value");
        if (section.empty())
            fail("key outside of a section");
        const std::string key = section + "." + detail::trim(std::string_view(text).substr(0, eq));
        const detail::Field* f = detail::find_field(key);
        if (!f)
            fail("unknown key '" + key + "'");
        try {
            f->set(cfg, detail::trim(std::string_view(text).substr(eq + 1)));
        } catch (const ConfigError& e) {
            fail(key + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

inline SimulationConfig parse_config_string(const std::string& text, const std::string& origin = "<config>",
                                            SimulationConfig base = {})
{
    std::istringstream in(text);
    return parse_config_stream(in, origin, std::move(base));
}

inline SimulationConfig parse_config(const std::string& path, SimulationConfig base = {})
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path + "'");
    return parse_config_stream(in, path, std::move(base));
}

/// Every key, grouped by section, in a fixed order. parse(serialize(c)) == c.
inline std::string serialize_config(const SimulationConfig& cfg)
{
    std::string out, section;
    for (const auto& f : detail::config_fields()) {
        const auto dot = f.key.find('.');
        const std::string s = f.key.substr(0, dot);
        if (s != section) {
            out += (section.empty() ? "[" : "\n[") + s + "]\n";
            section = s;
        }
        out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
    }
    return out;
}

inline bool operator==(const SimulationConfig& a, const SimulationConfig& b)
{
    return serialize_config(a) == serialize_config(b);
}

// Presets ------------------------------------------------------------------

/// Names accepted by preset_config.
inline std::vector<std::string> preset_names()
{
    return {"steady-disturbance",      "thin-interface",      "peclet-sweep",
            "steady-disturbance-desk", "thin-interface-desk", "peclet-sweep-desk",
            "spinodal-desk"};
}

inline SimulationConfig preset_config(const std::string& name)
{
    SimulationConfig c;
    c.name = name;
    const std::vector<double> sweep_times{0.0, 1e-2, 6e-2, 2e-1, 5e-1, 1.0};
    if (name == "steady-disturbance" || name == "steady-disturbance-desk") {
        c.k = 0;
        c.model.gamma = 5e-2;
        c.model.tau = 2.5e-3;   // gamma^2
        c.model.peclet = 1.0;
        c.mesh.kind = MeshKind::triangular;
        c.mesh.nx = c.mesh.ny = 736;   // h = sqrt(2) / 736 = 1.92e-3
        c.velocity.kind = VelocityKind::circular;
        c.initial.kind = InitialKind::tanh;
        c.t_final = 0.5;
        c.output.snapshot_times = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
        if (name.ends_with("-desk")) {
            c.desk_scale = true;
            c.mesh.nx = c.mesh.ny = 16;
            c.t_final = 0.125;   // 50 steps
            c.output.snapshot_times = {0.0, 0.125};
        }
    } else if (name == "thin-interface" || name == "thin-interface-desk") {
        c.k = 0;
        c.model.gamma = 5e-3;
        c.model.tau = 1e-5;
        c.model.peclet = 50.0;
        c.mesh.kind = MeshKind::cartesian;
        c.mesh.nx = c.mesh.ny = 725;   // h = sqrt(2) / 725 = 1.95e-3
        c.velocity.kind = VelocityKind::vortex;
        c.initial.kind = InitialKind::random_circle;
        c.t_final = 1e-2;
        c.output.snapshot_times = {0.0, 1e-3, 2e-3, 4e-3, 6e-3, 1e-2};
        if (name.ends_with("-desk")) {
            c.desk_scale = true;
            c.mesh.nx = c.mesh.ny = 32;
            c.t_final = 5e-4;   // 50 steps
            c.output.snapshot_times = {0.0, 5e-4};
        }
    } else if (name == "peclet-sweep" || name == "peclet-sweep-desk") {
        c.k = 1;
        c.model.gamma = 1e-2;
        c.model.tau = 1e-4;
        c.model.peclet = 1.0;
        c.mesh.kind = MeshKind::file;
        c.mesh.path = "meshes/voronoi_fine.fvca";
        c.velocity.kind = VelocityKind::cellular;
        c.initial.kind = InitialKind::random_circle;
        c.t_final = 1.0;
        c.output.snapshot_times = sweep_times;
        if (name.ends_with("-desk")) {
            c.desk_scale = true;
            c.mesh.path = "meshes/voronoi_256.fvca";
            c.t_final = 6e-2;
            c.output.snapshot_times = {0.0, 1e-2, 6e-2};
        }
    } else if (name == "spinodal-desk") {
        c.desk_scale = true;
        c.k = 0;
        c.model.gamma = 5e-2;
        c.model.tau = 1e-4;
        c.model.peclet = 1.0;
        c.mesh.kind = MeshKind::cartesian;
        c.mesh.nx = c.mesh.ny = 32;
        c.velocity.kind = VelocityKind::zero;
        c.initial.kind = InitialKind::random;
        c.initial.value = 0.0;
        c.initial.amplitude = 0.1;
        c.t_final = 1e-2;   // 100 steps
        c.output.snapshot_times = {0.0, 1e-2};
    } else {
        std::string names;
        for (const auto& n : preset_names())
            names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
    }
    return c;
}

/// Preset plus "section.key=value" overrides, validated.
inline SimulationConfig resolve_preset(const std::string& name, const std::vector<std::string>& overrides = {})
{
    SimulationConfig c = preset_config(name);
    for (const auto& o : overrides)
        apply_override(c, o);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

} // namespace chho
