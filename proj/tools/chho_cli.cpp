// Command-line driver: run, convergence, validate-mesh, preset.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chho/config.hpp"
#include "chho/driver.hpp"
#include "chho/mesh_io.hpp"
#include "chho/mesh_validation.hpp"
#include "chho/scenarios.hpp"

namespace {

chho::SimulationConfig load_run_input(const std::string& input, const std::vector<std::string>& overrides)
{
    chho::SimulationConfig cfg;
    if (std::filesystem::path(input).extension() == ".json")
        cfg = chho::read_manifest(input).config;
    else
        cfg = chho::parse_config(input);
    for (const auto& o : overrides)
        chho::apply_override(cfg, o);
    cfg.validate();
    return cfg;
}

int run(const chho::SimulationConfig& cfg, const std::string& dir, int steps, const std::string& resume, bool quiet)
{
    chho::RunOptions opts;
    if (!dir.empty())
        opts.directory = dir;
    opts.max_steps = steps;
    if (!resume.empty())
        opts.resume = resume;
    opts.log = quiet ? nullptr : &std::cout;
    bool rounded = false;
    chho::steps_for(cfg.t_final, cfg.model.tau, &rounded);
    if (rounded)
        std::cerr << "warning: t_final / tau is not an integer; the step count is rounded\n";
    if (!cfg.desk_scale && cfg.mesh.kind != chho::MeshKind::file && cfg.mesh.nx * cfg.mesh.ny > 100000)
        std::cerr << "warning: full-resolution run, expect hours of compute\n";
    const auto out = chho::execute_run(cfg, opts);
    std::cout << "run directory: " << out.directory.string() << "\n";
    std::cout << "mass drift (relative): " << chho::format_double(out.result.mass_drift()) << "\n";
    return 0;
}

int convergence(const chho::SimulationConfig& cfg)
{
    const auto u = chho::make_velocity(cfg.velocity);
    const auto table = chho::manufactured_convergence_study(cfg.k, cfg.convergence.levels, chho::trigonometric_solution(),
                                                            u, cfg.model, cfg.convergence.t_final,
                                                            cfg.convergence.base_steps, cfg.newton, cfg.hho);
    std::cout << "n,h,steps,tau,c_l2,c_h1,w_l2,w_h1\n";
    for (const auto& r : table.rows)
        std::cout << r.n << ',' << chho::format_double(r.h) << ',' << r.steps << ',' << chho::format_double(r.tau)
                  << ',' << chho::format_double(r.errors.c.l2) << ',' << chho::format_double(r.errors.c.h1) << ','
                  << chho::format_double(r.errors.w.l2) << ',' << chho::format_double(r.errors.w.h1) << "\n";
    std::cout << "# rates: c_h1 " << table.rate_c_h1() << ", c_l2 " << table.rate_c_l2() << ", w_h1 "
              << table.rate_w_h1() << "\n";
    return 0;
}

int validate(const std::string& path)
{
    const chho::Mesh mesh = chho::read_polygonal_mesh(path);
    const auto report = chho::validate_mesh(mesh);
    std::cout << path << ": " << mesh.num_vertices() << " vertices, " << mesh.num_elements() << " elements, "
              << mesh.num_faces() << " faces (" << mesh.num_boundary_faces() << " boundary)\n";
    if (report.ok()) {
        const auto geo = chho::compute_geometry(mesh);
        std::cout << "h = " << chho::format_double(geo.h()) << ", area = " << chho::format_double(geo.domain_area())
                  << "\nok\n";
        return 0;
    }
    for (const auto& issue : report.issues)
        std::cout << issue << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"HHO solver for the convective Cahn-Hilliard problem"};
    app.require_subcommand(1);

    std::string input, dir, resume, name, mesh_path;
    std::vector<std::string> overrides;
    int steps = -1;
    bool quiet = false, execute = false;

    auto* run_cmd = app.add_subcommand("run", "run a configuration file or a manifest.json");
    run_cmd->add_option("input", input, "config file or manifest.json")->required();
    run_cmd->add_option("--set", overrides, "section.key=value override");
    run_cmd->add_option("--output", dir, "output directory");
    run_cmd->add_option("--steps", steps, "stop after this many steps");
    run_cmd->add_option("--resume", resume, "checkpoint to resume from");
    run_cmd->add_flag("--quiet", quiet, "no per-step log");

    auto* conv_cmd = app.add_subcommand("convergence", "manufactured-solution convergence study");
    conv_cmd->add_option("config", input, "config file")->required();
    conv_cmd->add_option("--set", overrides, "section.key=value override");

    auto* val_cmd = app.add_subcommand("validate-mesh", "check a fvca-poly mesh file");
    val_cmd->add_option("file", mesh_path, "mesh file")->required();

    auto* preset_cmd = app.add_subcommand("preset", "print (or run) a preset configuration");
    preset_cmd->add_option("name", name, "preset name")->required();
    preset_cmd->add_option("--set", overrides, "section.key=value override");
    preset_cmd->add_flag("--run", execute, "run the resolved configuration");
    preset_cmd->add_option("--output", dir, "output directory (with --run)");
    preset_cmd->add_option("--steps", steps, "stop after this many steps (with --run)");
    preset_cmd->add_flag("--quiet", quiet, "no per-step log");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd)
            return run(load_run_input(input, overrides), dir, steps, resume, quiet);
        if (*conv_cmd)
            return convergence(load_run_input(input, overrides));
        if (*val_cmd)
            return validate(mesh_path);
        if (*preset_cmd) {
            const auto cfg = chho::resolve_preset(name, overrides);
            if (execute)
                return run(cfg, dir, steps, "", quiet);
            std::cout << chho::serialize_config(cfg);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
