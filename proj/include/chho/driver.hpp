#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "checkpoint.hpp"
#include "config.hpp"
#include "output.hpp"
#include "scenarios.hpp"

namespace chho {

struct RunOptions {
    std::optional<std::filesystem::path> directory;   ///< overrides the manifest-derived directory
    int max_steps = -1;                               ///< stop early (negative: run to t_final)
    std::optional<std::string> resume;                ///< checkpoint to start from
    std::ostream* log = nullptr;
};

struct RunOutcome {
    std::filesystem::path directory;
    RunManifest manifest;
    RunResult result;
};

/// Runs a configuration and writes manifest.json, timeseries.csv, VTK
/// snapshots with JSON sidecars, and a final checkpoint into one directory.
inline RunOutcome execute_run(const SimulationConfig& cfg, const RunOptions& opts = {})
{
    namespace fs = std::filesystem;
    RunOutcome outcome;
    outcome.manifest.config = cfg;
    outcome.manifest.mesh_provenance = mesh_provenance(cfg.mesh);
    outcome.manifest.seed = cfg.initial.seed;
    outcome.manifest.started = utc_now();
    outcome.directory = opts.directory ? *opts.directory : run_directory(outcome.manifest);
    fs::create_directories(outcome.directory);

    const auto t0 = std::chrono::steady_clock::now();
    Simulation sim(cfg);
    const std::vector<int> snaps = sim.snapshot_steps();
    nlohmann::json sidecars = nlohmann::json::array();

    auto hook = [&](const Simulation& s, const SolverState& state, const StepRecord& rec) {
        if (opts.log)
            *opts.log << "step " << rec.step << " t=" << format_double(rec.time) << " newton=" << rec.newton_iterations
                      << " mass=" << format_double(rec.mass) << " energy=" << format_double(rec.energy) << "\n";
        if (!cfg.output.vtk || std::find(snaps.begin(), snaps.end(), state.step) == snaps.end())
            return;
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%06d.vtk", state.step);
        write_vtk_snapshot(s.mesh, *s.disc, state, (outcome.directory / name).string());
        if (cfg.output.high_order) {
            std::snprintf(name, sizeof name, "snapshot_%06d_ho.vtk", state.step);
            write_vtk_high_order(*s.disc, state, (outcome.directory / name).string());
            std::snprintf(name, sizeof name, "snapshot_%06d.vtk", state.step);
        }
        sidecars.push_back(snapshot_sidecar(state, field_range(*s.disc, state.c), name));
    };

    if (opts.resume) {
        const Checkpoint cp = read_checkpoint(*opts.resume);
        if (static_cast<std::size_t>(cp.state.c.size()) != sim.disc->dofs().size())
            throw ConfigError("checkpoint '" + *opts.resume + "' does not match the configured discretization");
        // The mass target is the conserved mass of the checkpointed state.
        sim.solver->set_mass_target(sim.solver->discrete_mass(cp.state.c));
        const int total = sim.num_steps();
        const int remaining = std::max(0, total - cp.state.step);
        const int n = opts.max_steps < 0 ? remaining : std::min(remaining, opts.max_steps);
        RotationTracker rot;
        auto observer = [&](const SolverState& s, const StepRecord& rec) {
            outcome.result.rotation.push_back(rot.update(*sim.disc, s.c));
            hook(sim, s, rec);
            return true;
        };
        TimeLoopResult tl = run_time_loop(*sim.solver, cp.state, n, cfg.newton, observer, snaps);
        outcome.result.diagnostics = std::move(tl.diagnostics);
        outcome.result.final_state = std::move(tl.final_state);
        outcome.result.h = sim.geometry().h();
        outcome.result.initial_l1 = l1_norm(*sim.disc, cp.state.c);
    } else {
        outcome.result = run_simulation(sim, opts.max_steps, hook);
    }

    if (cfg.output.csv)
        write_timeseries_csv(outcome.result.diagnostics, (outcome.directory / "timeseries.csv").string());
    {
        std::ofstream out(outcome.directory / "snapshots.json");
        out << sidecars.dump(2) << "\n";
    }
    Checkpoint cp;
    cp.state = outcome.result.final_state;
    {
        std::mt19937_64 rng(cfg.initial.seed);
        std::ostringstream s;
        s << rng;
        cp.rng_state = s.str();
    }
    write_checkpoint(cp, (outcome.directory / "checkpoint.txt").string());

    outcome.manifest.finished = utc_now();
    outcome.manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(outcome.manifest, (outcome.directory / "manifest.json").string());
    return outcome;
}

} // namespace chho
