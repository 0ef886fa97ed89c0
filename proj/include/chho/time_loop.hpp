#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "solver.hpp"

namespace chho {

struct StepRecord {
    int step = 0;
    double time = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    int newton_iterations = 0;
    double residual = 0.0;   ///< final Newton residual (inf-norm)
};

struct SnapshotRecord {
    int step = 0;
    double time = 0.0;
    FieldRange c_range;
};

struct DiagnosticsSeries {
    std::vector<StepRecord> steps;         ///< step 0 is the initial state
    std::vector<SnapshotRecord> snapshots;

    /// Largest |mass_n - mass_0| relative to max(|mass_0|, scale).
    double max_relative_mass_drift(double scale) const
    {
        if (steps.empty())
            return 0.0;
        const double m0 = steps.front().mass;
        const double denom = std::max(std::abs(m0), scale);
        double d = 0.0;
        for (const auto& s : steps)
            d = std::max(d, std::abs(s.mass - m0));
        return denom > 0.0 ? d / denom : d;
    }
};

/// Number of steps covering [0, t_final] with step tau. Sets `rounded` when
/// t_final / tau is not an integer (to relative precision 1e-9).
inline int steps_for(double t_final, double tau, bool* rounded = nullptr)
{
    if (!(tau > 0.0) || !(t_final >= tau * (1.0 - 1e-12)))
        throw std::invalid_argument("t_final must be at least tau");
    const double r = t_final / tau;
    const double n = std::round(r);
    if (rounded)
        *rounded = std::abs(r - n) > 1e-9 * r;
    return static_cast<int>(n);
}

inline StepRecord make_step_record(const CahnHilliardSolver& solver, const SolverState& s)
{
    StepRecord r;
    r.step = s.step;
    r.time = s.time;
    r.mass = compute_discrete_mass(solver.discretization(), s.c);
    r.energy = compute_free_energy(solver.discretization(), s.c, solver.parameters().gamma);
    r.newton_iterations = s.newton_iterations();
    r.residual = s.residual_history.empty() ? 0.0 : s.residual_history.back();
    return r;
}

struct TimeLoopResult {
    SolverState final_state;
    DiagnosticsSeries diagnostics;
};

/// Called after every accepted step (and once for the initial state);
/// returning false stops the loop.
using StepObserver = std::function<bool(const SolverState&, const StepRecord&)>;

/// Backward Euler from `initial` over `num_steps` steps. `snapshot_steps`
/// lists the step indices at which field ranges are recorded.
inline TimeLoopResult run_time_loop(const CahnHilliardSolver& solver, const SolverState& initial, int num_steps,
                                    const NewtonConfig& cfg, const StepObserver& observer = {},
                                    const std::vector<int>& snapshot_steps = {})
{
    TimeLoopResult out;
    auto snapshot = [&](const SolverState& s) {
        for (int k : snapshot_steps)
            if (k == s.step) {
                out.diagnostics.snapshots.push_back({s.step, s.time, field_range(solver.discretization(), s.c)});
                break;
            }
    };
    SolverState s = initial;
    StepRecord rec = make_step_record(solver, s);
    out.diagnostics.steps.push_back(rec);
    snapshot(s);
    bool go = !observer || observer(s, rec);
    for (int n = 0; go && n < num_steps; ++n) {
        s = solver.advance(s, cfg);
        rec = make_step_record(solver, s);
        out.diagnostics.steps.push_back(rec);
        snapshot(s);
        go = !observer || observer(s, rec);
    }
    out.final_state = std::move(s);
    return out;
}

} // namespace chho
