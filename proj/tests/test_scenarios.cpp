#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "chho/config.hpp"
#include "chho/diagnostics.hpp"
#include "chho/output.hpp"
#include "chho/scenarios.hpp"
#include "support.hpp"

using namespace chho;
namespace ts = testing_support;

namespace {

bool contains_line(const std::string& text, const std::string& line)
{
    return ("\n" + text).find("\n" + line + "\n") != std::string::npos;
}

Eigen::VectorXd constant_field(const Discretization& disc, double v)
{
    return interpolate_global(disc, [v](const Point&) { return v; });
}

} // namespace

TEST(Mass, ConstantAndOddFields)
{
    const Discretization disc(compute_geometry(generate_triangular_mesh(3, 3)), 1);
    EXPECT_NEAR(compute_discrete_mass(disc, constant_field(disc, 1.0)), 1.0, 1e-14);
    const Eigen::VectorXd odd = interpolate_global(disc, [](const Point& x) { return 2.0 * x.x() - 1.0; });
    EXPECT_NEAR(compute_discrete_mass(disc, odd), 0.0, 1e-15);
}

TEST(Mass, RandomFieldMatchesElementwiseOracle)
{
    std::mt19937_64 rng(8);
    const GeometryCache geo = compute_geometry(generate_cartesian_mesh(2, 2));
    const Discretization disc(geo, 1);
    const Eigen::VectorXd c = ts::random_vector(disc.dofs().size(), rng);
    double oracle = 0.0;
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const CellBasis b = make_cell_basis(geo, t, 2);
        const Eigen::VectorXd block = disc.cell_block(c, t);
        const QuadRule r = element_quadrature(geo, t, 10);
        const double mean = r.integrate([&](const Point& x) { return b.eval(block, x); }) / geo.element(t).area;
        oracle += mean * geo.element(t).area;
    }
    EXPECT_NEAR(compute_discrete_mass(disc, c), oracle, 1e-14);
}

TEST(Energy, PurePhasesAndMixture)
{
    const Discretization disc(compute_geometry(generate_cartesian_mesh(3, 3)), 0);
    EXPECT_NEAR(compute_free_energy(disc, constant_field(disc, 1.0), 0.1), 0.0, 1e-15);
    EXPECT_NEAR(compute_free_energy(disc, constant_field(disc, -1.0), 0.1), 0.0, 1e-15);
    EXPECT_NEAR(compute_free_energy(disc, constant_field(disc, 0.0), 0.1), 0.25, 1e-15);
}

TEST(Energy, LinearProfileClosedForm)
{
    // int_0^1 (1 - x^2)^2 / 4 dx = 2/15, plus gamma^2/2 |grad x|^2 = 1/2.
    const Discretization disc(compute_geometry(generate_cartesian_mesh(2, 2)), 0);
    const Eigen::VectorXd c = interpolate_global(disc, [](const Point& x) { return x.x(); });
    EXPECT_NEAR(compute_free_energy(disc, c, 1.0), 2.0 / 15 + 0.5, 1e-14);
}

TEST(Errors, ExactPolynomialGivesZero)
{
    const Discretization disc(compute_geometry(generate_triangular_mesh(2, 2)), 1);
    auto q = [](const Point& x) { return 1.0 + x.x() * x.y() - 0.5 * x.y() * x.y(); };
    const Eigen::VectorXd c = interpolate_global(disc, q);
    const ErrorNorms e = compute_errors(disc, c, c, q, q);
    EXPECT_LT(e.c.l2, 1e-14);
    EXPECT_LT(e.c.h1, 1e-13);
    EXPECT_LT(e.w.l2, 1e-14);
}

TEST(Errors, ConstantShift)
{
    const Discretization disc(compute_geometry(generate_cartesian_mesh(2, 3, Rectangle{0, 0, 2, 1})), 0);
    auto q = [](const Point& x) { return 0.3 * x.x() - x.y(); };
    const Eigen::VectorXd c = interpolate_global(disc, [&](const Point& x) { return q(x) + 0.25; });
    const FieldErrors e = compute_field_errors(disc, c, q);
    EXPECT_NEAR(e.l2, 0.25 * std::sqrt(2.0), 1e-14);
    EXPECT_LT(e.h1, 1e-13);
}

TEST(Errors, SingleElementPerturbationMatchesOracle)
{
    const GeometryCache geo = compute_geometry(generate_cartesian_mesh(2, 2));
    const Discretization disc(geo, 1);
    auto q = [](const Point& x) { return x.x() * x.x() + x.y(); };
    Eigen::VectorXd c = interpolate_global(disc, q);
    const std::size_t t = 3, j = 4;
    const double delta = 0.37;
    const auto idx = static_cast<Eigen::Index>(disc.dofs().cell_offset(t) + j);
    c[idx] += delta;
    const FieldErrors e = compute_field_errors(disc, c, q);
    const CellBasis b = make_cell_basis(geo, t, 2);
    const double phi2 = element_quadrature(geo, t, 8).integrate([&](const Point& x) {
        const double v = b.eval(x)[static_cast<Eigen::Index>(j)];
        return v * v;
    });
    EXPECT_NEAR(e.l2, delta * std::sqrt(phi2), 1e-12);
    EXPECT_NEAR(e.h1, delta * std::sqrt(Eigen::MatrixXd(disc.diffusion())(idx, idx)), 1e-12);
}

TEST(Diagnostics, CircularMomentAngleOfLinearPattern)
{
    const Discretization disc(compute_geometry(generate_cartesian_mesh(16, 16)), 0);
    const double theta = 0.7;
    const Eigen::VectorXd c = interpolate_global(disc, [&](const Point& x) {
        return (x.x() - 0.5) * std::cos(theta) + (x.y() - 0.5) * std::sin(theta);
    });
    EXPECT_NEAR(circular_moment_angle(disc, c, Point(0.5, 0.5)), theta, 1e-3);
}

TEST(Diagnostics, RotationTrackerUnwraps)
{
    const Discretization disc(compute_geometry(generate_cartesian_mesh(8, 8)), 0);
    RotationTracker rot;
    double last = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double theta = 0.5 * i;
        const Eigen::VectorXd c = interpolate_global(disc, [&](const Point& x) {
            return (x.x() - 0.5) * std::cos(theta) + (x.y() - 0.5) * std::sin(theta);
        });
        last = rot.update(disc, c);
    }
    EXPECT_NEAR(rot.displacement(), 10.0, 0.05);
    EXPECT_NEAR(last - rot.angle(), 0.0, 0.0);
}

TEST(Velocity, FieldsMatchClosedForms)
{
    const Point x(0.3, 0.8);
    const Point uc = circular_velocity()(x);
    EXPECT_NEAR(uc.x(), 20 * 0.3 * (0.3 - 1) * (2 * 0.8 - 1), 1e-14);
    EXPECT_NEAR(uc.y(), -20 * 0.8 * (0.8 - 1) * (2 * 0.3 - 1), 1e-14);
    const Point uv = vortex_velocity()(Point(0.55, 0.5));
    const double s = 0.5 * (1 + std::tanh(80 - 200 * 0.05));
    EXPECT_NEAR(uv.x(), 0.0, 1e-15);
    EXPECT_NEAR(uv.y(), s * (1 - 1.1), 1e-14);
    const Point ue = cellular_velocity()(x);
    EXPECT_NEAR(ue.x(), std::sin(M_PI * 0.3) * std::cos(M_PI * 0.8), 1e-15);
    EXPECT_NEAR(ue.y(), -std::cos(M_PI * 0.3) * std::sin(M_PI * 0.8), 1e-15);
}

TEST(Velocity, FieldsAreTangentialAndDivergenceFree)
{
    const GeometryCache geo = compute_geometry(generate_cartesian_mesh(6, 6));
    for (const VelocityField& u : {circular_velocity(), cellular_velocity(), vortex_velocity()}) {
        double boundary = 0.0;
        for (std::size_t f = 0; f < geo.num_faces(); ++f)
            if (geo.face(f).is_boundary())
                boundary = std::max(boundary, face_quadrature(geo, f, 6).integrate([&](const Point& x) {
                    return std::abs(u(x).dot(geo.face(f).normal));
                }));
        EXPECT_LT(boundary, 1e-14);
    }
    // The vortex switches off over a width of 1/200, too sharp for element
    // quadrature on this mesh; its divergence is checked pointwise instead.
    for (const VelocityField& u : {circular_velocity(), cellular_velocity()})
        for (std::size_t t = 0; t < geo.num_elements(); ++t)
            EXPECT_NEAR(element_net_flux(geo, t, u, 16), 0.0, u.polynomial ? 1e-14 : 1e-9);
    const VelocityField v = vortex_velocity();
    const double e = 1e-6;
    for (const Point x : {Point(0.3, 0.8), Point(0.9, 0.51), Point(0.5, 0.1), Point(0.52, 0.56)}) {
        const double div = (v(x + Point(e, 0)).x() - v(x - Point(e, 0)).x() + v(x + Point(0, e)).y() -
                            v(x - Point(0, e)).y()) / (2 * e);
        EXPECT_NEAR(div, 0.0, 1e-6);
    }
}

TEST(Presets, PublishedConstantsAreTranscribedExactly)
{
    const std::string s1 = serialize_config(preset_config("steady-disturbance"));
    for (const char* line : {"gamma = 0.05", "tau = 0.0025", "peclet = 1", "k = 0", "type = triangular",
                             "field = circular", "type = tanh"})
        EXPECT_TRUE(contains_line(s1, line)) << line;

    const std::string s2 = serialize_config(preset_config("thin-interface"));
    for (const char* line : {"gamma = 0.005", "tau = 1e-05", "peclet = 50", "k = 0", "type = cartesian",
                             "field = vortex", "type = random-circle"})
        EXPECT_TRUE(contains_line(s2, line)) << line;

    const std::string s3 = serialize_config(preset_config("peclet-sweep"));
    for (const char* line : {"gamma = 0.01", "tau = 1e-04", "t_final = 1", "k = 1", "type = file",
                             "field = cellular", "type = random-circle",
                             "snapshot_times = 0, 0.01, 0.06, 0.2, 0.5, 1"})
        EXPECT_TRUE(contains_line(s3, line)) << line;
}

TEST(Presets, DeskPresetsAreLabelled)
{
    for (const auto& name : preset_names()) {
        const SimulationConfig c = preset_config(name);
        const bool desk = name.find("desk") != std::string::npos;
        EXPECT_EQ(c.desk_scale, desk) << name;
        EXPECT_NO_THROW(c.validate()) << name;
    }
    EXPECT_THROW(preset_config("no-such-preset"), ConfigError);
}

TEST(Presets, OverridesApply)
{
    const SimulationConfig c = resolve_preset("peclet-sweep-desk", {"model.peclet=200"});
    EXPECT_EQ(c.model.peclet, 200.0);
    EXPECT_THROW(resolve_preset("peclet-sweep-desk", {"model.peclet=0"}), std::exception);
}

TEST(InitialData, RandomCircleIsSeededAndBounded)
{
    const GeometryCache geo = compute_geometry(generate_cartesian_mesh(10, 10));
    InitialSpec spec;
    spec.kind = InitialKind::random_circle;
    const InitialCondition a = random_circle_initial_condition(geo, spec);
    const InitialCondition b = random_circle_initial_condition(geo, spec);
    EXPECT_EQ(a.element_values, b.element_values);
    spec.seed = 2;
    EXPECT_NE(a.element_values, random_circle_initial_condition(geo, spec).element_values);
    std::size_t inside = 0;
    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const double v = a.element_values[t];
        if ((geo.element(t).centroid - Point(0.5, 0.5)).norm() < 0.4) {
            ++inside;
            EXPECT_GE(v, -1.0);
            EXPECT_LT(v, 1.0);
        } else {
            EXPECT_EQ(v, -1.0);
        }
    }
    EXPECT_GT(inside, 0u);

    const Discretization disc(geo, 0);
    const InitialField f = solve_initial_condition(disc, a);
    EXPECT_EQ(f.mode, InitialMode::interpolation);
    double mean = 0.0;
    for (double v : a.element_values)
        mean += v * 0.01;
    EXPECT_NEAR(compute_discrete_mass(disc, f.c), mean, 1e-14);
}

TEST(Runs, SteadyDisturbanceDeskConservesMass)
{
    const RunResult r = run_test_case("steady-disturbance-desk");
    EXPECT_EQ(r.diagnostics.steps.size(), 51u);
    EXPECT_LT(r.mass_drift(), 1e-10);
    EXPECT_EQ(r.initial_mode, InitialMode::elliptic);
    for (std::size_t i = 1; i < r.diagnostics.steps.size(); ++i)
        EXPECT_GT(r.diagnostics.steps[i].time, r.diagnostics.steps[i - 1].time);
}

TEST(Runs, MirrorSymmetry)
{
    // Reflecting the domain about x = 1/2 and the velocity with it mirrors
    // the trajectory on a symmetric Cartesian mesh.
    const GeometryCache geo = compute_geometry(generate_cartesian_mesh(8, 8));
    const VelocityField u = circular_velocity();
    VelocityField mirrored = u;
    mirrored.value = [u](const Point& x) {
        const Point v = u(Point(1.0 - x.x(), x.y()));
        return Point(-v.x(), v.y());
    };
    auto c0 = [](const Point& x) { return 0.6 * std::cos(M_PI * x.x()) * std::cos(2 * M_PI * x.y()) + 0.3 * x.x(); };
    ModelParameters p;
    p.gamma = 0.1;
    p.tau = 1e-3;

    auto run = [&](const VelocityField& v, auto&& init) {
        const Discretization disc(geo, 0, v);
        CahnHilliardSolver solver(disc, p);
        InitialCondition ic;
        ic.value = init;
        SolverState s = initial_state(solver, ic);
        for (int i = 0; i < 5; ++i)
            s = solver.advance(s, NewtonConfig{});
        return cell_means(disc, s.c);
    };
    const Eigen::VectorXd a = run(u, c0);
    const Eigen::VectorXd b = run(mirrored, [&](const Point& x) { return c0(Point(1.0 - x.x(), x.y())); });

    for (std::size_t t = 0; t < geo.num_elements(); ++t) {
        const Point m(1.0 - geo.element(t).centroid.x(), geo.element(t).centroid.y());
        std::size_t r = 0;
        for (; r < geo.num_elements(); ++r)
            if ((geo.element(r).centroid - m).norm() < 1e-12)
                break;
        ASSERT_LT(r, geo.num_elements());
        EXPECT_NEAR(a[static_cast<Eigen::Index>(t)], b[static_cast<Eigen::Index>(r)], 1e-9);
    }
}

TEST(Runs, GradientScalesInverselyWithGamma)
{
    // A strip resolving both interface widths, relaxed from a common tanh
    // profile: max |grad c_h| tracks the equilibrium slope 1/(sqrt 2 gamma).
    const int n = 400;
    const GeometryCache geo = compute_geometry(generate_cartesian_mesh(n, 1, Rectangle{0, 0, 1, 1.0 / n}));
    auto relaxed_gradient = [&](double gamma) {
        const Discretization disc(geo, 1);
        ModelParameters p;
        p.gamma = gamma;
        p.tau = 2e-5;
        CahnHilliardSolver solver(disc, p);
        InitialCondition ic;
        const double a = 0.03;
        ic.value = [a](const Point& x) { return std::tanh((x.x() - 0.5) / a); };
        ic.laplacian = [a](const Point& x) {
            const double t = std::tanh((x.x() - 0.5) / a);
            return -2.0 / (a * a) * t * (1 - t * t);
        };
        SolverState s = initial_state(solver, ic);
        for (int i = 0; i < 50; ++i)
            s = solver.advance(s, NewtonConfig{});
        return max_gradient(disc, s.c);
    };
    const double ratio = relaxed_gradient(5e-3) / relaxed_gradient(5e-2);
    EXPECT_GT(ratio, 10.0 / 3);
    EXPECT_LT(ratio, 30.0);
}

TEST(Manufactured, PolynomialSolutionIsReproducedInOneStep)
{
    // c = (1 + t) q and w of degree <= k + 1, constant u, Cartesian mesh and
    // projected upwinding: every discrete term is consistent, so the first
    // step recovers the interpolant.
    for (int k : {0, 1}) {
        ManufacturedSolution sol;
        const double b = k == 0 ? 0.0 : 1.0;
        auto q = [b](const Point& x) { return 0.2 + 0.3 * x.x() + 0.1 * x.y() + b * (0.3 * x.x() * x.x() - 0.2 * x.x() * x.y()); };
        auto grad_q = [b](const Point& x) {
            return Point(0.3 + b * (0.6 * x.x() - 0.2 * x.y()), 0.1 - b * 0.2 * x.x());
        };
        const double lap_q = b * 0.6;
        sol.c = [q](const Point& x, double t) { return (1 + t) * q(x); };
        sol.c_t = [q](const Point& x, double) { return q(x); };
        sol.grad_c = [grad_q](const Point& x, double t) { return Point((1 + t) * grad_q(x)); };
        sol.lap_c = [lap_q](const Point&, double t) { return (1 + t) * lap_q; };
        sol.w = [b](const Point& x, double) { return 0.5 - 0.4 * x.y() + b * (0.7 * x.x() * x.y() - x.x() * x.x()); };
        sol.grad_w = [b](const Point& x, double) { return Point(b * (0.7 * x.y() - 2 * x.x()), -0.4 + b * 0.7 * x.x()); };
        sol.lap_w = [b](const Point&, double) { return -2.0 * b; };
        const double mq = 0.2 + 0.15 + 0.05 + b * (0.1 - 0.05);
        sol.mass = [mq](double t) { return (1 + t) * mq; };

        const VelocityField u = VelocityField::constant(Point(0.7, -0.4));
        HhoOptions opts;
        opts.upwind_integration = UpwindIntegration::projected;
        const Discretization disc(compute_geometry(generate_cartesian_mesh(3, 3)), k, u, opts);
        ModelParameters p;
        p.gamma = 0.3;
        p.tau = 0.05;
        CahnHilliardSolver solver(disc, p);
        solver.set_sources(make_sources(sol, u, p));
        SolverState s;
        s.c = interpolate_global(disc, [&](const Point& x) { return sol.c(x, 0.0); });
        s.w = interpolate_global(disc, [&](const Point& x) { return sol.w(x, 0.0); });
        NewtonConfig cfg;
        cfg.tolerance = 1e-13;
        s = solver.advance(s, cfg);
        const ErrorNorms e = compute_errors(
            disc, s.c, s.w, [&](const Point& x) { return sol.c(x, p.tau); },
            [&](const Point& x) { return sol.w(x, p.tau); });
        EXPECT_LT(e.c.l2, 1e-10) << "k=" << k;
        EXPECT_LT(e.c.h1, 1e-10) << "k=" << k;
        EXPECT_LT(e.w.l2, 1e-10) << "k=" << k;
        EXPECT_LT(e.w.h1, 1e-10) << "k=" << k;
    }
}

TEST(Manufactured, QuickConvergenceCheck)
{
    ModelParameters p;
    p.gamma = 0.1;
    const ConvergenceTable t =
        manufactured_convergence_study(0, {4, 8, 16}, trigonometric_solution(), cellular_velocity(), p, 0.05, 2);
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.rows[2].steps, 8);
    EXPECT_GT(t.rows[0].errors.c.h1, t.rows[2].errors.c.h1);
    EXPECT_GE(t.rate_c_h1(), 0.8);
}
