#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "mesh_io.hpp"
#include "solver.hpp"

namespace chho {

/// Resumable state: the solver state and the generator state used for the
/// initial data. Text format, version line first:
///   chho-checkpoint 1
///   step <n>
///   time <t>
///   lambda <l>
///   rng <serialized std::mt19937_64 or "-">
///   c <N> <values...>
///   w <N> <values...>
struct Checkpoint {
    SolverState state;
    std::string rng_state = "-";
};

inline constexpr int checkpoint_version = 1;

inline void write_checkpoint_stream(const Checkpoint& cp, std::ostream& out)
{
    out << "chho-checkpoint " << checkpoint_version << "\n";
    out << "step " << cp.state.step << "\n";
    out << "time " << format_double(cp.state.time) << "\n";
    out << "lambda " << format_double(cp.state.lambda) << "\n";
    out << "rng " << (cp.rng_state.empty() ? "-" : cp.rng_state) << "\n";
    for (const auto& [name, v] : {std::pair{"c", &cp.state.c}, std::pair{"w", &cp.state.w}}) {
        out << name << ' ' << v->size();
        for (Eigen::Index i = 0; i < v->size(); ++i)
            out << ' ' << format_double((*v)[i]);
        out << "\n";
    }
}

inline void write_checkpoint(const Checkpoint& cp, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write checkpoint '" + path + "'");
    write_checkpoint_stream(cp, out);
    if (!out)
        throw std::runtime_error("write failed for checkpoint '" + path + "'");
}

inline Checkpoint read_checkpoint_stream(std::istream& in, const std::string& origin = "<checkpoint>")
{
    auto fail = [&](const std::string& what) -> void { throw ParseError(origin, 0, what); };
    auto expect = [&](const char* key) {
        std::string k;
        if (!(in >> k) || k != key)
            fail(std::string("expected '") + key + "'");
    };
    Checkpoint cp;
    int ver = 0;
    expect("chho-checkpoint");
    if (!(in >> ver) || ver != checkpoint_version)
        fail("unsupported checkpoint version");
    std::string tok;
    expect("step");
    if (!(in >> cp.state.step))
        fail("bad step");
    expect("time");
    in >> tok;
    cp.state.time = std::stod(tok);
    expect("lambda");
    in >> tok;
    cp.state.lambda = std::stod(tok);
    expect("rng");
    std::getline(in >> std::ws, cp.rng_state);
    for (auto [name, v] : {std::pair{"c", &cp.state.c}, std::pair{"w", &cp.state.w}}) {
        expect(name);
        Eigen::Index n = 0;
        if (!(in >> n) || n < 0)
            fail(std::string("bad size for ") + name);
        v->resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(in >> tok))
                fail(std::string("truncated ") + name + " vector");
            (*v)[i] = std::stod(tok);
        }
    }
    return cp;
}

inline Checkpoint read_checkpoint(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open checkpoint '" + path + "'");
    return read_checkpoint_stream(in, path);
}

} // namespace chho
