#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mesh.hpp"

namespace chho {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& origin, std::size_t line, const std::string& what)
        : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Shortest decimal representation that reads back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace detail {

struct Token {
    std::string text;
    std::size_t line;
};

inline std::vector<Token> tokenize(std::istream& in)
{
    std::vector<Token> tokens;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok)
            tokens.push_back({tok, lineno});
    }
    return tokens;
}

class TokenStream {
public:
    TokenStream(std::vector<Token> tokens, std::string origin)
        : tokens_(std::move(tokens)), origin_(std::move(origin)) {}

    bool done() const { return pos_ >= tokens_.size(); }
    const Token* peek() const { return done() ? nullptr : &tokens_[pos_]; }

    std::size_t line() const
    {
        if (tokens_.empty())
            return 0;
        return done() ? tokens_.back().line : tokens_[pos_].line;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(origin_, line(), what); }

    const Token& next(const char* expected)
    {
        if (done())
            fail(std::string("unexpected end of file, expected ") + expected);
        return tokens_[pos_++];
    }

    void expect_keyword(std::string_view kw)
    {
        const Token& t = next(std::string(kw).c_str());
        if (t.text != kw)
            throw ParseError(origin_, t.line, "expected '" + std::string(kw) + "', found '" + t.text + "'");
    }

    std::size_t next_index(const char* what)
    {
        const Token& t = next(what);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || p != t.text.data() + t.text.size())
            throw ParseError(origin_, t.line, std::string("expected ") + what + ", found '" + t.text + "'");
        return v;
    }

    double next_double(const char* what)
    {
        const Token& t = next(what);
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || p != t.text.data() + t.text.size())
            throw ParseError(origin_, t.line, std::string("expected ") + what + ", found '" + t.text + "'");
        return v;
    }

    const std::string& origin() const { return origin_; }

private:
    std::vector<Token> tokens_;
    std::string origin_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Reads the "fvca-poly" text format:
///
///     VERTICES <nv>  then nv records  "x y"
///     ELEMENTS <ne>  then ne records  "m v_1 ... v_m"   (counterclockwise, 1-based)
///     FACES <nf>     then nf records  "a b"             (optional, 1-based)
///
/// Tokens are whitespace separated and '#' starts a comment. Throws ParseError
/// (with line number) on malformed input and MeshError on topological errors.
inline Mesh read_polygonal_mesh_stream(std::istream& in, const std::string& origin = "<stream>")
{
    detail::TokenStream ts(detail::tokenize(in), origin);

    ts.expect_keyword("VERTICES");
    const std::size_t nv = ts.next_index("vertex count");
    std::vector<Point> vertices;
    vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        const double x = ts.next_double("x coordinate");
        const double y = ts.next_double("y coordinate");
        vertices.emplace_back(x, y);
    }

    ts.expect_keyword("ELEMENTS");
    const std::size_t ne = ts.next_index("element count");
    std::vector<std::vector<std::size_t>> loops(ne);
    for (std::size_t t = 0; t < ne; ++t) {
        const std::size_t m = ts.next_index("element vertex count");
        if (m < 3)
            ts.fail("element " + std::to_string(t) + " has fewer than 3 vertices");
        loops[t].reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t line = ts.line();
            const std::size_t v = ts.next_index("vertex index");
            if (v < 1 || v > nv)
                throw ParseError(origin, line, "vertex index " + std::to_string(v) + " out of range");
            loops[t].push_back(v - 1);
        }
    }

    std::optional<std::vector<std::array<std::size_t, 2>>> face_list;
    if (!ts.done()) {
        ts.expect_keyword("FACES");
        const std::size_t nf = ts.next_index("face count");
        face_list.emplace();
        face_list->reserve(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            const std::size_t line = ts.line();
            const std::size_t a = ts.next_index("vertex index");
            const std::size_t b = ts.next_index("vertex index");
            if (a < 1 || a > nv || b < 1 || b > nv)
                throw ParseError(origin, line, "face vertex index out of range");
            face_list->push_back({a - 1, b - 1});
        }
        if (!ts.done())
            ts.fail("trailing content '" + ts.peek()->text + "'");
    }

    return build_mesh(std::move(vertices), std::move(loops), face_list);
}

inline Mesh read_polygonal_mesh(const std::string& path, std::string_view format = "fvca-poly")
{
    if (format != "fvca-poly")
        throw std::invalid_argument("unsupported mesh format '" + std::string(format) + "'");
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open mesh file '" + path + "'");
    return read_polygonal_mesh_stream(in, path);
}

inline void write_polygonal_mesh_stream(const Mesh& mesh, std::ostream& out, bool with_faces = true)
{
    out << "# fvca-poly mesh\n";
    out << "VERTICES\n" << mesh.num_vertices() << "\n";
    for (const auto& p : mesh.vertices())
        out << format_double(p.x()) << ' ' << format_double(p.y()) << "\n";
    out << "ELEMENTS\n" << mesh.num_elements() << "\n";
    for (const auto& loop : mesh.elements()) {
        out << loop.size();
        for (auto v : loop)
            out << ' ' << v + 1;
        out << "\n";
    }
    if (with_faces) {
        out << "FACES\n" << mesh.num_faces() << "\n";
        for (const auto& f : mesh.faces())
            out << f.vertices[0] + 1 << ' ' << f.vertices[1] + 1 << "\n";
    }
}

inline void write_polygonal_mesh(const Mesh& mesh, const std::string& path, bool with_faces = true)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write mesh file '" + path + "'");
    write_polygonal_mesh_stream(mesh, out, with_faces);
    if (!out)
        throw std::runtime_error("write failed for '" + path + "'");
}

/// 64-bit FNV-1a of a file's bytes, used as mesh provenance in run manifests.
inline std::uint64_t file_hash(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    std::uint64_t h = 1469598103934665603ULL;
    for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace chho
