#pragma once

// Plain-text mesh format, whitespace separated with 1-based indices:
//
//   $Nodes
//   <count>
//   <id> <x> <y>
//   $Triangles
//   <count>
//   <id> <v1> <v2> <v3> <region_tag>
//   $BoundaryEdges
//   <count>
//   <id> <v1> <v2> <boundary_tag>

#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace defeat {

namespace detail {

class LineReader {
public:
    explicit LineReader(std::istream &in) : in_(in) {}

    // Next non-blank line; false on end of stream.
    bool next(std::string &line)
    {
        while (std::getline(in_, line)) {
            ++number_;
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                return true;
        }
        return false;
    }

    int number() const { return number_; }

    [[noreturn]] void fail(const std::string &what) const
    {
        throw MeshError("line " + std::to_string(number_) + ": " + what);
    }

private:
    std::istream &in_;
    int number_ = 0;
};

inline std::vector<std::string> split_ws(const std::string &line)
{
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok)
        out.push_back(tok);
    return out;
}

template <typename T>
bool parse_number(const std::string &tok, T &value)
{
    if constexpr (std::is_floating_point_v<T>) {
        // from_chars for doubles is fine on libstdc++ >= 11, but strtod
        // also accepts forms like "1e-3" with a leading '+'.
        char *end = nullptr;
        value = std::strtod(tok.c_str(), &end);
        return end != tok.c_str() && *end == '\0';
    } else {
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        return ec == std::errc() && ptr == tok.data() + tok.size();
    }
}

} // namespace detail

/// Reads a mesh and checks every Mesh invariant. Errors carry the line
/// number of the offending record.
inline Mesh parse_mesh(std::istream &in)
{
    using detail::split_ws;
    detail::LineReader reader(in);
    Mesh mesh;
    std::vector<int> tri_lines, edge_lines;
    bool seen_nodes = false, seen_tris = false, seen_edges = false;

    std::string line;
    bool have_line = reader.next(line);
    while (have_line) {
        const auto head = split_ws(line);
        if (head.size() != 1 || head[0].empty() || head[0][0] != '$')
            reader.fail("expected section header, got '" + line + "'");
        const std::string section = head[0];
        bool *seen = nullptr;
        std::size_t fields = 0;
        if (section == "$Nodes") {
            seen = &seen_nodes;
            fields = 3;
        } else if (section == "$Triangles") {
            seen = &seen_tris;
            fields = 5;
        } else if (section == "$BoundaryEdges") {
            seen = &seen_edges;
            fields = 4;
        } else {
            reader.fail("unknown section '" + section + "'");
        }
        if (*seen)
            reader.fail("duplicate section '" + section + "'");
        *seen = true;

        if (!reader.next(line))
            reader.fail("missing count for section '" + section + "'");
        const auto count_tok = split_ws(line);
        long long count = -1;
        if (count_tok.size() != 1 || !detail::parse_number(count_tok[0], count) || count < 0)
            reader.fail("malformed count '" + line + "'");

        std::vector<char> id_seen(static_cast<std::size_t>(count), 0);
        for (long long i = 0; i < count; ++i) {
            if (!reader.next(line))
                reader.fail("section '" + section + "' ended after " + std::to_string(i) +
                            " of " + std::to_string(count) + " records");
            const auto tok = split_ws(line);
            if (!tok.empty() && tok[0][0] == '$')
                reader.fail("section '" + section + "' has fewer records than its count");
            if (tok.size() != fields)
                reader.fail("expected " + std::to_string(fields) + " fields");
            long long id = 0;
            if (!detail::parse_number(tok[0], id) || id < 1 || id > count)
                reader.fail("record id out of range");
            if (id_seen[id - 1]++)
                reader.fail("duplicate record id " + tok[0]);
            const auto slot = static_cast<std::size_t>(id - 1);
            if (section == "$Nodes") {
                mesh.vertices.resize(static_cast<std::size_t>(count));
                Vec2 p;
                if (!detail::parse_number(tok[1], p.x) || !detail::parse_number(tok[2], p.y))
                    reader.fail("malformed coordinate");
                mesh.vertices[slot] = p;
            } else if (section == "$Triangles") {
                mesh.triangles.resize(static_cast<std::size_t>(count));
                tri_lines.resize(static_cast<std::size_t>(count));
                Triangle t;
                for (int k = 0; k < 3; ++k) {
                    if (!detail::parse_number(tok[1 + k], t.v[k]))
                        reader.fail("malformed vertex index");
                    t.v[k] -= 1;
                }
                if (!detail::parse_number(tok[4], t.region))
                    reader.fail("malformed region tag");
                mesh.triangles[slot] = t;
                tri_lines[slot] = reader.number();
            } else {
                mesh.boundary_edges.resize(static_cast<std::size_t>(count));
                edge_lines.resize(static_cast<std::size_t>(count));
                BoundaryEdge e;
                for (int k = 0; k < 2; ++k) {
                    if (!detail::parse_number(tok[1 + k], e.v[k]))
                        reader.fail("malformed vertex index");
                    e.v[k] -= 1;
                }
                if (!detail::parse_number(tok[3], e.tag))
                    reader.fail("malformed boundary tag");
                mesh.boundary_edges[slot] = e;
                edge_lines[slot] = reader.number();
            }
        }
        have_line = reader.next(line);
        if (have_line && line.find('$') == std::string::npos)
            reader.fail("section '" + section + "' has more records than its count");
    }
    if (!seen_nodes || !seen_tris || !seen_edges)
        throw MeshError("mesh is missing a required section");

    const int nv = static_cast<int>(mesh.vertices.size());
    auto at_line = [](int l, const std::string &what) {
        return MeshError("line " + std::to_string(l) + ": " + what);
    };
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int v : mesh.triangles[t].v)
            if (v < 0 || v >= nv)
                throw at_line(tri_lines[t], "vertex index out of range");
        if (!(mesh.signed_area(t) > 0.0))
            throw at_line(tri_lines[t], "triangle has non-positive area (clockwise or degenerate)");
    }
    for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i)
        for (int v : mesh.boundary_edges[i].v)
            if (v < 0 || v >= nv)
                throw at_line(edge_lines[i], "vertex index out of range");
    validate_mesh(mesh);
    return mesh;
}

inline Mesh parse_mesh(const std::string &text)
{
    std::istringstream in(text);
    return parse_mesh(in);
}

inline void write_mesh(std::ostream &out, const Mesh &mesh)
{
    const auto old_precision = out.precision();
    out << std::setprecision(17);
    out << "$Nodes\n" << mesh.vertices.size() << '\n';
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        out << i + 1 << ' ' << mesh.vertices[i].x << ' ' << mesh.vertices[i].y << '\n';
    out << "$Triangles\n" << mesh.triangles.size() << '\n';
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto &t = mesh.triangles[i];
        out << i + 1 << ' ' << t.v[0] + 1 << ' ' << t.v[1] + 1 << ' ' << t.v[2] + 1 << ' '
            << t.region << '\n';
    }
    out << "$BoundaryEdges\n" << mesh.boundary_edges.size() << '\n';
    for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
        const auto &e = mesh.boundary_edges[i];
        out << i + 1 << ' ' << e.v[0] + 1 << ' ' << e.v[1] + 1 << ' ' << e.tag << '\n';
    }
    out.precision(old_precision);
}

} // namespace defeat
