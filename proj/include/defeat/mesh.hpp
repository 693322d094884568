#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core.hpp"

namespace defeat {

struct Triangle {
    std::array<int, 3> v{};
    int region = 0;
};

struct BoundaryEdge {
    std::array<int, 2> v{};
    int tag = 0;
};

/// Unordered vertex pair packed into a single key.
inline std::uint64_t edge_key(int a, int b)
{
    if (a > b)
        std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

/// Triangulation of a planar domain with region-tagged triangles and
/// tagged boundary edges.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<BoundaryEdge> boundary_edges;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    std::array<Vec2, 3> corners(std::size_t t) const
    {
        const auto &tri = triangles[t].v;
        return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
    }

    double signed_area(std::size_t t) const
    {
        const auto c = corners(t);
        return 0.5 * orient2d(c[0], c[1], c[2]);
    }

    double area() const
    {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t)
            a += signed_area(t);
        return a;
    }

    double boundary_length() const
    {
        double l = 0.0;
        for (const auto &e : boundary_edges)
            l += distance(vertices[e.v[0]], vertices[e.v[1]]);
        return l;
    }

    Vec2 centroid(std::size_t t) const
    {
        const auto c = corners(t);
        return (1.0 / 3.0) * (c[0] + c[1] + c[2]);
    }
};

/// Edge-to-triangle incidence: for every edge, the (up to two) triangles
/// containing it together with the local edge index.
class EdgeTopology {
public:
    struct Incidence {
        int edge = -1;
        std::array<int, 2> triangles{-1, -1};
    };

    explicit EdgeTopology(const Mesh &mesh)
    {
        triangle_edges_.resize(mesh.triangles.size());
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            const auto &v = mesh.triangles[t].v;
            for (int k = 0; k < 3; ++k) {
                const int a = v[k];
                const int b = v[(k + 1) % 3];
                auto [it, inserted] = index_.try_emplace(edge_key(a, b), static_cast<int>(edges_.size()));
                if (inserted) {
                    edges_.push_back({std::min(a, b), std::max(a, b)});
                    incidence_.push_back({it->second, {static_cast<int>(t), -1}});
                } else {
                    auto &inc = incidence_[it->second];
                    if (inc.triangles[1] != -1)
                        throw MeshError("edge shared by more than two triangles");
                    inc.triangles[1] = static_cast<int>(t);
                }
                triangle_edges_[t][k] = it->second;
            }
        }
    }

    std::size_t num_edges() const { return edges_.size(); }
    const std::array<int, 2> &edge(int e) const { return edges_[e]; }
    const Incidence &incidence(int e) const { return incidence_[e]; }

    /// Local edge k of triangle t joins local vertices k and (k+1)%3.
    int triangle_edge(std::size_t t, int k) const { return triangle_edges_[t][k]; }

    int find(int a, int b) const
    {
        auto it = index_.find(edge_key(a, b));
        return it == index_.end() ? -1 : it->second;
    }

    bool is_boundary(int e) const { return incidence_[e].triangles[1] == -1; }

private:
    std::unordered_map<std::uint64_t, int> index_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<Incidence> incidence_;
    std::vector<std::array<int, 3>> triangle_edges_;
};

/// Throws MeshError describing the first violated invariant.
inline void validate_mesh(const Mesh &mesh)
{
    const int nv = static_cast<int>(mesh.vertices.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int v : mesh.triangles[t].v)
            if (v < 0 || v >= nv)
                throw MeshError("triangle " + std::to_string(t) + " has out-of-range vertex");
        if (!(mesh.signed_area(t) > 0.0))
            throw MeshError("triangle " + std::to_string(t) + " has non-positive area");
    }
    const EdgeTopology topo(mesh);
    std::unordered_map<std::uint64_t, int> listed;
    for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
        const auto &be = mesh.boundary_edges[i];
        for (int v : be.v)
            if (v < 0 || v >= nv)
                throw MeshError("boundary edge " + std::to_string(i) + " has out-of-range vertex");
        const int e = topo.find(be.v[0], be.v[1]);
        if (e < 0 || !topo.is_boundary(e))
            throw MeshError("boundary edge " + std::to_string(i) +
                            " does not belong to exactly one triangle");
        if (!listed.emplace(edge_key(be.v[0], be.v[1]), 1).second)
            throw MeshError("boundary edge " + std::to_string(i) + " listed twice");
    }
    std::size_t topological = 0;
    for (std::size_t e = 0; e < topo.num_edges(); ++e)
        topological += topo.is_boundary(static_cast<int>(e)) ? 1 : 0;
    if (topological != mesh.boundary_edges.size())
        throw MeshError("boundary edge list does not cover the topological boundary");
}

/// All edges lying on the topological boundary, oriented so that the
/// adjacent triangle is on their left.
inline std::vector<std::array<int, 2>> topological_boundary(const Mesh &mesh)
{
    const EdgeTopology topo(mesh);
    std::vector<std::array<int, 2>> out;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto &v = mesh.triangles[t].v;
        for (int k = 0; k < 3; ++k)
            if (topo.is_boundary(topo.triangle_edge(t, k)))
                out.push_back({v[k], v[(k + 1) % 3]});
    }
    return out;
}

} // namespace defeat
