#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mesh.hpp"

namespace defeat {

enum class FeatureKind { Neumann, DirichletDirichlet, DirichletNeumann, DirichletInternal };

inline std::string to_string(FeatureKind k)
{
    switch (k) {
    case FeatureKind::Neumann: return "neumann";
    case FeatureKind::DirichletDirichlet: return "dirichlet_dirichlet";
    case FeatureKind::DirichletNeumann: return "dirichlet_neumann";
    case FeatureKind::DirichletInternal: return "dirichlet_internal";
    }
    return "unknown";
}

inline bool is_dirichlet(FeatureKind k) { return k != FeatureKind::Neumann; }

/// Boundary and region tag conventions shared by the built-in geometries.
namespace tags {
inline constexpr int bottom = 1;
inline constexpr int right = 2;
inline constexpr int top = 3;
inline constexpr int left = 4;
inline constexpr int bulk_region = 0;
inline constexpr int qoi_region = 1;
inline constexpr int gamma(int feature_id) { return 10 + feature_id; }
inline constexpr int gamma0(int feature_id) { return 20 + feature_id; }
inline constexpr int feature_region(int feature_id) { return 100 + feature_id; }
inline constexpr bool is_feature_region(int region) { return region >= 100; }
} // namespace tags

struct Feature {
    int id = 1;
    FeatureKind kind = FeatureKind::Neumann;
    int gamma_tag = 0;
    std::optional<int> gamma0_tag;
    Vec2 barycenter;
    double diameter = 0.0;
    double dist_to_rest = 0.0;
    // Vertex sequence of the defeatured boundary, in exact-mesh numbering.
    // Closed chains do not repeat the first vertex.
    std::vector<int> chain_vertices;
    bool closed = false;
};

/// Exact and defeatured triangulations sharing all elements outside the
/// features. Vertex indices of the exact mesh map injectively into the
/// defeatured mesh; triangle t of the exact mesh is triangle
/// exact_to_defeatured_triangle[t] of the defeatured mesh.
struct MeshPair {
    std::shared_ptr<const Mesh> exact;
    std::shared_ptr<const Mesh> defeatured;
    std::vector<int> shared_vertex_map;
    std::vector<int> exact_to_defeatured_triangle;
    std::vector<Feature> features;

    const Feature &feature(int id) const
    {
        for (const auto &f : features)
            if (f.id == id)
                return f;
        throw GeometryError("unknown feature id " + std::to_string(id));
    }
};

enum class MeshSide { Exact, Defeatured };

/// Ordered edge chain on one mesh. Each edge is oriented along the chain;
/// `normal` points out of the exact domain and `triangle` is the adjacent
/// triangle on the exact-domain side.
struct BoundaryChain {
    struct Edge {
        int a = -1;
        int b = -1;
        int triangle = -1;
        Vec2 normal;
        double length = 0.0;
        double s0 = 0.0;
    };

    std::shared_ptr<const Mesh> mesh;
    std::vector<Edge> edges;
    bool closed = false;
    double measure = 0.0;

    Vec2 tangent(const Edge &e) const
    {
        const Vec2 d = mesh->vertices[e.b] - mesh->vertices[e.a];
        return (1.0 / e.length) * d;
    }
};

/// The feature's defeatured boundary as a chain on either mesh of the pair.
inline BoundaryChain make_chain(const MeshPair &pair, int feature_id, MeshSide side)
{
    const Feature &f = pair.feature(feature_id);
    BoundaryChain chain;
    chain.mesh = side == MeshSide::Exact ? pair.exact : pair.defeatured;
    chain.closed = f.closed;
    const Mesh &mesh = *chain.mesh;
    const EdgeTopology topo(mesh);

    std::vector<int> seq = f.chain_vertices;
    if (side == MeshSide::Defeatured)
        for (int &v : seq)
            v = pair.shared_vertex_map[v];

    const std::size_t n_edges = f.closed ? seq.size() : seq.size() - 1;
    double s = 0.0;
    for (std::size_t k = 0; k < n_edges; ++k) {
        BoundaryChain::Edge e;
        e.a = seq[k];
        e.b = seq[(k + 1) % seq.size()];
        const int edge = topo.find(e.a, e.b);
        if (edge < 0)
            throw GeometryError("feature chain edge missing from mesh");
        const auto &inc = topo.incidence(edge);
        for (int t : inc.triangles) {
            if (t < 0)
                continue;
            if (!tags::is_feature_region(mesh.triangles[t].region)) {
                e.triangle = t;
                break;
            }
        }
        if (e.triangle < 0)
            throw GeometryError("feature chain edge has no adjacent exact-domain triangle");
        const Vec2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
        e.length = distance(pa, pb);
        Vec2 nrm{(pb - pa).y / e.length, -(pb - pa).x / e.length};
        // Third vertex of the exact-side triangle lies inside the exact domain.
        const auto &tv = mesh.triangles[e.triangle].v;
        int third = tv[0];
        for (int v : tv)
            if (v != e.a && v != e.b)
                third = v;
        if (dot(nrm, mesh.vertices[third] - pa) > 0.0)
            nrm = -nrm;
        e.normal = nrm;
        e.s0 = s;
        s += e.length;
        chain.edges.push_back(e);
    }
    chain.measure = s;
    return chain;
}

/// Chain built from all boundary edges carrying `tag` on a mesh; normals
/// point out of that mesh. Used for outer boundary pieces.
inline BoundaryChain make_boundary_chain(std::shared_ptr<const Mesh> mesh, int tag)
{
    std::vector<std::array<int, 2>> edges;
    for (const auto &be : mesh->boundary_edges)
        if (be.tag == tag)
            edges.push_back(be.v);
    if (edges.empty())
        throw GeometryError("no boundary edges with tag " + std::to_string(tag));
    const EdgeTopology topo(*mesh);
    BoundaryChain chain;
    chain.mesh = mesh;
    double s = 0.0;
    // Pieces need not be connected for quadrature purposes; keep list order.
    for (const auto &ev : edges) {
        BoundaryChain::Edge e;
        e.a = ev[0];
        e.b = ev[1];
        const int edge = topo.find(e.a, e.b);
        e.triangle = topo.incidence(edge).triangles[0];
        const Vec2 pa = mesh->vertices[e.a], pb = mesh->vertices[e.b];
        e.length = distance(pa, pb);
        Vec2 nrm{(pb - pa).y / e.length, -(pb - pa).x / e.length};
        const auto &tv = mesh->triangles[e.triangle].v;
        int third = tv[0];
        for (int v : tv)
            if (v != e.a && v != e.b)
                third = v;
        if (dot(nrm, mesh->vertices[third] - pa) > 0.0)
            nrm = -nrm;
        e.normal = nrm;
        e.s0 = s;
        s += e.length;
        chain.edges.push_back(e);
    }
    chain.measure = s;
    return chain;
}

struct FeatureGeometry {
    BoundaryChain chain;
    double measure = 0.0;
    double diameter = 0.0;
    Vec2 barycenter;
    double dist_to_rest = 0.0;
};

inline Vec2 feature_barycenter(const Mesh &defeatured, int feature_id)
{
    double area = 0.0;
    Vec2 m;
    for (std::size_t t = 0; t < defeatured.triangles.size(); ++t) {
        if (defeatured.triangles[t].region != tags::feature_region(feature_id))
            continue;
        const double a = defeatured.signed_area(t);
        area += a;
        m += a * defeatured.centroid(t);
    }
    if (area <= 0.0)
        throw GeometryError("feature has no triangles");
    return (1.0 / area) * m;
}

inline double chain_diameter(const Mesh &mesh, const std::vector<int> &vertices)
{
    double d = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t j = i + 1; j < vertices.size(); ++j)
            d = std::max(d, distance(mesh.vertices[vertices[i]], mesh.vertices[vertices[j]]));
    return d;
}

inline double distance_to_rest(const Mesh &exact, const Vec2 &p, int gamma_tag)
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto &be : exact.boundary_edges)
        if (be.tag != gamma_tag)
            d = std::min(d, point_segment_distance(p, exact.vertices[be.v[0]], exact.vertices[be.v[1]]));
    return d;
}

inline FeatureGeometry feature_geometry(const MeshPair &pair, int feature_id)
{
    const Feature &f = pair.feature(feature_id);
    FeatureGeometry g;
    g.chain = make_chain(pair, feature_id, MeshSide::Exact);
    g.measure = g.chain.measure;
    g.diameter = chain_diameter(*pair.exact, f.chain_vertices);
    g.barycenter = feature_barycenter(*pair.defeatured, feature_id);
    g.dist_to_rest = distance_to_rest(*pair.exact, g.barycenter, f.gamma_tag);
    return g;
}

inline void validate_pair(const MeshPair &pair);

struct FeatureSpec {
    int id = 1;
    FeatureKind kind = FeatureKind::Neumann;
};

namespace detail {

// Orders an edge set into a single path or loop. Paths start at their
// smaller endpoint, loops at their smallest vertex.
inline std::vector<int> order_chain(const std::vector<std::array<int, 2>> &edges, bool &closed)
{
    if (edges.empty())
        throw GeometryError("empty feature chain");
    std::unordered_map<int, std::vector<int>> adj;
    for (const auto &e : edges) {
        adj[e[0]].push_back(e[1]);
        adj[e[1]].push_back(e[0]);
    }
    int start = std::numeric_limits<int>::max();
    int endpoints = 0;
    for (const auto &[v, nb] : adj) {
        if (nb.size() > 2)
            throw GeometryError("feature chain branches");
        if (nb.size() == 1) {
            ++endpoints;
            start = std::min(start, v);
        }
    }
    if (endpoints != 0 && endpoints != 2)
        throw GeometryError("feature chain is not a single path");
    closed = endpoints == 0;
    if (closed)
        for (const auto &[v, nb] : adj)
            start = std::min(start, v);
    std::vector<int> seq{start};
    int prev = -1, cur = start;
    while (true) {
        const auto &nb = adj[cur];
        int next = -1;
        for (int w : nb)
            if (w != prev && (next < 0 || (prev < 0 && w < next)))
                next = w;
        if (next < 0 || (closed && next == start))
            break;
        seq.push_back(next);
        prev = cur;
        cur = next;
    }
    if (seq.size() != (closed ? edges.size() : edges.size() + 1))
        throw GeometryError("feature chain is disconnected");
    return seq;
}

} // namespace detail

/// Derives the exact mesh and feature data from a defeatured mesh whose
/// feature triangles carry region tags::feature_region(id). Feature edges
/// on the outer boundary of the defeatured mesh form the simplified
/// boundary; feature edges shared with the exact domain form gamma and are
/// tagged tags::gamma(id) in the exact mesh.
inline MeshPair make_mesh_pair(std::shared_ptr<const Mesh> defeatured, const std::vector<FeatureSpec> &specs)
{
    const Mesh &df = *defeatured;
    validate_mesh(df);
    const EdgeTopology topo(df);
    MeshPair pair;
    pair.defeatured = defeatured;

    auto exact = std::make_shared<Mesh>();
    std::vector<int> to_exact(df.vertices.size(), -1);
    for (std::size_t t = 0; t < df.triangles.size(); ++t) {
        if (tags::is_feature_region(df.triangles[t].region))
            continue;
        Triangle et = df.triangles[t];
        for (int &v : et.v) {
            if (to_exact[v] < 0) {
                to_exact[v] = static_cast<int>(exact->vertices.size());
                exact->vertices.push_back(df.vertices[v]);
                pair.shared_vertex_map.push_back(v);
            }
            v = to_exact[v];
        }
        exact->triangles.push_back(et);
        pair.exact_to_defeatured_triangle.push_back(static_cast<int>(t));
    }

    std::unordered_map<std::uint64_t, int> df_tag;
    for (const auto &be : df.boundary_edges)
        df_tag[edge_key(be.v[0], be.v[1])] = be.tag;

    std::unordered_map<std::uint64_t, int> gamma_tag_of;
    for (const auto &spec : specs) {
        const int region = tags::feature_region(spec.id);
        std::vector<std::array<int, 2>> gamma_edges;
        std::optional<int> gamma0;
        bool has_triangles = false;
        for (std::size_t e = 0; e < topo.num_edges(); ++e) {
            const auto &inc = topo.incidence(static_cast<int>(e));
            const int r0 = df.triangles[inc.triangles[0]].region;
            const int r1 = inc.triangles[1] >= 0 ? df.triangles[inc.triangles[1]].region : -1;
            if (r0 != region && r1 != region)
                continue;
            has_triangles = true;
            if (inc.triangles[1] < 0) {
                const int tag = df_tag.at(edge_key(topo.edge(static_cast<int>(e))[0], topo.edge(static_cast<int>(e))[1]));
                if (gamma0 && *gamma0 != tag)
                    throw GeometryError("simplified boundary carries several tags");
                gamma0 = tag;
            } else if (r0 != r1) {
                const int other = r0 == region ? r1 : r0;
                if (tags::is_feature_region(other))
                    throw GeometryError("features are not separated");
                gamma_edges.push_back(topo.edge(static_cast<int>(e)));
            }
        }
        if (!has_triangles || gamma_edges.empty())
            throw GeometryError("feature " + std::to_string(spec.id) + " has no defeatured boundary");
        if (spec.kind == FeatureKind::DirichletInternal && gamma0)
            throw GeometryError("internal feature touches the outer boundary");
        Feature f;
        f.id = spec.id;
        f.kind = spec.kind;
        f.gamma_tag = tags::gamma(spec.id);
        f.gamma0_tag = gamma0;
        const auto seq = detail::order_chain(gamma_edges, f.closed);
        for (int v : seq)
            f.chain_vertices.push_back(to_exact[v]);
        for (const auto &e : gamma_edges)
            gamma_tag_of[edge_key(to_exact[e[0]], to_exact[e[1]])] = f.gamma_tag;
        pair.features.push_back(f);
    }

    for (const auto &e : topological_boundary(*exact)) {
        const auto key = edge_key(e[0], e[1]);
        if (auto it = gamma_tag_of.find(key); it != gamma_tag_of.end()) {
            exact->boundary_edges.push_back({e, it->second});
            continue;
        }
        const auto df_key = edge_key(pair.shared_vertex_map[e[0]], pair.shared_vertex_map[e[1]]);
        auto it = df_tag.find(df_key);
        if (it == df_tag.end())
            throw GeometryError("exact boundary edge is neither outer boundary nor feature boundary");
        exact->boundary_edges.push_back({e, it->second});
    }
    pair.exact = exact;

    for (auto &f : pair.features) {
        f.barycenter = feature_barycenter(df, f.id);
        f.diameter = chain_diameter(*exact, f.chain_vertices);
        f.dist_to_rest = distance_to_rest(*exact, f.barycenter, f.gamma_tag);
    }
    validate_pair(pair);
    return pair;
}

/// Throws GeometryError when a MeshPair invariant is violated.
inline void validate_pair(const MeshPair &pair)
{
    validate_mesh(*pair.exact);
    validate_mesh(*pair.defeatured);
    const Mesh &ex = *pair.exact;
    const Mesh &df = *pair.defeatured;
    if (pair.shared_vertex_map.size() != ex.vertices.size())
        throw GeometryError("shared vertex map has wrong size");
    std::unordered_set<int> image;
    for (std::size_t i = 0; i < ex.vertices.size(); ++i) {
        const int j = pair.shared_vertex_map[i];
        if (j < 0 || j >= static_cast<int>(df.vertices.size()) || !image.insert(j).second)
            throw GeometryError("shared vertex map is not injective");
        if (!(ex.vertices[i] == df.vertices[j]))
            throw GeometryError("shared vertex coordinates differ");
    }
    std::vector<char> used(df.triangles.size(), 0);
    for (std::size_t t = 0; t < ex.triangles.size(); ++t) {
        const int u = pair.exact_to_defeatured_triangle[t];
        for (int k = 0; k < 3; ++k)
            if (!(ex.vertices[ex.triangles[t].v[k]] == df.vertices[df.triangles[u].v[k]]))
                throw GeometryError("exact triangle not reproduced in defeatured mesh");
        used[u] = 1;
    }
    for (std::size_t u = 0; u < df.triangles.size(); ++u)
        if (!used[u] && !tags::is_feature_region(df.triangles[u].region))
            throw GeometryError("unmapped defeatured triangle outside features");
    std::unordered_set<int> chain_vertices;
    for (const auto &f : pair.features) {
        if (f.kind == FeatureKind::DirichletInternal && (f.gamma0_tag || !(f.dist_to_rest > 0.0)))
            throw GeometryError("internal feature with simplified boundary or zero clearance");
        if (!(f.diameter > 0.0) || f.chain_vertices.size() < 2)
            throw GeometryError("degenerate feature");
        for (int v : f.chain_vertices)
            if (!chain_vertices.insert(v).second)
                throw GeometryError("feature chains are not separated");
    }
}

} // namespace defeat
