#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "assembly.hpp"
#include "mesh_pair.hpp"

namespace defeat {

namespace detail {

struct StrainState {
    double exx = 0.0, eyy = 0.0, exy = 0.0;
    double div() const { return exx + eyy; }
};

inline StrainState strain(const Vec2 &gx, const Vec2 &gy)
{
    return {gx.x, gy.y, 0.5 * (gx.y + gy.x)};
}

// sigma(u):eps(u) = 2 mu eps:eps + lambda (div u)^2
inline double elastic_density(const Material &m, const StrainState &e)
{
    const double ee = e.exx * e.exx + e.eyy * e.eyy + 2.0 * e.exy * e.exy;
    return 2.0 * m.mu * ee + m.lambda * e.div() * e.div();
}

// sigma(u) n for the gradients of both velocity components.
inline Vec2 traction(const Material &m, const Vec2 &gx, const Vec2 &gy, const Vec2 &n)
{
    const StrainState e = strain(gx, gy);
    const double sxx = 2.0 * m.mu * e.exx + m.lambda * e.div();
    const double syy = 2.0 * m.mu * e.eyy + m.lambda * e.div();
    const double sxy = 2.0 * m.mu * e.exy;
    return {sxx * n.x + sxy * n.y, sxy * n.x + syy * n.y};
}

} // namespace detail

/// Energy norm of a field (or a difference of fields) for the model:
/// H1 seminorm (Poisson), (int sigma:eps)^(1/2) (elasticity),
/// a(v,v)^(1/2) + ||q|| (Stokes). Exact for the field's polynomial degree.
inline double energy_norm(const ProblemSpec &problem, const DiscreteField &f)
{
    const Mesh &mesh = f.mesh();
    const auto &rule = triangle_rule_deg4();
    double a = 0.0, q2 = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh, t);
        for (const auto &qp : rule) {
            const double w = qp.weight * g.area;
            if (problem.model == Model::Poisson) {
                const Vec2 grad = f.gradient(t, g, qp.bary);
                a += w * dot(grad, grad);
            } else {
                const auto e = detail::strain(f.gradient(t, g, qp.bary, 0), f.gradient(t, g, qp.bary, 1));
                a += w * detail::elastic_density(problem.material, e);
                if (problem.model == Model::Stokes) {
                    const double p = f.pressure(t, qp.bary);
                    q2 += w * p * p;
                }
            }
        }
    }
    return std::sqrt(std::max(a, 0.0)) + std::sqrt(q2);
}

/// Energy inner product a(u, v) (velocity part only for Stokes).
inline double energy_product(const ProblemSpec &problem, const DiscreteField &u, const DiscreteField &v)
{
    const Mesh &mesh = u.mesh();
    double a = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh, t);
        for (const auto &qp : triangle_rule_deg4()) {
            const double w = qp.weight * g.area;
            if (problem.model == Model::Poisson) {
                a += w * dot(u.gradient(t, g, qp.bary), v.gradient(t, g, qp.bary));
            } else {
                const auto eu = detail::strain(u.gradient(t, g, qp.bary, 0), u.gradient(t, g, qp.bary, 1));
                const auto ev = detail::strain(v.gradient(t, g, qp.bary, 0), v.gradient(t, g, qp.bary, 1));
                const double ee = eu.exx * ev.exx + eu.eyy * ev.eyy + 2.0 * eu.exy * ev.exy;
                a += w * (2.0 * problem.material.mu * ee + problem.material.lambda * eu.div() * ev.div());
            }
        }
    }
    return a;
}

/// Error of the gradient of a scalar field against an exact gradient,
/// integrated with a high-order rule.
inline double gradient_error(const DiscreteField &f, const std::function<Vec2(const Vec2 &)> &exact_grad)
{
    const Mesh &mesh = f.mesh();
    static const auto rule = triangle_rule_collapsed(6);
    double e2 = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh, t);
        for (const auto &qp : rule) {
            const Vec2 d = f.gradient(t, g, qp.bary) - exact_grad(g.point(qp.bary));
            e2 += qp.weight * g.area * dot(d, d);
        }
    }
    return std::sqrt(e2);
}

/// Values of a field (or of derived quantities) at the 3 Gauss points of
/// every edge of a boundary chain.
struct BoundaryField {
    std::shared_ptr<const BoundaryChain> chain;
    int arity = 1;
    std::vector<Vec2> points;
    std::vector<double> weights;
    std::vector<double> arc;
    std::vector<int> edge;
    std::vector<std::array<double, 2>> values;
    std::vector<std::array<double, 2>> tangential;

    std::size_t size() const { return points.size(); }
    double measure() const
    {
        double m = 0.0;
        for (double w : weights)
            m += w;
        return m;
    }
};

/// Quadrature skeleton of a chain; values left at zero.
inline BoundaryField boundary_field_on(std::shared_ptr<const BoundaryChain> chain, int arity)
{
    BoundaryField bf;
    bf.chain = chain;
    bf.arity = arity;
    const Mesh &mesh = *chain->mesh;
    for (std::size_t k = 0; k < chain->edges.size(); ++k) {
        const auto &e = chain->edges[k];
        const Vec2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
        for (const auto &[s, w] : edge_rule()) {
            bf.points.push_back(pa + s * (pb - pa));
            bf.weights.push_back(w * e.length);
            bf.arc.push_back(e.s0 + s * e.length);
            bf.edge.push_back(static_cast<int>(k));
            bf.values.push_back({0.0, 0.0});
            bf.tangential.push_back({0.0, 0.0});
        }
    }
    return bf;
}

namespace detail {

inline void check_chain_mesh(const DiscreteField &f, const BoundaryChain &chain)
{
    if (chain.mesh.get() != &f.mesh())
        throw FemError("boundary chain does not lie on the field's mesh");
}

} // namespace detail

/// Trace of the primal components and their tangential derivatives.
inline BoundaryField boundary_trace(const DiscreteField &f, std::shared_ptr<const BoundaryChain> chain)
{
    detail::check_chain_mesh(f, *chain);
    BoundaryField bf = boundary_field_on(chain, f.space->components());
    const Mesh &mesh = f.mesh();
    for (std::size_t q = 0; q < bf.size(); ++q) {
        const auto &e = chain->edges[static_cast<std::size_t>(bf.edge[q])];
        const ElementGeometry g(mesh, static_cast<std::size_t>(e.triangle));
        const auto l = g.barycentric(bf.points[q]);
        const Vec2 tau = chain->tangent(e);
        for (int c = 0; c < bf.arity; ++c) {
            bf.values[q][c] = f.value(static_cast<std::size_t>(e.triangle), l, c);
            bf.tangential[q][c] = dot(f.gradient(static_cast<std::size_t>(e.triangle), g, l, c), tau);
        }
    }
    return bf;
}

/// Conormal trace from the adjacent element: du/dn, sigma(u) n, or
/// sigma(u) n - p n, with the chain's normal.
inline BoundaryField normal_flux(const ProblemSpec &problem, const DiscreteField &f,
                                 std::shared_ptr<const BoundaryChain> chain)
{
    detail::check_chain_mesh(f, *chain);
    BoundaryField bf = boundary_field_on(chain, problem.arity());
    const Mesh &mesh = f.mesh();
    for (std::size_t q = 0; q < bf.size(); ++q) {
        const auto &e = chain->edges[static_cast<std::size_t>(bf.edge[q])];
        if (e.triangle < 0)
            throw FemError("chain edge has no adjacent interior triangle");
        const auto t = static_cast<std::size_t>(e.triangle);
        const ElementGeometry g(mesh, t);
        const auto l = g.barycentric(bf.points[q]);
        if (problem.model == Model::Poisson) {
            bf.values[q][0] = dot(f.gradient(t, g, l), e.normal);
        } else {
            Vec2 s = detail::traction(problem.material, f.gradient(t, g, l, 0), f.gradient(t, g, l, 1), e.normal);
            if (problem.model == Model::Stokes)
                s -= f.pressure(t, l) * e.normal;
            bf.values[q] = {s.x, s.y};
        }
    }
    return bf;
}

/// Restriction of a field on the defeatured mesh to the exact mesh of the
/// pair (shared nodes carry identical coefficients).
inline DiscreteField restrict_field(const DiscreteField &f, const MeshPair &pair,
                                    std::shared_ptr<const FeSpace> exact_space = nullptr)
{
    if (f.space->mesh_ptr() != pair.defeatured)
        throw FemError("field does not live on the defeatured mesh of the pair");
    if (!exact_space)
        exact_space = std::make_shared<const FeSpace>(pair.exact, f.space->kind());
    if (exact_space->kind() != f.space->kind() || exact_space->mesh_ptr() != pair.exact)
        throw FemError("target space does not match");
    const FeSpace &src = *f.space, &dst = *exact_space;
    const Mesh &ex = *pair.exact;
    std::vector<int> scalar_map(static_cast<std::size_t>(dst.scalar_size()));
    for (std::size_t v = 0; v < ex.vertices.size(); ++v)
        scalar_map[v] = pair.shared_vertex_map[v];
    if (dst.degree() == 2)
        for (std::size_t e = 0; e < dst.topology().num_edges(); ++e) {
            const auto &ev = dst.topology().edge(static_cast<int>(e));
            const int de = src.topology().find(pair.shared_vertex_map[ev[0]], pair.shared_vertex_map[ev[1]]);
            if (de < 0)
                throw GeometryError("exact edge missing from the defeatured mesh");
            scalar_map[static_cast<std::size_t>(dst.scalar_edge_dof(static_cast<int>(e)))] = src.scalar_edge_dof(de);
        }
    DiscreteField out = DiscreteField::zero(exact_space);
    for (int c = 0; c < dst.components(); ++c)
        for (int i = 0; i < dst.scalar_size(); ++i)
            out.coeffs[dst.component_offset(c) + i] = f.coeffs[src.component_offset(c) + scalar_map[static_cast<std::size_t>(i)]];
    if (dst.has_pressure())
        for (int i = 0; i < dst.pressure_size(); ++i)
            out.coeffs[dst.pressure_offset() + i] = f.coeffs[src.pressure_offset() + pair.shared_vertex_map[static_cast<std::size_t>(i)]];
    return out;
}

/// L2 norm of the projection of div u onto the continuous P1 space, i.e.
/// the divergence as seen by the Taylor-Hood pressure test functions.
inline double discrete_divergence_norm(const DiscreteField &f)
{
    if (f.space->components() != 2)
        throw FemError("divergence needs a vector field");
    const Mesh &mesh = f.mesh();
    const int n = static_cast<int>(mesh.vertices.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh, t);
        const auto &v = mesh.triangles[t].v;
        for (const auto &qp : triangle_rule_deg4()) {
            const double w = qp.weight * g.area;
            const double div = f.gradient(t, g, qp.bary, 0).x + f.gradient(t, g, qp.bary, 1).y;
            for (int i = 0; i < 3; ++i) {
                b[v[i]] += w * div * qp.bary[i];
                for (int j = 0; j < 3; ++j)
                    trip.emplace_back(v[i], v[j], w * qp.bary[i] * qp.bary[j]);
            }
        }
    }
    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
    const Eigen::VectorXd c = ldlt.solve(b);
    return std::sqrt(std::max(c.dot(b), 0.0));
}

} // namespace defeat
