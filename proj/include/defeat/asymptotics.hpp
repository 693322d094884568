#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include "goal.hpp"

namespace defeat {

/// (1/2pi) log|x - m|, the fundamental solution of the Laplacian.
inline double fundamental_solution(const Vec2 &m, const Vec2 &x)
{
    const double r = distance(x, m);
    if (!(r > 0.0))
        throw GeometryError("fundamental solution evaluated at its center");
    return std::log(r) / (2.0 * pi);
}

inline Vec2 fundamental_gradient(const Vec2 &m, const Vec2 &x)
{
    const Vec2 d = x - m;
    const double r2 = dot(d, d);
    if (!(r2 > 0.0))
        throw GeometryError("fundamental solution evaluated at its center");
    return (1.0 / (2.0 * pi * r2)) * d;
}

/// Triangle containing p (brute force), with its barycentrics.
inline std::optional<std::pair<std::size_t, std::array<double, 3>>> locate(const Mesh &mesh, const Vec2 &p,
                                                                            double tol = 1e-12)
{
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh, t);
        const auto l = g.barycentric(p);
        if (l[0] > -tol && l[1] > -tol && l[2] > -tol)
            return std::make_pair(t, l);
    }
    return std::nullopt;
}

/// G = Ghat + g on the defeatured mesh, with g the discrete harmonic
/// correction cancelling Ghat on the Dirichlet boundary and its normal
/// derivative on the Neumann boundary.
struct GreenCorrection {
    Vec2 center;
    DiscreteField g;

    double value(std::size_t t, const std::array<double, 3> &l, const Vec2 &p) const
    {
        return fundamental_solution(center, p) + g.value(t, l);
    }
    Vec2 gradient(std::size_t t, const ElementGeometry &eg, const std::array<double, 3> &l, const Vec2 &p) const
    {
        return fundamental_gradient(center, p) + g.gradient(t, eg, l);
    }
    double operator()(const Vec2 &p) const
    {
        const auto loc = locate(g.mesh(), p);
        if (!loc)
            throw GeometryError("point outside the mesh");
        return value(loc->first, loc->second, p);
    }
};

/// `partition` supplies the Dirichlet/Neumann split of the defeatured
/// boundary (its data are ignored); the problem is a scalar Laplacian.
inline GreenCorrection solve_green_correction(const ProblemSpec &partition, std::shared_ptr<const Mesh> mesh,
                                              const Vec2 &center, SpaceKind kind = SpaceKind::P2)
{
    if (!locate(*mesh, center))
        throw GeometryError("Green's function center lies outside the defeatured domain");
    char buf[160];
    std::snprintf(buf, sizeof buf, "-log((x - (%.17g))^2 + (y - (%.17g))^2) / (4 * pi)", center.x, center.y);
    const ExprField minus_ghat(Expression::parse(buf));

    ProblemSpec p;
    p.model = Model::Poisson;
    p.source = ExprField::scalar(0.0);
    std::set<int> neumann;
    for (const auto &e : mesh->boundary_edges) {
        const auto &bc = partition.condition(e.tag);
        p.boundary_conditions[e.tag] = bc.is_dirichlet() ? BoundaryCondition::dirichlet(minus_ghat)
                                                         : BoundaryCondition::neumann(ExprField::scalar(0.0));
        if (!bc.is_dirichlet())
            neumann.insert(e.tag);
    }
    validate_problem(p, *mesh);
    auto space = std::make_shared<const FeSpace>(mesh, kind);
    LinearSystem sys = assemble(p, space);

    // Neumann load -dGhat/dn, evaluated with the exact outward normal.
    const EdgeTopology &topo = space->topology();
    double n[6];
    Vec2 dn[6];
    for (const auto &e : mesh->boundary_edges) {
        if (!neumann.count(e.tag))
            continue;
        const int t = topo.incidence(topo.find(e.v[0], e.v[1])).triangles[0];
        const ElementGeometry g(*mesh, static_cast<std::size_t>(t));
        const auto d = space->scalar_dofs(static_cast<std::size_t>(t));
        const Vec2 pa = mesh->vertices[e.v[0]], pb = mesh->vertices[e.v[1]];
        const double len = distance(pa, pb);
        Vec2 normal{(pb - pa).y / len, -(pb - pa).x / len};
        if (dot(normal, g.point({1.0 / 3, 1.0 / 3, 1.0 / 3}) - pa) > 0.0)
            normal = -normal;
        for (const auto &[s, w] : edge_rule()) {
            const Vec2 x = pa + s * (pb - pa);
            const double h = -dot(fundamental_gradient(center, x), normal);
            detail::basis(*space, g, g.barycentric(x), n, dn);
            for (int i = 0; i < space->local_count(); ++i)
                sys.rhs[d[i]] += w * len * h * n[i];
        }
    }
    return {center, solve(sys)};
}

/// 2 pi / (log r + 2 pi gbar): the amplitude that cancels the mean of a
/// unit boundary mismatch on a disk of radius r, given the mean gbar of the
/// harmonic correction there.
inline double gauge_formula(double radius, double gbar)
{
    if (!(radius > 0.0))
        throw GeometryError("gauge radius must be positive");
    const double denom = std::log(radius) + 2.0 * pi * gbar;
    if (std::abs(denom) < 1e-12)
        throw GeometryError("gauge denominator vanishes");
    return 2.0 * pi / denom;
}

/// Gauge of a disk-like internal feature, with r = |gamma| / (2 pi) and
/// gbar the mean of g on gamma.
inline double gauge(const MeshPair &pair, int feature_id, const GreenCorrection &green)
{
    if (green.g.space->mesh_ptr() != pair.defeatured)
        throw GeometryError("Green's correction does not live on the defeatured mesh");
    auto chain = std::make_shared<const BoundaryChain>(make_chain(pair, feature_id, MeshSide::Defeatured));
    const double gbar = boundary_average(boundary_trace(green.g, chain))[0];
    return gauge_formula(chain->measure / (2.0 * pi), gbar);
}

/// field0 + coefficient * G, on the defeatured mesh.
struct FirstOrderField {
    DiscreteField base;
    double coefficient = 0.0;
    std::shared_ptr<const GreenCorrection> green;

    double value(std::size_t t, const std::array<double, 3> &l, const Vec2 &p) const
    {
        const double v = base.value(t, l);
        return coefficient == 0.0 ? v : v + coefficient * green->value(t, l, p);
    }
    Vec2 gradient(std::size_t t, const ElementGeometry &g, const std::array<double, 3> &l, const Vec2 &p) const
    {
        const Vec2 v = base.gradient(t, g, l);
        return coefficient == 0.0 ? v : v + coefficient * green->gradient(t, g, l, p);
    }
};

/// u1 = u0 + mu dbar G (sign +1) or z1 = z0 - mu zbar0 G (sign -1).
inline FirstOrderField first_order(const DiscreteField &field0, int sign, double mu, double amplitude,
                                   std::shared_ptr<const GreenCorrection> green)
{
    if (field0.space->components() != 1)
        throw FemError("first-order corrections are scalar");
    if (field0.space->mesh_ptr() != green->g.space->mesh_ptr())
        throw FemError("field and Green's correction live on different meshes");
    return {field0, sign * mu * amplitude, std::move(green)};
}

/// Trace (with tangential derivative) or normal derivative of a first-order
/// field on a chain of the defeatured mesh.
inline BoundaryField first_order_trace(const FirstOrderField &f, std::shared_ptr<const BoundaryChain> chain)
{
    BoundaryField bf = boundary_trace(f.base, chain);
    if (f.coefficient == 0.0)
        return bf;
    const Mesh &mesh = f.base.mesh();
    for (std::size_t q = 0; q < bf.size(); ++q) {
        const auto &e = chain->edges[static_cast<std::size_t>(bf.edge[q])];
        const auto t = static_cast<std::size_t>(e.triangle);
        const ElementGeometry g(mesh, t);
        const auto l = g.barycentric(bf.points[q]);
        bf.values[q][0] += f.coefficient * f.green->value(t, l, bf.points[q]);
        bf.tangential[q][0] += f.coefficient * dot(f.green->gradient(t, g, l, bf.points[q]), chain->tangent(e));
    }
    return bf;
}

inline BoundaryField first_order_flux(const FirstOrderField &f, std::shared_ptr<const BoundaryChain> chain)
{
    ProblemSpec poisson;
    BoundaryField bf = normal_flux(poisson, f.base, chain);
    if (f.coefficient == 0.0)
        return bf;
    const Mesh &mesh = f.base.mesh();
    for (std::size_t q = 0; q < bf.size(); ++q) {
        const auto &e = chain->edges[static_cast<std::size_t>(bf.edge[q])];
        const auto t = static_cast<std::size_t>(e.triangle);
        const ElementGeometry g(mesh, t);
        const auto l = g.barycentric(bf.points[q]);
        bf.values[q][0] += f.coefficient * dot(f.green->gradient(t, g, l, bf.points[q]), e.normal);
    }
    return bf;
}

/// Boundary error of a first-order primal approximation (Poisson).
inline BoundaryField first_order_boundary_error(const ProblemSpec &exact, const MeshPair &pair, int feature_id,
                                                const FirstOrderField &u1)
{
    BoundaryField d = boundary_error(exact, pair, feature_id, u1.base);
    if (u1.coefficient == 0.0)
        return d;
    const auto &f = pair.feature(feature_id);
    FirstOrderField g_only{DiscreteField::zero(u1.base.space), u1.coefficient, u1.green};
    const BoundaryField corr = is_dirichlet(f.kind) ? first_order_trace(g_only, d.chain) : first_order_flux(g_only, d.chain);
    for (std::size_t q = 0; q < d.size(); ++q) {
        d.values[q][0] -= corr.values[q][0];
        d.tangential[q][0] -= corr.tangential[q][0];
    }
    return d;
}

/// Dual trace or flux of a first-order dual approximation on a feature.
inline BoundaryField first_order_dual_data(const MeshPair &pair, int feature_id, const FirstOrderField &z1)
{
    auto chain = std::make_shared<const BoundaryChain>(make_chain(pair, feature_id, MeshSide::Defeatured));
    return is_dirichlet(pair.feature(feature_id).kind) ? first_order_flux(z1, chain) : first_order_trace(z1, chain);
}

/// Energy (H1-seminorm) distance between an exact-mesh field and a
/// first-order field, integrated on the shared elements.
inline double first_order_energy_error(const DiscreteField &exact_field, const FirstOrderField &f,
                                       const MeshPair &pair)
{
    if (exact_field.space->mesh_ptr() != pair.exact || f.base.space->mesh_ptr() != pair.defeatured)
        throw FemError("fields do not match the mesh pair");
    static const auto rule = triangle_rule_collapsed(6);
    const Mesh &ex = *pair.exact, &def = *pair.defeatured;
    double e2 = 0.0;
    for (std::size_t t = 0; t < ex.triangles.size(); ++t) {
        const ElementGeometry ge(ex, t);
        const auto t0 = static_cast<std::size_t>(pair.exact_to_defeatured_triangle[t]);
        const ElementGeometry g0(def, t0);
        for (const auto &qp : rule) {
            const Vec2 p = ge.point(qp.bary);
            const Vec2 d = exact_field.gradient(t, ge, qp.bary) - f.gradient(t0, g0, g0.barycentric(p), p);
            e2 += qp.weight * ge.area * dot(d, d);
        }
    }
    return std::sqrt(e2);
}

/// Nodal projection of a first-order field onto the exact mesh. The
/// feature center is removed from the exact domain, so Ghat is finite at
/// every node.
inline DiscreteField project_first_order(const FirstOrderField &f, const MeshPair &pair)
{
    DiscreteField out = restrict_field(f.base, pair);
    if (f.coefficient == 0.0)
        return out;
    const DiscreteField g = restrict_field(f.green->g, pair, out.space);
    const FeSpace &s = *out.space;
    for (int i = 0; i < s.scalar_size(); ++i)
        out.coeffs[i] += f.coefficient * (g.coeffs[i] + fundamental_solution(f.green->center, s.scalar_node(i)));
    return out;
}

} // namespace defeat
