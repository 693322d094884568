#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expression.hpp"
#include "mesh.hpp"

namespace defeat {

enum class SpaceKind { P1, P2, VectorP2, TaylorHood };

inline std::string to_string(SpaceKind k)
{
    switch (k) {
    case SpaceKind::P1: return "P1";
    case SpaceKind::P2: return "P2";
    case SpaceKind::VectorP2: return "VectorP2";
    case SpaceKind::TaylorHood: return "TaylorHood";
    }
    return "?";
}

/// Straight-sided triangle: area and constant barycentric gradients.
struct ElementGeometry {
    std::array<Vec2, 3> x;
    double area = 0.0;
    std::array<Vec2, 3> grad_lambda;

    ElementGeometry(const Mesh &mesh, std::size_t t)
    {
        x = mesh.corners(t);
        const double twice = orient2d(x[0], x[1], x[2]);
        area = 0.5 * twice;
        for (int i = 0; i < 3; ++i) {
            const Vec2 e = x[(i + 2) % 3] - x[(i + 1) % 3];
            grad_lambda[i] = {-e.y / twice, e.x / twice};
        }
    }

    Vec2 point(const std::array<double, 3> &l) const { return l[0] * x[0] + l[1] * x[1] + l[2] * x[2]; }

    std::array<double, 3> barycentric(const Vec2 &p) const
    {
        const double twice = 2.0 * area;
        const double l0 = orient2d(p, x[1], x[2]) / twice;
        const double l1 = orient2d(x[0], p, x[2]) / twice;
        return {l0, l1, 1.0 - l0 - l1};
    }
};

/// Lagrange shape functions in barycentric form. Local P2 numbering:
/// vertices 0,1,2 then edge midpoints (0,1), (1,2), (2,0).
struct Shape {
    static void p1(const std::array<double, 3> &l, double *n)
    {
        n[0] = l[0];
        n[1] = l[1];
        n[2] = l[2];
    }
    static void p1_grad(const ElementGeometry &g, Vec2 *dn)
    {
        for (int i = 0; i < 3; ++i)
            dn[i] = g.grad_lambda[i];
    }
    static void p2(const std::array<double, 3> &l, double *n)
    {
        for (int i = 0; i < 3; ++i) {
            n[i] = l[i] * (2.0 * l[i] - 1.0);
            n[3 + i] = 4.0 * l[i] * l[(i + 1) % 3];
        }
    }
    static void p2_grad(const ElementGeometry &g, const std::array<double, 3> &l, Vec2 *dn)
    {
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3;
            dn[i] = (4.0 * l[i] - 1.0) * g.grad_lambda[i];
            dn[3 + i] = 4.0 * (l[j] * g.grad_lambda[i] + l[i] * g.grad_lambda[j]);
        }
    }
};

/// Degrees of freedom of a Lagrange space on a mesh.
///
/// Scalar P2 numbering: vertices first, then edges in EdgeTopology order.
/// Vector spaces are component-blocked; Taylor-Hood stores [ux | uy | p].
class FeSpace {
public:
    FeSpace(std::shared_ptr<const Mesh> mesh, SpaceKind kind)
        : mesh_(std::move(mesh)), kind_(kind), topo_(std::make_shared<EdgeTopology>(*mesh_))
    {
        n_p1_ = static_cast<int>(mesh_->vertices.size());
        n_p2_ = n_p1_ + static_cast<int>(topo_->num_edges());
    }

    SpaceKind kind() const { return kind_; }
    const Mesh &mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh> &mesh_ptr() const { return mesh_; }
    const EdgeTopology &topology() const { return *topo_; }

    int degree() const { return kind_ == SpaceKind::P1 ? 1 : 2; }
    int components() const { return (kind_ == SpaceKind::VectorP2 || kind_ == SpaceKind::TaylorHood) ? 2 : 1; }
    bool has_pressure() const { return kind_ == SpaceKind::TaylorHood; }
    int local_count() const { return degree() == 1 ? 3 : 6; }

    /// Scalar dofs per velocity (or primal) component.
    int scalar_size() const { return degree() == 1 ? n_p1_ : n_p2_; }
    int pressure_size() const { return has_pressure() ? n_p1_ : 0; }
    int component_offset(int c) const { return c * scalar_size(); }
    int pressure_offset() const { return components() * scalar_size(); }
    int dimension() const { return pressure_offset() + pressure_size(); }

    std::array<int, 6> scalar_dofs(std::size_t t) const
    {
        const auto &v = mesh_->triangles[t].v;
        std::array<int, 6> d{v[0], v[1], v[2], -1, -1, -1};
        if (degree() == 2)
            for (int k = 0; k < 3; ++k)
                d[3 + k] = n_p1_ + topo_->triangle_edge(t, k);
        return d;
    }

    /// Interpolation node of a scalar dof.
    Vec2 scalar_node(int dof) const
    {
        if (dof < n_p1_)
            return mesh_->vertices[dof];
        const auto &e = topo_->edge(dof - n_p1_);
        return 0.5 * (mesh_->vertices[e[0]] + mesh_->vertices[e[1]]);
    }

    /// Scalar dofs lying on the edge (a, b): endpoints and, for P2, the midpoint.
    std::vector<int> edge_scalar_dofs(int a, int b) const
    {
        std::vector<int> d{a, b};
        if (degree() == 2) {
            const int e = topo_->find(a, b);
            if (e < 0)
                throw FemError("edge is not part of the mesh");
            d.push_back(n_p1_ + e);
        }
        return d;
    }

    int scalar_edge_dof(int edge) const { return n_p1_ + edge; }

private:
    std::shared_ptr<const Mesh> mesh_;
    SpaceKind kind_;
    std::shared_ptr<const EdgeTopology> topo_;
    int n_p1_ = 0, n_p2_ = 0;
};

/// Coefficient vector on a space.
struct DiscreteField {
    std::shared_ptr<const FeSpace> space;
    Eigen::VectorXd coeffs;

    DiscreteField() = default;
    DiscreteField(std::shared_ptr<const FeSpace> s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c))
    {
        if (coeffs.size() != space->dimension())
            throw FemError("coefficient length does not match the space dimension");
    }
    static DiscreteField zero(std::shared_ptr<const FeSpace> s)
    {
        const int n = s->dimension();
        return {std::move(s), Eigen::VectorXd::Zero(n)};
    }

    const Mesh &mesh() const { return space->mesh(); }

    /// Primal value (component c) inside triangle t at barycentrics l.
    double value(std::size_t t, const std::array<double, 3> &l, int c = 0) const
    {
        const auto d = space->scalar_dofs(t);
        const int off = space->component_offset(c);
        double n[6];
        if (space->degree() == 1)
            Shape::p1(l, n);
        else
            Shape::p2(l, n);
        double v = 0.0;
        for (int i = 0; i < space->local_count(); ++i)
            v += coeffs[off + d[i]] * n[i];
        return v;
    }

    Vec2 gradient(std::size_t t, const ElementGeometry &g, const std::array<double, 3> &l, int c = 0) const
    {
        const auto d = space->scalar_dofs(t);
        const int off = space->component_offset(c);
        Vec2 dn[6];
        if (space->degree() == 1)
            Shape::p1_grad(g, dn);
        else
            Shape::p2_grad(g, l, dn);
        Vec2 grad;
        for (int i = 0; i < space->local_count(); ++i)
            grad += coeffs[off + d[i]] * dn[i];
        return grad;
    }

    /// Taylor-Hood pressure inside triangle t.
    double pressure(std::size_t t, const std::array<double, 3> &l) const
    {
        if (!space->has_pressure())
            return 0.0;
        const auto &v = mesh().triangles[t].v;
        const int off = space->pressure_offset();
        return coeffs[off + v[0]] * l[0] + coeffs[off + v[1]] * l[1] + coeffs[off + v[2]] * l[2];
    }

    DiscreteField operator-(const DiscreteField &o) const
    {
        if (o.space.get() != space.get() && o.space->dimension() != space->dimension())
            throw FemError("fields live on different spaces");
        return {space, coeffs - o.coeffs};
    }
    DiscreteField operator+(const DiscreteField &o) const
    {
        if (o.space.get() != space.get() && o.space->dimension() != space->dimension())
            throw FemError("fields live on different spaces");
        return {space, coeffs + o.coeffs};
    }
    DiscreteField scaled(double a) const { return {space, a * coeffs}; }
};

/// Nodal interpolant of `f` (one expression per component; for Taylor-Hood
/// a third entry, when present, interpolates the pressure).
inline DiscreteField interpolate(std::shared_ptr<const FeSpace> space, const std::vector<Expression> &f,
                                 const Vec2 &theta_origin = {})
{
    if (static_cast<int>(f.size()) < space->components())
        throw FemError("interpolation needs one expression per component");
    DiscreteField out = DiscreteField::zero(space);
    for (int c = 0; c < space->components(); ++c)
        for (int i = 0; i < space->scalar_size(); ++i) {
            const Vec2 p = space->scalar_node(i);
            out.coeffs[space->component_offset(c) + i] = f[c].eval({p.x, p.y, 0.0, theta_origin});
        }
    if (space->has_pressure() && f.size() > 2)
        for (int i = 0; i < space->pressure_size(); ++i) {
            const Vec2 p = space->mesh().vertices[i];
            out.coeffs[space->pressure_offset() + i] = f[2].eval({p.x, p.y, 0.0, theta_origin});
        }
    return out;
}

} // namespace defeat
