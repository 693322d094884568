#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "expression.hpp"
#include "mesh.hpp"
#include "space.hpp"

namespace defeat {

enum class Model { Poisson, Elasticity, Stokes };

inline std::string to_string(Model m)
{
    switch (m) {
    case Model::Poisson: return "poisson";
    case Model::Elasticity: return "elasticity";
    case Model::Stokes: return "stokes";
    }
    return "?";
}

inline int model_arity(Model m) { return m == Model::Poisson ? 1 : 2; }

struct Material {
    double mu = 1.0;
    double lambda = 0.0;
};

struct BoundaryCondition {
    enum class Type { Dirichlet, Neumann };
    Type type = Type::Dirichlet;
    ExprField data;

    static BoundaryCondition dirichlet(ExprField d) { return {Type::Dirichlet, std::move(d)}; }
    static BoundaryCondition neumann(ExprField d) { return {Type::Neumann, std::move(d)}; }
    bool is_dirichlet() const { return type == Type::Dirichlet; }
};

struct ProblemSpec {
    Model model = Model::Poisson;
    Material material;
    std::map<int, BoundaryCondition> boundary_conditions;
    ExprField source;
    Expression divergence_source;
    /// Origin of the polar angle `theta` in all expressions.
    Vec2 theta_origin;

    int arity() const { return model_arity(model); }

    const BoundaryCondition &condition(int tag) const
    {
        auto it = boundary_conditions.find(tag);
        if (it == boundary_conditions.end())
            throw FemError("no boundary condition for tag " + std::to_string(tag));
        return it->second;
    }

    EvalContext context(const Vec2 &p, double t = 0.0) const { return {p.x, p.y, t, theta_origin}; }

    /// Same operator and boundary partition with homogeneous data and
    /// no sources.
    ProblemSpec homogeneous() const
    {
        ProblemSpec h = *this;
        const ExprField zero = arity() == 1 ? ExprField::scalar(0.0) : ExprField::vector(0.0, 0.0);
        for (auto &[tag, bc] : h.boundary_conditions)
            bc.data = zero;
        h.source = zero;
        h.divergence_source = Expression::constant(0.0);
        return h;
    }
};

inline bool space_matches(Model m, SpaceKind k)
{
    switch (m) {
    case Model::Poisson: return k == SpaceKind::P1 || k == SpaceKind::P2;
    case Model::Elasticity: return k == SpaceKind::VectorP2;
    case Model::Stokes: return k == SpaceKind::TaylorHood;
    }
    return false;
}

inline SpaceKind default_space(Model m)
{
    switch (m) {
    case Model::Poisson: return SpaceKind::P2;
    case Model::Elasticity: return SpaceKind::VectorP2;
    case Model::Stokes: return SpaceKind::TaylorHood;
    }
    return SpaceKind::P2;
}

/// Checks the problem against a mesh: material ranges, data arity, one
/// condition per boundary tag, and a nonempty Dirichlet part (Stokes
/// additionally needs a Neumann part to fix the pressure).
inline void validate_problem(const ProblemSpec &p, const Mesh &mesh)
{
    if (p.model != Model::Poisson) {
        if (!(p.material.mu > 0.0))
            throw FemError("mu must be positive");
        if (p.model == Model::Elasticity && !(p.material.lambda + 2.0 * p.material.mu / 3.0 > 0.0))
            throw FemError("lambda + 2 mu / 3 must be positive");
        if (p.model == Model::Stokes && p.material.lambda < 0.0)
            throw FemError("lambda must be nonnegative for Stokes");
    }
    if (p.source.arity() != p.arity())
        throw FemError("source arity does not match the model");
    std::set<int> tags;
    for (const auto &e : mesh.boundary_edges)
        tags.insert(e.tag);
    bool any_dirichlet = false, any_neumann = false;
    for (int tag : tags) {
        const auto &bc = p.condition(tag);
        if (bc.data.arity() != p.arity())
            throw FemError("boundary data arity does not match the model on tag " + std::to_string(tag));
        (bc.is_dirichlet() ? any_dirichlet : any_neumann) = true;
    }
    if (!any_dirichlet)
        throw FemError("the Dirichlet boundary is empty");
    if (p.model == Model::Stokes && !any_neumann)
        throw FemError("pure-Dirichlet Stokes problems are not supported");
}

} // namespace defeat
