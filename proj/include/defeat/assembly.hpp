#pragma once

#include <cstdio>
#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "mesh_pair.hpp"
#include "problem.hpp"
#include "quadrature.hpp"

namespace defeat {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LinearSystem {
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
    /// (dof, prescribed value), sorted by dof.
    std::vector<std::pair<int, double>> constrained_dofs;
    bool symmetric_positive_definite = true;
    bool constraints_applied = false;
    std::shared_ptr<const FeSpace> space;
};

namespace detail {

// Local stiffness of the form sigma(u):eps(v) with sigma = 2 mu eps + lambda tr(eps) I,
// for the component-blocked vector basis (a, i) x (b, j).
inline double elastic_entry(const Material &m, int a, const Vec2 &gi, int b, const Vec2 &gj)
{
    const double gi_a = a == 0 ? gi.x : gi.y, gi_b = b == 0 ? gi.x : gi.y;
    const double gj_a = a == 0 ? gj.x : gj.y, gj_b = b == 0 ? gj.x : gj.y;
    return m.mu * ((a == b ? dot(gi, gj) : 0.0) + gi_b * gj_a) + m.lambda * gi_a * gj_b;
}

inline void basis(const FeSpace &s, const ElementGeometry &g, const std::array<double, 3> &l, double *n, Vec2 *dn)
{
    if (s.degree() == 1) {
        Shape::p1(l, n);
        Shape::p1_grad(g, dn);
    } else {
        Shape::p2(l, n);
        Shape::p2_grad(g, l, dn);
    }
}

// Arc parameter of each boundary vertex and midpoint along its tag, in
// boundary-edge list order.
inline std::map<std::pair<int, int>, double> boundary_arc(const Mesh &mesh, const FeSpace &space)
{
    std::map<std::pair<int, int>, double> out;
    std::map<int, double> running;
    for (const auto &be : mesh.boundary_edges) {
        double &s = running[be.tag];
        const double len = distance(mesh.vertices[be.v[0]], mesh.vertices[be.v[1]]);
        const auto dofs = space.edge_scalar_dofs(be.v[0], be.v[1]);
        out.try_emplace({be.tag, dofs[0]}, s);
        out.try_emplace({be.tag, dofs[1]}, s + len);
        if (dofs.size() > 2)
            out.try_emplace({be.tag, dofs[2]}, s + 0.5 * len);
        s += len;
    }
    return out;
}

} // namespace detail

/// Galerkin system for the problem on `space`. Neumann data enter the
/// right-hand side by edge quadrature; Dirichlet data are recorded as
/// nodal constraints (lowest boundary tag wins at shared nodes).
inline LinearSystem assemble(const ProblemSpec &problem, std::shared_ptr<const FeSpace> space)
{
    if (!space_matches(problem.model, space->kind()))
        throw FemError("space " + to_string(space->kind()) + " does not match model " + to_string(problem.model));
    const Mesh &mesh = space->mesh();
    validate_problem(problem, mesh);

    const int n = space->dimension();
    const int nl = space->local_count();
    const int ncomp = space->components();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.triangles.size() * static_cast<std::size_t>(nl * nl * ncomp * ncomp + (space->has_pressure() ? 2 * 3 * nl * 2 : 0)));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    const auto &rule = triangle_rule_deg4();
    const Material &mat = problem.material;

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh, t);
        const auto dofs = space->scalar_dofs(t);
        const auto &tv = mesh.triangles[t].v;
        // local matrices: velocity (ncomp*nl)^2, coupling 3 x (ncomp*nl)
        double K[12][12] = {};
        double B[3][12] = {};
        double F[12] = {};
        double G[3] = {};
        for (const auto &qp : rule) {
            const double w = qp.weight * g.area;
            double nv[6];
            Vec2 dn[6];
            detail::basis(*space, g, qp.bary, nv, dn);
            const Vec2 x = g.point(qp.bary);
            const EvalContext ctx = problem.context(x);
            for (int c = 0; c < ncomp; ++c) {
                const double f = problem.source.components[c].eval(ctx);
                for (int i = 0; i < nl; ++i)
                    F[c * nl + i] += w * f * nv[i];
            }
            if (problem.model == Model::Poisson) {
                for (int i = 0; i < nl; ++i)
                    for (int j = 0; j < nl; ++j)
                        K[i][j] += w * dot(dn[i], dn[j]);
            } else {
                for (int a = 0; a < 2; ++a)
                    for (int i = 0; i < nl; ++i)
                        for (int b = 0; b < 2; ++b)
                            for (int j = 0; j < nl; ++j)
                                K[a * nl + i][b * nl + j] += w * detail::elastic_entry(mat, a, dn[i], b, dn[j]);
            }
            if (space->has_pressure()) {
                const double fc = problem.divergence_source.eval(ctx);
                for (int k = 0; k < 3; ++k) {
                    const double psi = qp.bary[k];
                    G[k] += -w * fc * psi;
                    for (int i = 0; i < nl; ++i) {
                        B[k][i] += -w * psi * dn[i].x;
                        B[k][nl + i] += -w * psi * dn[i].y;
                    }
                }
            }
        }
        auto gdof = [&](int c, int i) { return space->component_offset(c) + dofs[i]; };
        for (int a = 0; a < ncomp; ++a)
            for (int i = 0; i < nl; ++i) {
                rhs[gdof(a, i)] += F[a * nl + i];
                for (int b = 0; b < ncomp; ++b)
                    for (int j = 0; j < nl; ++j)
                        trip.emplace_back(gdof(a, i), gdof(b, j), K[a * nl + i][b * nl + j]);
            }
        if (space->has_pressure()) {
            const int po = space->pressure_offset();
            for (int k = 0; k < 3; ++k) {
                rhs[po + tv[k]] += G[k];
                for (int a = 0; a < 2; ++a)
                    for (int i = 0; i < nl; ++i) {
                        trip.emplace_back(po + tv[k], gdof(a, i), B[k][a * nl + i]);
                        trip.emplace_back(gdof(a, i), po + tv[k], B[k][a * nl + i]);
                    }
            }
        }
    }

    // Boundary data.
    const auto arc = detail::boundary_arc(mesh, *space);
    std::map<int, double> constrained;
    std::vector<int> dirichlet_tags;
    for (const auto &[tag, bc] : problem.boundary_conditions)
        if (bc.is_dirichlet())
            dirichlet_tags.push_back(tag);
    for (const auto &be : mesh.boundary_edges) {
        const auto &bc = problem.condition(be.tag);
        if (bc.is_dirichlet())
            continue;
        const Vec2 pa = mesh.vertices[be.v[0]], pb = mesh.vertices[be.v[1]];
        const double len = distance(pa, pb);
        const double s0 = arc.at({be.tag, be.v[0]});
        const int e = space->topology().find(be.v[0], be.v[1]);
        const int tri = space->topology().incidence(e).triangles[0];
        const ElementGeometry g(mesh, static_cast<std::size_t>(tri));
        const auto dofs = space->scalar_dofs(static_cast<std::size_t>(tri));
        for (const auto &[s, ws] : edge_rule()) {
            const Vec2 x = pa + s * (pb - pa);
            const auto l = g.barycentric(x);
            double nv[6];
            Vec2 dn[6];
            detail::basis(*space, g, l, nv, dn);
            const EvalContext ctx = problem.context(x, s0 + s * len);
            for (int c = 0; c < ncomp; ++c) {
                const double h = bc.data.components[c].eval(ctx);
                for (int i = 0; i < nl; ++i)
                    rhs[space->component_offset(c) + dofs[i]] += ws * len * h * nv[i];
            }
        }
    }
    for (int tag : dirichlet_tags) {
        const auto &bc = problem.boundary_conditions.at(tag);
        for (const auto &be : mesh.boundary_edges) {
            if (be.tag != tag)
                continue;
            for (int d : space->edge_scalar_dofs(be.v[0], be.v[1])) {
                const Vec2 x = space->scalar_node(d);
                const EvalContext ctx = problem.context(x, arc.at({tag, d}));
                for (int c = 0; c < ncomp; ++c)
                    constrained.try_emplace(space->component_offset(c) + d, bc.data.components[c].eval(ctx));
            }
        }
    }

    LinearSystem sys;
    sys.space = space;
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.rhs = std::move(rhs);
    sys.constrained_dofs.assign(constrained.begin(), constrained.end());
    sys.symmetric_positive_definite = problem.model != Model::Stokes;
    return sys;
}

/// Symmetric elimination: constrained rows and columns are replaced by the
/// identity and the right-hand side corrected.
inline void apply_constraints(LinearSystem &sys)
{
    if (sys.constraints_applied)
        return;
    const int n = static_cast<int>(sys.matrix.rows());
    std::vector<char> fixed(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd value = Eigen::VectorXd::Zero(n);
    for (const auto &[d, v] : sys.constrained_dofs) {
        fixed[static_cast<std::size_t>(d)] = 1;
        value[d] = v;
    }
    std::vector<char> has_diag(static_cast<std::size_t>(n), 0);
    for (int r = 0; r < n; ++r)
        for (SparseMatrix::InnerIterator it(sys.matrix, r); it; ++it) {
            const int c = static_cast<int>(it.col());
            if (fixed[static_cast<std::size_t>(c)] && !fixed[static_cast<std::size_t>(r)])
                sys.rhs[r] -= it.value() * value[c];
            if (fixed[static_cast<std::size_t>(r)] || fixed[static_cast<std::size_t>(c)])
                it.valueRef() = (r == c) ? 1.0 : 0.0;
            if (r == c)
                has_diag[static_cast<std::size_t>(r)] = 1;
        }
    std::vector<Eigen::Triplet<double>> missing;
    for (int r = 0; r < n; ++r)
        if (fixed[static_cast<std::size_t>(r)]) {
            sys.rhs[r] = value[r];
            if (!has_diag[static_cast<std::size_t>(r)])
                missing.emplace_back(r, r, 1.0);
        }
    if (!missing.empty()) {
        SparseMatrix extra(n, n);
        extra.setFromTriplets(missing.begin(), missing.end());
        sys.matrix += extra;
    }
    sys.matrix.prune(0.0);
    sys.constraints_applied = true;
}

/// Direct sparse solve: LDL^T for SPD systems, LU for Stokes.
inline Eigen::VectorXd solve_linear(LinearSystem sys)
{
    apply_constraints(sys);
    const Eigen::SparseMatrix<double> A = sys.matrix;
    // Factor once, then polish with a few steps of iterative refinement; the
    // graded meshes around small features are badly conditioned.
    auto solve_with = [&](const auto &factor) {
        Eigen::VectorXd x = factor.solve(sys.rhs);
        for (int it = 0; it < 4 && x.allFinite(); ++it) {
            const Eigen::VectorXd r = sys.rhs - A * x;
            if (r.norm() <= 1e-15 * sys.rhs.norm())
                break;
            x += factor.solve(r);
        }
        return x;
    };
    Eigen::VectorXd x;
    if (sys.symmetric_positive_definite) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        const Eigen::VectorXd D = ldlt.vectorD();
        for (int i = 0; i < D.size(); ++i)
            if (!(D[i] > 0.0))
                throw SolverError("matrix is not positive definite", ldlt.permutationPinv().indices()[i]);
        if (ldlt.info() != Eigen::Success)
            throw SolverError("LDL^T factorization failed", -1);
        x = solve_with(ldlt);
    } else {
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success)
            throw SolverError("LU factorization failed: " + lu.lastErrorMessage(), -1);
        x = solve_with(lu);
    }
    // Normwise backward error: |b| alone is tiny next to |A||x| for stiff
    // bending problems, where round-off in A x already exceeds 1e-10 |b|.
    double a_norm = 0.0;
    {
        Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
        for (int k = 0; k < A.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
                rows[it.row()] += std::abs(it.value());
        a_norm = rows.size() ? rows.maxCoeff() : 0.0;
    }
    const double scale = a_norm * x.lpNorm<Eigen::Infinity>() + sys.rhs.lpNorm<Eigen::Infinity>();
    const double res = scale > 0.0 ? (A * x - sys.rhs).lpNorm<Eigen::Infinity>() / scale : 0.0;
    if (!x.allFinite() || res > 1e-10) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "relative residual %.3g exceeds 1e-10", res);
        throw SolverError(buf, -1);
    }
    return x;
}

inline DiscreteField solve(const LinearSystem &sys) { return {sys.space, solve_linear(sys)}; }

/// Assemble and solve on a fresh space of the model's default kind.
inline DiscreteField solve_problem(const ProblemSpec &problem, std::shared_ptr<const Mesh> mesh,
                                   std::optional<SpaceKind> kind = std::nullopt)
{
    auto space = std::make_shared<const FeSpace>(std::move(mesh), kind.value_or(default_space(problem.model)));
    return solve(assemble(problem, space));
}

} // namespace defeat
