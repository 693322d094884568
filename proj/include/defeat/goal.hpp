#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "estimate.hpp"

namespace defeat {

/// Linear quantity of interest: the integral (or mean) of one solution
/// component over a set of tagged regions or over a tagged boundary piece.
struct QoISpec {
    enum class Kind { RegionalAverage, BoundaryAverage };
    Kind kind = Kind::RegionalAverage;
    std::set<int> regions;
    int boundary_tag = 0;
    int component = 0;
    bool normalized = false;

    static QoISpec region(std::set<int> regions, int component = 0, bool normalized = false)
    {
        QoISpec q;
        q.regions = std::move(regions);
        q.component = component;
        q.normalized = normalized;
        return q;
    }
    static QoISpec boundary(int tag, int component = 0, bool normalized = true)
    {
        QoISpec q;
        q.kind = Kind::BoundaryAverage;
        q.boundary_tag = tag;
        q.component = component;
        q.normalized = normalized;
        return q;
    }
};

namespace detail {

inline bool is_feature_boundary_tag(int tag) { return tag >= tags::gamma(0) && tag < tags::gamma0(0) + 10; }

// Vertices in the closure of any feature as seen from this mesh.
inline std::vector<char> feature_closure_vertices(const Mesh &mesh)
{
    std::vector<char> mark(mesh.vertices.size(), 0);
    for (const auto &t : mesh.triangles)
        if (tags::is_feature_region(t.region))
            for (int v : t.v)
                mark[static_cast<std::size_t>(v)] = 1;
    for (const auto &e : mesh.boundary_edges)
        if (is_feature_boundary_tag(e.tag))
            mark[static_cast<std::size_t>(e.v[0])] = mark[static_cast<std::size_t>(e.v[1])] = 1;
    return mark;
}

} // namespace detail

/// Coefficient vector l with l . v = L(v_h) for every field on the space.
/// Rejects regions or boundary pieces touching a feature closure, which
/// makes the defeatured functional the restriction of the exact one.
inline Eigen::VectorXd assemble_qoi(const QoISpec &qoi, const FeSpace &space)
{
    if (qoi.component < 0 || qoi.component >= space.components())
        throw QoiError("QoI component " + std::to_string(qoi.component) + " out of range");
    const Mesh &mesh = space.mesh();
    const auto closure = detail::feature_closure_vertices(mesh);
    auto touches = [&](std::initializer_list<int> vs) {
        for (int v : vs)
            if (closure[static_cast<std::size_t>(v)])
                return true;
        return false;
    };
    const int off = space.component_offset(qoi.component);
    Eigen::VectorXd l = Eigen::VectorXd::Zero(space.dimension());
    double measure = 0.0;
    double n[6];
    Vec2 dn[6];
    if (qoi.kind == QoISpec::Kind::RegionalAverage) {
        if (qoi.regions.empty())
            throw QoiError("QoI region set is empty");
        for (int r : qoi.regions)
            if (tags::is_feature_region(r))
                throw QoiError("QoI region " + std::to_string(r) + " is a feature");
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            if (!qoi.regions.count(mesh.triangles[t].region))
                continue;
            const auto &tv = mesh.triangles[t].v;
            if (touches({tv[0], tv[1], tv[2]}))
                throw QoiError("QoI region touches a feature");
            const ElementGeometry g(mesh, t);
            const auto d = space.scalar_dofs(t);
            measure += g.area;
            for (const auto &qp : triangle_rule_deg4()) {
                detail::basis(space, g, qp.bary, n, dn);
                for (int i = 0; i < space.local_count(); ++i)
                    l[off + d[i]] += qp.weight * g.area * n[i];
            }
        }
    } else {
        if (detail::is_feature_boundary_tag(qoi.boundary_tag))
            throw QoiError("QoI boundary is a feature boundary");
        const EdgeTopology &topo = space.topology();
        for (const auto &e : mesh.boundary_edges) {
            if (e.tag != qoi.boundary_tag)
                continue;
            if (touches({e.v[0], e.v[1]}))
                throw QoiError("QoI boundary touches a feature");
            const int t = topo.incidence(topo.find(e.v[0], e.v[1])).triangles[0];
            const ElementGeometry g(mesh, static_cast<std::size_t>(t));
            const auto d = space.scalar_dofs(static_cast<std::size_t>(t));
            const Vec2 pa = mesh.vertices[e.v[0]], pb = mesh.vertices[e.v[1]];
            const double len = distance(pa, pb);
            measure += len;
            for (const auto &[s, w] : edge_rule()) {
                detail::basis(space, g, g.barycentric(pa + s * (pb - pa)), n, dn);
                for (int i = 0; i < space.local_count(); ++i)
                    l[off + d[i]] += w * len * n[i];
            }
        }
    }
    if (!(measure > 0.0))
        throw QoiError("QoI support is empty");
    if (qoi.normalized)
        l /= measure;
    return l;
}

inline double evaluate_qoi(const Eigen::VectorXd &l, const DiscreteField &f)
{
    if (l.size() != f.coeffs.size())
        throw QoiError("QoI vector does not match the field's space");
    return l.dot(f.coeffs);
}

/// Dual (influence) function: same operator and boundary partition with
/// homogeneous data, loaded by l.
inline DiscreteField solve_dual(const ProblemSpec &problem, const Eigen::VectorXd &l,
                                std::shared_ptr<const FeSpace> space)
{
    if (l.size() != space->dimension())
        throw QoiError("QoI vector does not match the space");
    LinearSystem sys = assemble(problem.homogeneous(), space);
    sys.rhs = l;
    return solve(sys);
}

/// Contribution of one feature to the corrector: the integral of d against
/// the dual trace (Neumann) or minus the integral of the dual conormal flux
/// against d (Dirichlet kinds). `w` is sampled on the same chain as `d`.
inline double feature_corrector(FeatureKind kind, const BoundaryField &d, const BoundaryField &w)
{
    if (d.size() != w.size() || d.arity != w.arity)
        throw QoiError("boundary error and dual data are sampled differently");
    double s = 0.0;
    for (std::size_t q = 0; q < d.size(); ++q)
        for (int c = 0; c < d.arity; ++c)
            s += d.weights[q] * d.values[q][c] * w.values[q][c];
    return is_dirichlet(kind) ? -s : s;
}

/// Dual data needed by the corrector on a feature: trace or conormal flux.
inline BoundaryField dual_boundary_data(const ProblemSpec &problem, const MeshPair &pair, int feature_id,
                                        const DiscreteField &z0)
{
    const Feature &f = pair.feature(feature_id);
    auto chain = std::make_shared<const BoundaryChain>(make_chain(pair, feature_id, MeshSide::Defeatured));
    if (z0.space->mesh_ptr() != pair.defeatured)
        throw QoiError("dual solution does not live on the defeatured mesh");
    return is_dirichlet(f.kind) ? normal_flux(problem, z0, chain) : boundary_trace(z0, chain);
}

/// Corrector term summed over the features of the pair; `d` holds the
/// primal boundary errors in feature order.
inline double corrector(const ProblemSpec &problem, const MeshPair &pair, const std::vector<BoundaryField> &d,
                        const DiscreteField &z0)
{
    if (d.size() != pair.features.size())
        throw QoiError("one boundary error per feature is required");
    double r = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto &f = pair.features[k];
        r += feature_corrector(f.kind, d[k], dual_boundary_data(problem, pair, f.id, z0));
    }
    return r;
}

struct GoalReport {
    double L0_of_u0 = 0.0;
    double corrector = 0.0;
    double corrected = 0.0;
    double estimate = 0.0;
    double estimator_primal = 0.0;
    double estimator_dual = 0.0;
    double gamma_measure = 0.0;
    std::optional<double> L_of_u;
    std::optional<double> error_primal;
    std::optional<double> error_dual;
    std::optional<double> norm_primal;
    std::optional<double> norm_dual;
    std::optional<double> effectivity_primal;
    std::optional<double> effectivity_dual;
    std::optional<double> effectivity_goal;
    // Estimator over the norm of the exact solution.
    std::optional<double> relative_estimator_primal;
    std::optional<double> relative_estimator_dual;
};

/// Problems of one defeaturing setup: `exact` carries data for every tag of
/// the exact mesh (including gamma), `defeatured` for the defeatured mesh.
struct GoalSetup {
    ProblemSpec exact;
    ProblemSpec defeatured;
    QoISpec qoi;
};

/// Solutions and intermediate fields behind a report.
struct GoalState {
    DiscreteField u0, z0;
    std::optional<DiscreteField> u, z;
    std::vector<BoundaryField> d_primal, d_dual;
    EstimatorReport est_primal, est_dual;
    Eigen::VectorXd l0, l;
};

inline GoalReport goal_report(const GoalSetup &setup, const MeshPair &pair, bool with_exact,
                              GoalState *state_out = nullptr)
{
    GoalState st;
    GoalReport r;
    auto space0 = std::make_shared<const FeSpace>(pair.defeatured, default_space(setup.defeatured.model));
    validate_problem(setup.defeatured, *pair.defeatured);
    st.l0 = assemble_qoi(setup.qoi, *space0);
    st.u0 = solve(assemble(setup.defeatured, space0));
    st.z0 = solve_dual(setup.defeatured, st.l0, space0);

    const ProblemSpec exact_dual = setup.exact.homogeneous();
    st.est_primal = estimate(setup.exact, pair, st.u0, &st.d_primal);
    st.est_dual = estimate(exact_dual, pair, st.z0, &st.d_dual);

    r.L0_of_u0 = evaluate_qoi(st.l0, st.u0);
    r.corrector = corrector(setup.defeatured, pair, st.d_primal, st.z0);
    r.corrected = r.L0_of_u0 + r.corrector;
    r.estimator_primal = st.est_primal.total;
    r.estimator_dual = st.est_dual.total;
    r.estimate = r.estimator_primal * r.estimator_dual;
    for (const auto &f : pair.features)
        r.gamma_measure += make_chain(pair, f.id, MeshSide::Defeatured).measure;

    if (with_exact) {
        auto space = std::make_shared<const FeSpace>(pair.exact, space0->kind());
        validate_problem(setup.exact, *pair.exact);
        st.l = assemble_qoi(setup.qoi, *space);
        st.u = solve(assemble(setup.exact, space));
        st.z = solve_dual(setup.exact, st.l, space);
        r.L_of_u = evaluate_qoi(st.l, *st.u);
        r.error_primal = energy_norm(setup.exact, *st.u - restrict_field(st.u0, pair, space));
        r.error_dual = energy_norm(setup.exact, *st.z - restrict_field(st.z0, pair, space));
        r.norm_primal = energy_norm(setup.exact, *st.u);
        r.norm_dual = energy_norm(setup.exact, *st.z);
        auto ratio = [](double a, double b) -> std::optional<double> {
            if (b > 0.0)
                return a / b;
            return std::nullopt;
        };
        r.effectivity_primal = ratio(r.estimator_primal, *r.error_primal);
        r.effectivity_dual = ratio(r.estimator_dual, *r.error_dual);
        r.effectivity_goal = ratio(r.estimate, std::abs(*r.L_of_u - r.corrected));
        r.relative_estimator_primal = ratio(r.estimator_primal, *r.norm_primal);
        r.relative_estimator_dual = ratio(r.estimator_dual, *r.norm_dual);
    }
    if (state_out)
        *state_out = std::move(st);
    return r;
}

/// Corrected QoIs for the four (primal, dual) combinations. Each primal
/// entry holds the boundary errors of one primal approximation, each dual
/// entry the matching dual traces or fluxes, all in feature order.
struct GoalVariants {
    double u0_z0 = 0.0, u1_z0 = 0.0, u0_z1 = 0.0, u1_z1 = 0.0;
};

inline GoalVariants first_order_goal_variants(const MeshPair &pair, double L0_of_u0, double L0_of_u1,
                                              const std::vector<BoundaryField> &d_u0,
                                              const std::vector<BoundaryField> &d_u1,
                                              const std::vector<BoundaryField> &w_z0,
                                              const std::vector<BoundaryField> &w_z1)
{
    const std::size_t n = pair.features.size();
    if (d_u0.size() != n || d_u1.size() != n || w_z0.size() != n || w_z1.size() != n)
        throw QoiError("one field per feature is required");
    auto total = [&](double base, const std::vector<BoundaryField> &d, const std::vector<BoundaryField> &w) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            s += feature_corrector(pair.features[k].kind, d[k], w[k]);
        return base + s;
    };
    return {total(L0_of_u0, d_u0, w_z0), total(L0_of_u1, d_u1, w_z0), total(L0_of_u0, d_u0, w_z1),
            total(L0_of_u1, d_u1, w_z1)};
}

} // namespace defeat
