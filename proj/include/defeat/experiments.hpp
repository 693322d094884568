#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "asymptotics.hpp"
#include "geometry.hpp"

namespace defeat {

enum class ExperimentKind { PoissonBoundaryFeature, PoissonInternalFeature, ElasticityCantilever, StokesLidDriven };

inline std::string to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::PoissonBoundaryFeature: return "poisson_boundary_feature";
    case ExperimentKind::PoissonInternalFeature: return "poisson_internal_feature";
    case ExperimentKind::ElasticityCantilever: return "elasticity_cantilever_2d";
    case ExperimentKind::StokesLidDriven: return "stokes_lid_driven";
    }
    return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string &name)
{
    for (auto k : {ExperimentKind::PoissonBoundaryFeature, ExperimentKind::PoissonInternalFeature,
                   ExperimentKind::ElasticityCantilever, ExperimentKind::StokesLidDriven})
        if (to_string(k) == name)
            return k;
    throw ConfigError("unknown experiment '" + name + "'");
}

/// Meaning of the sweep parameter: feature size |gamma| for the Poisson
/// experiments, disk radius for Stokes, hole position for the cantilever.
inline std::string sweep_meaning(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::PoissonBoundaryFeature:
    case ExperimentKind::PoissonInternalFeature: return "feature size |gamma|";
    case ExperimentKind::ElasticityCantilever: return "hole center x_hole";
    case ExperimentKind::StokesLidDriven: return "disk radius";
    }
    return "?";
}

inline std::vector<double> logspace(double a, double b, int n)
{
    if (n < 1 || !(a > 0.0) || !(b > 0.0))
        throw ConfigError("logspace needs positive bounds and n >= 1");
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
        v.push_back(n == 1 ? a : std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1)));
    return v;
}

inline std::vector<double> linspace(double a, double b, int n)
{
    if (n < 1)
        throw ConfigError("linspace needs n >= 1");
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
        v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return v;
}

/// Sizes from largest to smallest (positions left to right).
inline std::vector<double> default_sweep(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::PoissonBoundaryFeature:
    case ExperimentKind::PoissonInternalFeature: return logspace(0.25, 1e-3, 8);
    case ExperimentKind::ElasticityCantilever: return linspace(0.25, 1.75, 8);
    case ExperimentKind::StokesLidDriven: return logspace(1.0 / (4.0 * pi), 1e-3 / (2.0 * pi), 8);
    }
    return {};
}

inline ExperimentGeometry experiment_geometry(ExperimentKind k, double param)
{
    switch (k) {
    case ExperimentKind::PoissonBoundaryFeature: return ExperimentGeometry::boundary_semicircle(param / pi);
    case ExperimentKind::PoissonInternalFeature: return ExperimentGeometry::internal_disk(param / (2.0 * pi));
    case ExperimentKind::ElasticityCantilever: return ExperimentGeometry::cantilever(param);
    case ExperimentKind::StokesLidDriven: return ExperimentGeometry::lid_driven(param);
    }
    throw ConfigError("unknown experiment");
}

/// Gaussian bump A / sqrt(2 pi s2) exp(-|x|^2 / (2 s2)) with A = 10, s2 = 0.01.
inline const char *gaussian_source() { return "10 / sqrt(2 * pi * 0.01) * exp(-(x^2 + y^2) / (2 * 0.01))"; }

/// Problems and QoI of one sweep point on its mesh pair.
inline GoalSetup experiment_setup(ExperimentKind k, const MeshPair &pair)
{
    const Feature &f = pair.features.at(0);
    GoalSetup s;
    ProblemSpec &p = s.defeatured;
    switch (k) {
    case ExperimentKind::PoissonBoundaryFeature:
    case ExperimentKind::PoissonInternalFeature:
        p.model = Model::Poisson;
        p.source = ExprField::parse(gaussian_source());
        for (const auto &e : pair.defeatured->boundary_edges)
            p.boundary_conditions[e.tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
        s.exact = p;
        s.exact.boundary_conditions.erase(tags::gamma0(f.id));
        if (k == ExperimentKind::PoissonBoundaryFeature) {
            s.exact.theta_origin = {0.0, 0.5};
            s.exact.boundary_conditions[f.gamma_tag] = BoundaryCondition::dirichlet(ExprField::parse("sin(theta)"));
        } else {
            s.exact.boundary_conditions[f.gamma_tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
        }
        s.qoi = QoISpec::region({tags::qoi_region});
        break;
    case ExperimentKind::ElasticityCantilever:
        p.model = Model::Elasticity;
        p.material = {1.0, 1.25};
        p.source = ExprField::vector(0.0, -1.0);
        p.boundary_conditions[tags::left] = BoundaryCondition::dirichlet(ExprField::vector(0.0, 0.0));
        for (int tag : {tags::bottom, tags::right, tags::top})
            p.boundary_conditions[tag] = BoundaryCondition::neumann(ExprField::vector(0.0, 0.0));
        s.exact = p;
        s.exact.boundary_conditions[f.gamma_tag] = BoundaryCondition::neumann(ExprField::vector(0.0, 0.0));
        s.qoi = QoISpec::boundary(tags::right, 1, true);
        break;
    case ExperimentKind::StokesLidDriven:
        p.model = Model::Stokes;
        p.material = {1.0, 0.0};
        p.source = ExprField::vector(0.0, 0.0);
        p.boundary_conditions[tags::bottom] = BoundaryCondition::dirichlet(ExprField::vector(0.0, 0.0));
        p.boundary_conditions[tags::top] = BoundaryCondition::dirichlet(ExprField::vector(1.0, 0.0));
        for (int tag : {tags::left, tags::right})
            p.boundary_conditions[tag] = BoundaryCondition::neumann(ExprField::vector(0.0, 0.0));
        s.exact = p;
        s.exact.boundary_conditions[f.gamma_tag] = BoundaryCondition::dirichlet(ExprField::vector(0.0, 0.0));
        s.qoi = QoISpec::region({tags::qoi_region}, 0);
        break;
    }
    return s;
}

/// First-order (Green's function) analysis of an internal Dirichlet feature.
struct FirstOrderReport {
    double gauge = 0.0;
    double mean_primal_error = 0.0; // dbar
    double mean_dual_trace = 0.0;   // zbar0
    double L0_of_u1 = 0.0;
    GoalVariants variants;
    std::optional<double> rel_error_u0, rel_error_z0, rel_error_u1, rel_error_z1;
};

namespace detail {

// Integral of G over the QoI region of the defeatured mesh.
inline double region_integral_of_green(const GreenCorrection &green, const Eigen::VectorXd &l0, const QoISpec &qoi)
{
    static const auto rule = triangle_rule_collapsed(6);
    const Mesh &m = green.g.mesh();
    double s = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        if (!qoi.regions.count(m.triangles[t].region))
            continue;
        const ElementGeometry g(m, t);
        for (const auto &qp : rule)
            s += qp.weight * g.area * fundamental_solution(green.center, g.point(qp.bary));
    }
    return s + evaluate_qoi(l0, green.g);
}

} // namespace detail

inline FirstOrderReport first_order_analysis(const GoalSetup &setup, const MeshPair &pair, const GoalState &st,
                                             const GoalReport &r)
{
    const Feature &f = pair.features.at(0);
    if (setup.defeatured.model != Model::Poisson || f.kind != FeatureKind::DirichletInternal)
        throw FemError("first-order corrections need an internal Dirichlet feature in a Poisson problem");
    FirstOrderReport out;
    auto green = std::make_shared<const GreenCorrection>(
        solve_green_correction(setup.defeatured, pair.defeatured, f.barycenter));
    out.gauge = gauge(pair, f.id, *green);
    out.mean_primal_error = boundary_average(st.d_primal.at(0))[0];
    auto chain = std::make_shared<const BoundaryChain>(make_chain(pair, f.id, MeshSide::Defeatured));
    out.mean_dual_trace = boundary_average(boundary_trace(st.z0, chain))[0];

    const FirstOrderField u1 = first_order(st.u0, +1, out.gauge, out.mean_primal_error, green);
    const FirstOrderField z1 = first_order(st.z0, -1, out.gauge, out.mean_dual_trace, green);
    out.L0_of_u1 = r.L0_of_u0 + u1.coefficient * detail::region_integral_of_green(*green, st.l0, setup.qoi);

    const std::vector<BoundaryField> d_u1{first_order_boundary_error(setup.exact, pair, f.id, u1)};
    const std::vector<BoundaryField> w_z0{dual_boundary_data(setup.defeatured, pair, f.id, st.z0)};
    const std::vector<BoundaryField> w_z1{first_order_dual_data(pair, f.id, z1)};
    out.variants = first_order_goal_variants(pair, r.L0_of_u0, out.L0_of_u1, st.d_primal, d_u1, w_z0, w_z1);

    if (st.u && st.z) {
        const double nu = *r.norm_primal, nz = *r.norm_dual;
        out.rel_error_u0 = *r.error_primal / nu;
        out.rel_error_z0 = *r.error_dual / nz;
        out.rel_error_u1 = first_order_energy_error(*st.u, u1, pair) / nu;
        out.rel_error_z1 = first_order_energy_error(*st.z, z1, pair) / nz;
    }
    return out;
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::PoissonBoundaryFeature;
    std::vector<double> sweep;
    int resolution = 40;
    int refinement_depth = 0;
    bool with_exact = false;
    std::string output_path;
    int jobs = 1;
};

struct SweepRow {
    double param = 0.0;
    std::optional<GoalReport> report;
    std::optional<FirstOrderReport> first_order;
    // L2 norm of the discrete divergence of u0 and u (Stokes only).
    std::optional<double> divergence_u0, divergence_u;
    std::string error;
    double seconds = 0.0;
};

inline SweepRow run_point(ExperimentKind kind, double param, int resolution, int depth, bool with_exact)
{
    SweepRow row;
    row.param = param;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const MeshPair pair = build_mesh_pair(experiment_geometry(kind, param), resolution, depth);
        const GoalSetup setup = experiment_setup(kind, pair);
        GoalState st;
        row.report = goal_report(setup, pair, with_exact, &st);
        if (kind == ExperimentKind::PoissonInternalFeature)
            row.first_order = first_order_analysis(setup, pair, st, *row.report);
        if (kind == ExperimentKind::StokesLidDriven) {
            row.divergence_u0 = discrete_divergence_norm(st.u0);
            if (st.u)
                row.divergence_u = discrete_divergence_norm(*st.u);
        }
    } catch (const Error &e) {
        row.report.reset();
        row.first_order.reset();
        row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

/// Runs every sweep point, `jobs` at a time; rows come back in sweep order.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig &cfg,
                                       const std::function<void(const SweepRow &)> &on_done = {})
{
    std::vector<SweepRow> rows(cfg.sweep.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            rows[i] = run_point(cfg.kind, cfg.sweep[i], cfg.resolution, cfg.refinement_depth, cfg.with_exact);
            if (on_done) {
                std::lock_guard<std::mutex> lock(mu);
                on_done(rows[i]);
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(rows.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();
    return rows;
}

namespace detail {

inline std::string cell(std::optional<double> v)
{
    if (!v || !std::isfinite(*v))
        return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

inline void write_cells(std::ostream &out, std::initializer_list<std::optional<double>> cells)
{
    bool first = true;
    for (const auto &c : cells) {
        if (!first)
            out << ',';
        out << cell(c);
        first = false;
    }
    out << '\n';
}

} // namespace detail

inline const char *csv_header()
{
    return "sweep_param,gamma_measure,energy_error_primal,estimator_primal,energy_error_dual,estimator_dual,"
           "qoi_exact,qoi_defeatured,qoi_corrected,goal_estimate,eff_primal,eff_dual,eff_goal";
}

/// One row per sweep point; failed points keep only the sweep parameter.
inline void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows)
{
    out << csv_header() << '\n';
    for (const auto &row : rows) {
        if (!row.report) {
            detail::write_cells(out, {row.param, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}});
            continue;
        }
        const GoalReport &r = *row.report;
        detail::write_cells(out, {row.param, r.gamma_measure, r.error_primal, r.estimator_primal, r.error_dual,
                                  r.estimator_dual, r.L_of_u, r.L0_of_u0, r.corrected, r.estimate,
                                  r.effectivity_primal, r.effectivity_dual, r.effectivity_goal});
    }
}

/// Secondary table: relative quantities, corrector, divergence and the
/// first-order variants where they apply.
inline void write_details_csv(std::ostream &out, const std::vector<SweepRow> &rows)
{
    out << "sweep_param,corrector,rel_error_primal,rel_error_dual,rel_estimator_primal,rel_estimator_dual,"
           "divergence_u0,divergence_u,gauge,qoi_defeatured_u1,qoi_u0_z0,qoi_u1_z0,qoi_u0_z1,qoi_u1_z1,"
           "rel_error_u1,rel_error_z1,seconds\n";
    for (const auto &row : rows) {
        std::optional<double> corr, rep, red, rsp, rsd;
        if (row.report) {
            const GoalReport &r = *row.report;
            corr = r.corrector;
            if (r.norm_primal && *r.norm_primal > 0.0)
                rep = *r.error_primal / *r.norm_primal;
            if (r.norm_dual && *r.norm_dual > 0.0)
                red = *r.error_dual / *r.norm_dual;
            rsp = r.relative_estimator_primal;
            rsd = r.relative_estimator_dual;
        }
        std::optional<double> mu, l1, v00, v10, v01, v11, e1, ez1;
        if (row.first_order) {
            const auto &f = *row.first_order;
            mu = f.gauge;
            l1 = f.L0_of_u1;
            v00 = f.variants.u0_z0;
            v10 = f.variants.u1_z0;
            v01 = f.variants.u0_z1;
            v11 = f.variants.u1_z1;
            e1 = f.rel_error_u1;
            ez1 = f.rel_error_z1;
        }
        detail::write_cells(out, {row.param, corr, rep, red, rsp, rsd, row.divergence_u0, row.divergence_u, mu, l1,
                                  v00, v10, v01, v11, e1, ez1, row.seconds});
    }
}

} // namespace defeat
