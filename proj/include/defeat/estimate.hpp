#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "field_ops.hpp"
#include "mesh_pair.hpp"

namespace defeat {

/// The Omega constant, the solution of eta = -log(eta).
inline double omega_constant()
{
    static const double eta = [] {
        double w = 0.5;
        for (int i = 0; i < 50; ++i) {
            const double step = (w + std::log(w)) / (1.0 + 1.0 / w);
            w -= step;
            if (std::abs(step) < 1e-16)
                break;
        }
        return w;
    }();
    return eta;
}

/// c_gamma = max(-log|gamma|, eta)^(1/2) in two dimensions.
inline double const_c_gamma(double measure)
{
    if (!(measure > 0.0))
        throw EstimatorError("feature measure must be positive");
    return std::sqrt(std::max(-std::log(measure), omega_constant()));
}

/// cbar_gamma = (2 pi / |log s|)^(1/2) with s = diam / (2 dist) in (0, 1).
inline double const_cbar_gamma(double diameter, double dist_to_rest)
{
    if (!(diameter > 0.0) || !(dist_to_rest > 0.0))
        throw EstimatorError("diameter and distance must be positive");
    const double s = diameter / (2.0 * dist_to_rest);
    if (!(s < 1.0))
        throw EstimatorError("feature too close to the rest of the boundary (s = " + std::to_string(s) + ")");
    return std::sqrt(2.0 * pi / std::abs(std::log(s)));
}

/// Coefficients of the feature estimators per model: oscillation and
/// average factors for the Dirichlet kinds.
struct EstimatorCoefficients {
    double dirichlet_osc;  // Dirichlet-Dirichlet and Dirichlet-Neumann
    double dn_avg;         // Dirichlet-Neumann average term
    double internal_osc;
    double internal_avg;
};

inline EstimatorCoefficients estimator_coefficients(Model m)
{
    switch (m) {
    case Model::Poisson: return {std::sqrt(2.0), 1.0, 2.0, 1.0};
    case Model::Elasticity: return {2.0, 2.0, 2.0, 1.0};
    case Model::Stokes: return {8.0, 8.0, 8.0, 4.0};
    }
    return {};
}

/// Boundary error on the feature's defeatured boundary: data minus trace
/// (Dirichlet kinds) or data minus conormal flux (Neumann kind), sampled on
/// the chain of the defeatured mesh. `exact` supplies the data on gamma.
inline BoundaryField boundary_error(const ProblemSpec &exact, const MeshPair &pair, int feature_id,
                                    const DiscreteField &u0)
{
    const Feature &f = pair.feature(feature_id);
    auto chain = std::make_shared<const BoundaryChain>(make_chain(pair, feature_id, MeshSide::Defeatured));
    auto it = exact.boundary_conditions.find(f.gamma_tag);
    if (it == exact.boundary_conditions.end())
        throw EstimatorError("no exact data on the boundary of feature " + std::to_string(feature_id));
    const BoundaryCondition &bc = it->second;
    if (bc.is_dirichlet() != is_dirichlet(f.kind))
        throw EstimatorError("feature kind does not match its boundary condition");
    if (bc.data.arity() != exact.arity())
        throw EstimatorError("boundary data arity does not match the model");

    if (!bc.is_dirichlet()) {
        BoundaryField d = normal_flux(exact, u0, chain);
        for (std::size_t q = 0; q < d.size(); ++q)
            for (int c = 0; c < d.arity; ++c) {
                const double h = bc.data.components[c].eval(exact.context(d.points[q], d.arc[q]));
                d.values[q][c] = h - d.values[q][c];
                d.tangential[q][c] = 0.0;
            }
        return d;
    }
    BoundaryField d = boundary_trace(u0, chain);
    std::vector<ArcDifferentiable> g;
    for (const auto &e : bc.data.components)
        g.emplace_back(e);
    for (std::size_t q = 0; q < d.size(); ++q) {
        const Vec2 tau = chain->tangent(chain->edges[static_cast<std::size_t>(d.edge[q])]);
        const EvalContext ctx = exact.context(d.points[q], d.arc[q]);
        for (int c = 0; c < d.arity; ++c) {
            d.values[q][c] = g[c].value(ctx) - d.values[q][c];
            d.tangential[q][c] = g[c].derivative(ctx, tau) - d.tangential[q][c];
        }
    }
    return d;
}

inline std::array<double, 2> boundary_average(const BoundaryField &d)
{
    std::array<double, 2> s{0.0, 0.0};
    double m = 0.0;
    for (std::size_t q = 0; q < d.size(); ++q) {
        m += d.weights[q];
        for (int c = 0; c < d.arity; ++c)
            s[c] += d.weights[q] * d.values[q][c];
    }
    if (!(m > 0.0))
        throw EstimatorError("boundary field has zero measure");
    return {s[0] / m, s[1] / m};
}

namespace detail {

inline double l2_norm(const BoundaryField &d, const std::array<double, 2> &shift, bool tangential)
{
    double s = 0.0;
    for (std::size_t q = 0; q < d.size(); ++q)
        for (int c = 0; c < d.arity; ++c) {
            const double v = (tangential ? d.tangential[q][c] : d.values[q][c]) - shift[c];
            s += d.weights[q] * v * v;
        }
    return std::sqrt(s);
}

} // namespace detail

struct FeatureEstimate {
    int feature_id = 0;
    FeatureKind kind = FeatureKind::Neumann;
    double value = 0.0;
    double oscillation = 0.0;
    double average = 0.0;
    std::optional<double> c_gamma;
    std::optional<double> cbar_gamma;
};

/// Geometric inputs of the estimator constants.
struct FeatureConstants {
    double measure = 0.0;
    double diameter = 0.0;
    double dist_to_rest = 0.0;
};

inline FeatureEstimate feature_estimator(Model model, FeatureKind kind, const BoundaryField &d,
                                         const FeatureConstants &k, int feature_id = 0)
{
    if (d.arity != model_arity(model))
        throw EstimatorError("boundary error arity does not match the model");
    FeatureEstimate out;
    out.feature_id = feature_id;
    out.kind = kind;
    const auto coef = estimator_coefficients(model);
    const double g = k.measure;
    const auto avg = boundary_average(d);
    const double avg_norm = std::hypot(avg[0], avg[1]);
    const std::array<double, 2> zero{0.0, 0.0};
    switch (kind) {
    case FeatureKind::Neumann: {
        const double c = const_c_gamma(g);
        const double osc = detail::l2_norm(d, avg, false);
        out.c_gamma = c;
        out.oscillation = std::sqrt(g) * osc;
        out.average = c * g * avg_norm;
        out.value = std::sqrt(g * osc * osc + c * c * g * g * avg_norm * avg_norm);
        break;
    }
    case FeatureKind::DirichletDirichlet:
        out.oscillation = coef.dirichlet_osc * std::sqrt(detail::l2_norm(d, zero, false) * detail::l2_norm(d, zero, true));
        out.value = out.oscillation;
        break;
    case FeatureKind::DirichletNeumann: {
        const double exponent = 0.0; // (n - 2) / (2 (n - 1)) with n = 2
        out.oscillation = coef.dirichlet_osc * std::sqrt(detail::l2_norm(d, avg, false) * detail::l2_norm(d, zero, true));
        out.average = coef.dn_avg * std::pow(g, exponent) * avg_norm;
        out.value = out.oscillation + out.average;
        break;
    }
    case FeatureKind::DirichletInternal: {
        const double cbar = const_cbar_gamma(k.diameter, k.dist_to_rest);
        out.cbar_gamma = cbar;
        out.oscillation = coef.internal_osc * std::sqrt(detail::l2_norm(d, avg, false) * detail::l2_norm(d, zero, true));
        out.average = coef.internal_avg * cbar * avg_norm;
        out.value = out.oscillation + out.average;
        break;
    }
    }
    return out;
}

inline double multi_feature_estimator(const std::vector<double> &values)
{
    double s = 0.0;
    for (double v : values)
        s += v * v;
    return std::sqrt(s);
}

struct EstimatorReport {
    std::vector<FeatureEstimate> features;
    double total = 0.0;

    void write_csv(std::ostream &out) const
    {
        out << "feature_id,kind,value,oscillation_term,average_term,c_gamma,cbar_gamma\n";
        const auto old = out.precision(17);
        for (const auto &f : features) {
            out << f.feature_id << ',' << to_string(f.kind) << ',' << f.value << ',' << f.oscillation << ','
                << f.average << ',';
            if (f.c_gamma)
                out << *f.c_gamma;
            out << ',';
            if (f.cbar_gamma)
                out << *f.cbar_gamma;
            out << '\n';
        }
        out.precision(old);
    }
};

inline FeatureConstants feature_constants(const MeshPair &pair, int feature_id)
{
    const Feature &f = pair.feature(feature_id);
    const auto chain = make_chain(pair, feature_id, MeshSide::Defeatured);
    return {chain.measure, f.diameter, f.dist_to_rest};
}

/// Boundary errors and estimators for every feature of the pair.
inline EstimatorReport estimate(const ProblemSpec &exact, const MeshPair &pair, const DiscreteField &u0,
                                std::vector<BoundaryField> *errors = nullptr)
{
    EstimatorReport r;
    std::vector<double> values;
    for (const auto &f : pair.features) {
        const auto d = boundary_error(exact, pair, f.id, u0);
        r.features.push_back(feature_estimator(exact.model, f.kind, d, feature_constants(pair, f.id), f.id));
        values.push_back(r.features.back().value);
        if (errors)
            errors->push_back(d);
    }
    r.total = multi_feature_estimator(values);
    return r;
}

} // namespace defeat
