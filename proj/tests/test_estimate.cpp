#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "defeat/estimate.hpp"
#include "defeat/geometry.hpp"
#include "support.hpp"

using namespace defeat;
using defeat::testing::notch_pair;
using defeat::testing::rect_mesh;

namespace {

// Straight chain [0, len] x {0} with n edges; d and its arc derivative
// sampled from the given callables.
template <class F, class G>
BoundaryField straight_field(double len, int n, int arity, F d, G dd)
{
    std::shared_ptr<const Mesh> m = rect_mesh(n, 1, 0.0, 0.0, len, 0.1 * len);
    auto chain = std::make_shared<const BoundaryChain>(make_boundary_chain(m, tags::bottom));
    BoundaryField bf = boundary_field_on(chain, arity);
    for (std::size_t q = 0; q < bf.size(); ++q)
        for (int c = 0; c < arity; ++c) {
            bf.values[q][c] = d(bf.arc[q], c);
            bf.tangential[q][c] = dd(bf.arc[q], c);
        }
    return bf;
}

BoundaryField constant_field(double len, double v)
{
    return straight_field(len, 4, 1, [v](double, int) { return v; }, [](double, int) { return 0.0; });
}

BoundaryField random_field(std::mt19937 &rng, int arity)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double a = u(rng), b = u(rng), c = u(rng);
    return straight_field(
        0.3, 8, arity, [=](double s, int k) { return a + (k + 1) * b * std::sin(7.0 * s) + c * s * s; },
        [=](double s, int k) { return 7.0 * (k + 1) * b * std::cos(7.0 * s) + 2.0 * c * s; });
}

constexpr FeatureKind all_kinds[] = {FeatureKind::Neumann, FeatureKind::DirichletDirichlet,
                                     FeatureKind::DirichletNeumann, FeatureKind::DirichletInternal};
constexpr Model all_models[] = {Model::Poisson, Model::Elasticity, Model::Stokes};

} // namespace

TEST(Constants, OmegaAndCGamma)
{
    const double eta = omega_constant();
    EXPECT_NEAR(eta, 0.5671432904097838, 1e-14);
    EXPECT_NEAR(eta, -std::log(eta), 1e-15);
    EXPECT_NEAR(const_c_gamma(0.1), 1.517427, 1e-6);
    EXPECT_NEAR(const_c_gamma(1.0), 0.753089, 1e-6);
    EXPECT_NEAR(const_c_gamma(5.0), std::sqrt(eta), 1e-15);
    EXPECT_THROW(const_c_gamma(0.0), EstimatorError);
    EXPECT_THROW(const_c_gamma(-1.0), EstimatorError);
}

TEST(Constants, CBarGamma)
{
    // sqrt(2 pi / ln 10) and sqrt(2 pi / ln 5)
    EXPECT_NEAR(const_cbar_gamma(0.1, 0.5), 1.6518936732, 1e-9);
    EXPECT_NEAR(const_cbar_gamma(0.2, 0.5), 1.9758447641, 1e-9);
    EXPECT_LT(const_cbar_gamma(1.0, 1.0), const_cbar_gamma(1.8, 1.0));
    EXPECT_THROW(const_cbar_gamma(1.0, 0.5), EstimatorError);
    EXPECT_THROW(const_cbar_gamma(0.0, 0.5), EstimatorError);
}

TEST(BoundaryAverage, Examples)
{
    EXPECT_NEAR(boundary_average(constant_field(0.3, 2.5))[0], 2.5, 1e-14);
    const auto lin = straight_field(1.0, 5, 1, [](double s, int) { return s; }, [](double, int) { return 1.0; });
    EXPECT_NEAR(boundary_average(lin)[0], 0.5, 1e-14);

    // Closed unit-perimeter chain: boundary of a square of side 1/4.
    std::shared_ptr<const Mesh> m = rect_mesh(4, 4, 0.0, 0.0, 0.25, 0.25);
    auto mm = std::make_shared<Mesh>(*m);
    for (auto &e : mm->boundary_edges)
        e.tag = 7;
    auto chain = std::make_shared<const BoundaryChain>(make_boundary_chain(mm, 7));
    BoundaryField bf = boundary_field_on(chain, 1);
    EXPECT_NEAR(bf.measure(), 1.0, 1e-14);
    for (std::size_t q = 0; q < bf.size(); ++q)
        bf.values[q][0] = std::sin(2.0 * pi * bf.arc[q]);
    EXPECT_NEAR(boundary_average(bf)[0], 0.0, 1e-12);
}

TEST(FeatureEstimator, NeumannConstantCollapse)
{
    const auto d = constant_field(0.1, 1.0);
    const auto r = feature_estimator(Model::Poisson, FeatureKind::Neumann, d, {0.1, 0.1, 1.0});
    EXPECT_NEAR(r.value, 0.1517427, 1e-6 * 0.1517427);
    EXPECT_NEAR(r.value, const_c_gamma(0.1) * 0.1, 1e-15);
    ASSERT_TRUE(r.c_gamma.has_value());
    EXPECT_FALSE(r.cbar_gamma.has_value());

    // Zero average kills the second term.
    const auto z = straight_field(0.1, 8, 1, [](double s, int) { return std::cos(20.0 * pi * s); },
                                  [](double s, int) { return -20.0 * pi * std::sin(20.0 * pi * s); });
    const auto rz = feature_estimator(Model::Poisson, FeatureKind::Neumann, z, {0.1, 0.1, 1.0});
    EXPECT_NEAR(rz.average, 0.0, 1e-12);
    EXPECT_NEAR(rz.value, std::sqrt(0.1 * 0.05), 1e-9);
}

TEST(FeatureEstimator, DirichletSineIsRootPi)
{
    for (double len : {0.01, 0.3, 2.0}) {
        const auto d = straight_field(
            len, 32, 1, [len](double s, int) { return std::sin(pi * s / len); },
            [len](double s, int) { return pi / len * std::cos(pi * s / len); });
        const auto r = feature_estimator(Model::Poisson, FeatureKind::DirichletDirichlet, d, {len, len, 10.0});
        EXPECT_NEAR(r.value, std::sqrt(pi), 1e-6 * std::sqrt(pi)) << "len " << len;
    }
}

TEST(FeatureEstimator, ZeroFieldGivesZero)
{
    for (Model m : all_models)
        for (FeatureKind k : all_kinds) {
            const int ar = model_arity(m);
            const auto d = straight_field(0.2, 4, ar, [](double, int) { return 0.0; }, [](double, int) { return 0.0; });
            EXPECT_EQ(feature_estimator(m, k, d, {0.2, 0.2, 1.0}).value, 0.0);
        }
}

TEST(FeatureEstimator, HomogeneityAllKindsAndModels)
{
    std::mt19937 rng(11);
    for (Model m : all_models)
        for (FeatureKind k : all_kinds) {
            BoundaryField d = random_field(rng, model_arity(m));
            const FeatureConstants kc{d.measure(), 0.3, 1.0};
            const double base = feature_estimator(m, k, d, kc).value;
            ASSERT_GT(base, 0.0);
            for (double alpha : {0.0, 0.37, 5.0}) {
                BoundaryField s = d;
                for (std::size_t q = 0; q < s.size(); ++q)
                    for (int c = 0; c < s.arity; ++c) {
                        s.values[q][c] *= alpha;
                        s.tangential[q][c] *= alpha;
                    }
                EXPECT_NEAR(feature_estimator(m, k, s, kc).value, alpha * base, 1e-12 * alpha * base)
                    << to_string(m) << ' ' << to_string(k);
            }
        }
}

TEST(FeatureEstimator, ArityMismatchRejected)
{
    EXPECT_THROW(feature_estimator(Model::Elasticity, FeatureKind::Neumann, constant_field(0.1, 1.0), {0.1, 0.1, 1.0}),
                 EstimatorError);
}

TEST(MultiFeature, Aggregation)
{
    EXPECT_EQ(multi_feature_estimator({}), 0.0);
    EXPECT_EQ(multi_feature_estimator({2.5}), 2.5);
    EXPECT_NEAR(multi_feature_estimator({3.0, 4.0}), 5.0, 1e-15);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> v(9);
    double sq = 0.0, mx = 0.0;
    for (double &x : v) {
        x = u(rng);
        sq += x * x;
        mx = std::max(mx, x);
    }
    const double t = multi_feature_estimator(v);
    EXPECT_NEAR(t * t, sq, 1e-14 * sq);
    EXPECT_GE(t, mx);
}

TEST(BoundaryError, NeumannFluxOfLinearField)
{
    const MeshPair pair = notch_pair(8, FeatureKind::Neumann);
    const auto &f = pair.feature(1);
    ProblemSpec exact;
    exact.model = Model::Poisson;
    for (int tag : {tags::bottom, tags::right, tags::top, tags::left})
        exact.boundary_conditions[tag] = BoundaryCondition::dirichlet(ExprField::parse("x"));
    exact.boundary_conditions[f.gamma_tag] = BoundaryCondition::neumann(ExprField::scalar(0.0));
    auto space = std::make_shared<const FeSpace>(pair.defeatured, SpaceKind::P2);
    const DiscreteField u0 = interpolate(space, {Expression::parse("x")});
    const BoundaryField d = boundary_error(exact, pair, 1, u0);
    EXPECT_NEAR(d.measure(), 1.0, 1e-14);
    for (std::size_t q = 0; q < d.size(); ++q) {
        const auto &e = d.chain->edges[static_cast<std::size_t>(d.edge[q])];
        EXPECT_NEAR(d.values[q][0], -e.normal.x, 1e-12);
    }
    // The normal points into the feature: +x on the left wall of the notch.
    bool saw_left = false;
    for (std::size_t q = 0; q < d.size(); ++q)
        if (std::abs(d.points[q].x - 0.25) < 1e-12) {
            EXPECT_NEAR(d.values[q][0], -1.0, 1e-12);
            saw_left = true;
        }
    EXPECT_TRUE(saw_left);
}

TEST(BoundaryError, Errors)
{
    const MeshPair pair = notch_pair(4, FeatureKind::Neumann);
    ProblemSpec exact;
    exact.model = Model::Poisson;
    auto space = std::make_shared<const FeSpace>(pair.defeatured, SpaceKind::P2);
    const auto u0 = DiscreteField::zero(space);
    EXPECT_THROW(boundary_error(exact, pair, 1, u0), EstimatorError);
    exact.boundary_conditions[pair.feature(1).gamma_tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
    EXPECT_THROW(boundary_error(exact, pair, 1, u0), EstimatorError);
    exact.boundary_conditions[pair.feature(1).gamma_tag] = BoundaryCondition::neumann(ExprField::vector(0.0, 0.0));
    EXPECT_THROW(boundary_error(exact, pair, 1, u0), EstimatorError);
}

TEST(BoundaryError, ZeroDataZeroSolution)
{
    const MeshPair pair = notch_pair(4, FeatureKind::DirichletDirichlet);
    ProblemSpec exact;
    exact.model = Model::Poisson;
    exact.boundary_conditions[pair.feature(1).gamma_tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
    auto space = std::make_shared<const FeSpace>(pair.defeatured, SpaceKind::P2);
    const auto d = boundary_error(exact, pair, 1, DiscreteField::zero(space));
    for (std::size_t q = 0; q < d.size(); ++q) {
        EXPECT_EQ(d.values[q][0], 0.0);
        EXPECT_EQ(d.tangential[q][0], 0.0);
    }
}

TEST(BoundaryError, SemicircleSineData)
{
    const MeshPair pair = build_mesh_pair(ExperimentGeometry::boundary_semicircle(0.1), 16, 0);
    ProblemSpec p0;
    p0.model = Model::Poisson;
    p0.source = ExprField::parse("10 * exp(-(x^2 + y^2) / 0.01)");
    for (const auto &e : pair.defeatured->boundary_edges)
        p0.boundary_conditions[e.tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
    const DiscreteField u0 = solve_problem(p0, pair.defeatured);

    ProblemSpec exact = p0;
    exact.theta_origin = {0.0, 0.5};
    exact.boundary_conditions[pair.feature(1).gamma_tag] = BoundaryCondition::dirichlet(ExprField::parse("sin(theta)"));
    const BoundaryField d = boundary_error(exact, pair, 1, u0);

    const Mesh &m = *pair.defeatured;
    for (std::size_t q : {std::size_t{1}, d.size() / 2, d.size() - 2}) {
        const Vec2 p = d.points[q];
        const double g = std::sin(std::atan2(p.y - 0.5, p.x));
        // Locate p in the defeatured mesh independently of the chain.
        double trace = std::nan("");
        for (std::size_t t = 0; t < m.triangles.size() && std::isnan(trace); ++t) {
            const ElementGeometry eg(m, t);
            const auto l = eg.barycentric(p);
            if (l[0] > -1e-12 && l[1] > -1e-12 && l[2] > -1e-12)
                trace = u0.value(t, l);
        }
        ASSERT_FALSE(std::isnan(trace));
        EXPECT_NEAR(d.values[q][0], g - trace, 1e-10);
        EXPECT_LT(g, 0.0);
    }
}

TEST(Report, CsvAndTotal)
{
    const MeshPair pair = notch_pair(8, FeatureKind::Neumann);
    ProblemSpec exact;
    exact.model = Model::Poisson;
    for (int tag : {tags::bottom, tags::right, tags::top, tags::left})
        exact.boundary_conditions[tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
    exact.boundary_conditions[pair.feature(1).gamma_tag] = BoundaryCondition::neumann(ExprField::scalar(1.0));
    auto space = std::make_shared<const FeSpace>(pair.defeatured, SpaceKind::P2);
    const auto r = estimate(exact, pair, DiscreteField::zero(space));
    ASSERT_EQ(r.features.size(), 1u);
    EXPECT_NEAR(r.total, const_c_gamma(1.0), 1e-14);
    std::ostringstream out;
    r.write_csv(out);
    const std::string s = out.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "feature_id,kind,value,oscillation_term,average_term,c_gamma,cbar_gamma");
    EXPECT_EQ(s.back(), '\n');
    EXPECT_EQ(s[s.size() - 2], ',');
}
