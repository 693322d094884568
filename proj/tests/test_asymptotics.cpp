#include <gtest/gtest.h>

#include <cmath>

#include "defeat/asymptotics.hpp"
#include "defeat/geometry.hpp"

using namespace defeat;

namespace {

// Polar mesh of the disk |x| < R with n sectors; rings are geometrically
// spaced and one of them lies at radius r, inside which triangles form
// feature 1.
MeshPair polar_disk_pair(double R, double r, int n)
{
    const double q = 1.0 + 2.0 * pi / n;
    const int outer = static_cast<int>(std::ceil(std::log(R / r) / std::log(q)));
    std::vector<double> radii;
    for (int k = 8; k > 0; --k)
        radii.push_back(r / std::pow(q, k));
    for (int k = 0; k <= outer; ++k)
        radii.push_back(r * std::pow(R / r, static_cast<double>(k) / outer));

    auto m = std::make_shared<Mesh>();
    m->vertices.push_back({0.0, 0.0});
    for (double rho : radii)
        for (int j = 0; j < n; ++j)
            m->vertices.push_back({rho * std::cos(2.0 * pi * j / n), rho * std::sin(2.0 * pi * j / n)});
    auto id = [n](std::size_t ring, int j) { return 1 + static_cast<int>(ring) * n + (j % n); };
    for (int j = 0; j < n; ++j)
        m->triangles.push_back({{0, id(0, j), id(0, j + 1)}, 0});
    for (std::size_t k = 0; k + 1 < radii.size(); ++k)
        for (int j = 0; j < n; ++j) {
            m->triangles.push_back({{id(k, j), id(k + 1, j + 1), id(k, j + 1)}, 0});
            m->triangles.push_back({{id(k, j), id(k + 1, j), id(k + 1, j + 1)}, 0});
        }
    for (std::size_t t = 0; t < m->triangles.size(); ++t)
        if (norm(m->centroid(t)) < r)
            m->triangles[t].region = tags::feature_region(1);
    for (int j = 0; j < n; ++j)
        m->boundary_edges.push_back({{id(radii.size() - 1, j), id(radii.size() - 1, j + 1)}, tags::bottom});
    return make_mesh_pair(m, {{1, FeatureKind::DirichletInternal}});
}

ProblemSpec all_dirichlet(const MeshPair &pair, const std::string &f = "0")
{
    ProblemSpec p;
    p.model = Model::Poisson;
    p.source = ExprField::parse(f);
    for (const auto &e : pair.defeatured->boundary_edges)
        p.boundary_conditions[e.tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
    return p;
}

} // namespace

TEST(Fundamental, Values)
{
    const Vec2 m{0.3, -0.2};
    EXPECT_NEAR(fundamental_solution(m, m + Vec2{1.0, 0.0}), 0.0, 1e-16);
    EXPECT_NEAR(fundamental_solution(m, m + Vec2{0.0, std::exp(1.0)}), 0.1591549, 1e-7);
    const double v0 = fundamental_solution(m, m + Vec2{0.4, 0.0});
    for (int k = 1; k < 8; ++k) {
        const double a = 2.0 * pi * k / 8;
        EXPECT_NEAR(fundamental_solution(m, m + 0.4 * Vec2{std::cos(a), std::sin(a)}), v0, 1e-15);
    }
    EXPECT_THROW(fundamental_solution(m, m), GeometryError);
    // Gradient against a centered difference.
    const Vec2 x{0.7, 0.1}, h{1e-6, 0.0}, k{0.0, 1e-6};
    const Vec2 g = fundamental_gradient(m, x);
    EXPECT_NEAR(g.x, (fundamental_solution(m, x + h) - fundamental_solution(m, x - h)) / 2e-6, 1e-8);
    EXPECT_NEAR(g.y, (fundamental_solution(m, x + k) - fundamental_solution(m, x - k)) / 2e-6, 1e-8);
}

TEST(Gauge, Formula)
{
    EXPECT_NEAR(gauge_formula(0.1, 0.0), -2.728752, 1e-6);
    EXPECT_NEAR(gauge_formula(0.1, 0.0), 2.0 * pi / std::log(0.1), 1e-15);
    EXPECT_LT(gauge_formula(0.05, 0.1), 0.0);
    EXPECT_THROW(gauge_formula(1.0, 0.0), GeometryError);
}

TEST(GreenCorrection, DiskDomainIsRadial)
{
    const double R = 0.5, r = 0.05;
    const MeshPair pair = polar_disk_pair(R, r, 64);
    const auto green = solve_green_correction(all_dirichlet(pair), pair.defeatured, {0.0, 0.0});
    const double g_expected = -std::log(R) / (2.0 * pi);
    double worst = 0.0;
    for (int i = 0; i < green.g.coeffs.size(); ++i)
        worst = std::max(worst, std::abs(green.g.coeffs[i] - g_expected));
    EXPECT_LT(worst, 1e-3);

    // G vanishes on the outer boundary.
    auto outer = std::make_shared<const BoundaryChain>(make_boundary_chain(pair.defeatured, tags::bottom));
    const auto tr = boundary_trace(green.g, outer);
    for (std::size_t q = 0; q < tr.size(); ++q)
        EXPECT_NEAR(tr.values[q][0] + fundamental_solution({0.0, 0.0}, tr.points[q]), 0.0, 1e-3);

    // Mean over a small circle.
    const double rho = 0.02;
    double mean = 0.0;
    for (int k = 0; k < 32; ++k) {
        const double a = 2.0 * pi * (k + 0.5) / 32;
        mean += green(rho * Vec2{std::cos(a), std::sin(a)}) / 32;
    }
    EXPECT_NEAR(mean, std::log(rho) / (2.0 * pi) + green.g.coeffs[0], 1e-3);

    const auto chain = make_chain(pair, 1, MeshSide::Defeatured);
    const double r_eff = chain.measure / (2.0 * pi);
    EXPECT_NEAR(gauge(pair, 1, green), 2.0 * pi / std::log(r_eff / R), 1e-3);
}

TEST(GreenCorrection, NeumannPartCancelsNormalDerivative)
{
    const MeshPair pair = build_mesh_pair(ExperimentGeometry::internal_disk(0.05), 12, 0);
    ProblemSpec part = all_dirichlet(pair);
    part.boundary_conditions[tags::right] = BoundaryCondition::neumann(ExprField::scalar(0.0));
    const auto green = solve_green_correction(part, pair.defeatured, {0.0, 0.0});
    // dG/dn on the right edge is small compared with dGhat/dn.
    auto right = std::make_shared<const BoundaryChain>(make_boundary_chain(pair.defeatured, tags::right));
    const FirstOrderField G{DiscreteField::zero(green.g.space), 1.0, std::make_shared<const GreenCorrection>(green)};
    const auto flux = first_order_flux(G, right);
    double dg = 0.0, dghat = 0.0;
    for (std::size_t q = 0; q < flux.size(); ++q) {
        dg += flux.weights[q] * flux.values[q][0] * flux.values[q][0];
        const double h = fundamental_gradient({0.0, 0.0}, flux.points[q]).x;
        dghat += flux.weights[q] * h * h;
    }
    EXPECT_LT(std::sqrt(dg), 0.05 * std::sqrt(dghat));
    EXPECT_THROW(solve_green_correction(part, pair.defeatured, {2.0, 0.0}), GeometryError);
}

TEST(Gauge, TranslationInvariant)
{
    const auto geo = ExperimentGeometry::internal_disk(0.03);
    const Vec2 shift{0.3, -0.2};
    double mu[2];
    for (int k = 0; k < 2; ++k) {
        const auto g = k == 0 ? geo : geo.translated(shift);
        const MeshPair pair = build_mesh_pair(g, 12, 0);
        const auto green = solve_green_correction(all_dirichlet(pair), pair.defeatured, pair.feature(1).barycenter);
        mu[k] = gauge(pair, 1, green);
    }
    EXPECT_NEAR(mu[0], mu[1], 1e-10);
}

TEST(FirstOrder, CancelsMeanMismatchOnFeature)
{
    const MeshPair pair = build_mesh_pair(ExperimentGeometry::internal_disk(0.02), 12, 0);
    const ProblemSpec p0 = all_dirichlet(pair, "10 * exp(-(x^2 + y^2) / 0.01)");
    ProblemSpec exact = p0;
    exact.boundary_conditions[pair.feature(1).gamma_tag] = BoundaryCondition::dirichlet(ExprField::scalar(0.0));
    const DiscreteField u0 = solve_problem(p0, pair.defeatured);
    auto green = std::make_shared<const GreenCorrection>(
        solve_green_correction(p0, pair.defeatured, pair.feature(1).barycenter));
    const double mu = gauge(pair, 1, *green);
    const BoundaryField d0 = boundary_error(exact, pair, 1, u0);
    const double dbar = boundary_average(d0)[0];
    ASSERT_GT(std::abs(dbar), 0.05);

    const auto same = first_order(u0, +1, mu, 0.0, green);
    const auto dz = first_order_boundary_error(exact, pair, 1, same);
    for (std::size_t q = 0; q < d0.size(); ++q)
        EXPECT_EQ(dz.values[q][0], d0.values[q][0]);

    const auto u1 = first_order(u0, +1, mu, dbar, green);
    const BoundaryField d1 = first_order_boundary_error(exact, pair, 1, u1);
    EXPECT_LT(std::abs(boundary_average(d1)[0]), 0.05 * std::abs(dbar));

    // The projection agrees with pointwise evaluation at exact-mesh nodes.
    const DiscreteField proj = project_first_order(u1, pair);
    const Mesh &ex = *pair.exact;
    for (std::size_t v : {std::size_t{0}, ex.vertices.size() / 2, ex.vertices.size() - 1}) {
        const auto loc = locate(*pair.defeatured, ex.vertices[v]);
        ASSERT_TRUE(loc.has_value());
        EXPECT_NEAR(proj.coeffs[static_cast<int>(v)], u1.value(loc->first, loc->second, ex.vertices[v]), 1e-10);
    }
}
