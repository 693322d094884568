#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "defeat/field_ops.hpp"
#include "defeat/geometry.hpp"
#include "support.hpp"

using namespace defeat;
using defeat::testing::rect_mesh;
using defeat::testing::unit_square;

namespace {

ProblemSpec poisson_all_dirichlet(const std::string &g, const std::string &f = "0")
{
    ProblemSpec p;
    p.model = Model::Poisson;
    p.source = ExprField::parse(f);
    for (int tag : {tags::bottom, tags::right, tags::top, tags::left})
        p.boundary_conditions[tag] = BoundaryCondition::dirichlet(ExprField::parse(g));
    return p;
}

std::shared_ptr<const BoundaryChain> chain_of(std::shared_ptr<const Mesh> m, int tag)
{
    return std::make_shared<const BoundaryChain>(make_boundary_chain(m, tag));
}

double slope(const std::vector<double> &h, const std::vector<double> &e)
{
    const double n = static_cast<double>(h.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(e[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST(Solve, SmallSystems)
{
    LinearSystem id;
    id.matrix.resize(3, 3);
    id.matrix.setIdentity();
    id.rhs = Eigen::Vector3d(1.0, -2.0, 3.5);
    EXPECT_LT((solve_linear(id) - id.rhs).norm(), 1e-15);

    LinearSystem spd;
    spd.matrix.resize(2, 2);
    std::vector<Eigen::Triplet<double>> t{{0, 0, 2}, {0, 1, 1}, {1, 0, 1}, {1, 1, 2}};
    spd.matrix.setFromTriplets(t.begin(), t.end());
    spd.rhs = Eigen::Vector2d(3, 3);
    const auto x = solve_linear(spd);
    EXPECT_NEAR(x[0], 1.0, 1e-14);
    EXPECT_NEAR(x[1], 1.0, 1e-14);
}

TEST(Solve, SingularReportsPivot)
{
    LinearSystem s;
    s.matrix.resize(2, 2);
    std::vector<Eigen::Triplet<double>> t{{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}};
    s.matrix.setFromTriplets(t.begin(), t.end());
    s.rhs = Eigen::Vector2d(1, 1);
    try {
        solve_linear(s);
        FAIL();
    } catch (const SolverError &e) {
        EXPECT_GE(e.pivot(), 0);
    }
}

TEST(Assemble, HarmonicPolynomialReproduced)
{
    auto mesh = unit_square(6);
    for (SpaceKind k : {SpaceKind::P1, SpaceKind::P2}) {
        auto space = std::make_shared<const FeSpace>(mesh, k);
        const auto sys = assemble(poisson_all_dirichlet("x"), space);
        const auto u = solve(sys);
        for (int i = 0; i < space->scalar_size(); ++i)
            EXPECT_NEAR(u.coeffs[i], space->scalar_node(i).x, 1e-12);
        EXPECT_NEAR(energy_norm(poisson_all_dirichlet("x"), u), 1.0, 1e-12);
    }
}

TEST(Assemble, SpaceModelMismatch)
{
    auto space = std::make_shared<const FeSpace>(unit_square(2), SpaceKind::VectorP2);
    EXPECT_THROW(assemble(poisson_all_dirichlet("0"), space), FemError);
}

TEST(Assemble, MissingConditionOrEmptyDirichlet)
{
    auto space = std::make_shared<const FeSpace>(unit_square(2), SpaceKind::P1);
    auto p = poisson_all_dirichlet("0");
    p.boundary_conditions.erase(tags::left);
    EXPECT_THROW(assemble(p, space), FemError);
    for (auto &[tag, bc] : p.boundary_conditions)
        bc.type = BoundaryCondition::Type::Neumann;
    p.boundary_conditions[tags::left] = BoundaryCondition::neumann(ExprField::scalar(0.0));
    EXPECT_THROW(assemble(p, space), FemError);
}

TEST(Assemble, UniaxialElasticState)
{
    const double mu = 1.0, lam = 1.25, nu = lam / (lam + 2 * mu);
    const double sxx = 2 * mu + lam * (1 - nu);
    ProblemSpec p;
    p.model = Model::Elasticity;
    p.material = {mu, lam};
    p.source = ExprField::vector(0, 0);
    p.boundary_conditions[tags::left] =
        BoundaryCondition::dirichlet({Expression::parse("x"), Expression::parse("-(1.25 / 3.25) * y")});
    p.boundary_conditions[tags::right] = BoundaryCondition::neumann(ExprField::vector(sxx, 0));
    p.boundary_conditions[tags::top] = BoundaryCondition::neumann(ExprField::vector(0, 0));
    p.boundary_conditions[tags::bottom] = BoundaryCondition::neumann(ExprField::vector(0, 0));
    auto mesh = rect_mesh(8, 4, 0.0, -0.25, 1.0, 0.5);
    const auto u = solve_problem(p, mesh);
    const auto &s = *u.space;
    for (int i = 0; i < s.scalar_size(); ++i) {
        const Vec2 x = s.scalar_node(i);
        EXPECT_NEAR(u.coeffs[s.component_offset(0) + i], x.x, 1e-10);
        EXPECT_NEAR(u.coeffs[s.component_offset(1) + i], -nu * x.y, 1e-10);
    }
}

TEST(Assemble, CouetteProfileInTaylorHood)
{
    // The sides carry the traction of the linear profile itself,
    // sigma(u) n = (0, -+ 2 mu / W); free sides would perturb the profile.
    const double W = 0.5, mu = 1.0;
    ProblemSpec p;
    p.model = Model::Stokes;
    p.material = {mu, 0.0};
    p.source = ExprField::vector(0, 0);
    p.boundary_conditions[tags::top] = BoundaryCondition::dirichlet(ExprField::vector(1, 0));
    p.boundary_conditions[tags::bottom] = BoundaryCondition::dirichlet(ExprField::vector(0, 0));
    p.boundary_conditions[tags::left] = BoundaryCondition::neumann(ExprField::vector(0, -mu / W));
    p.boundary_conditions[tags::right] = BoundaryCondition::neumann(ExprField::vector(0, mu / W));
    auto mesh = rect_mesh(8, 4, -0.5, -0.25, 1.0, W);
    const auto u = solve_problem(p, mesh);
    const auto &s = *u.space;
    for (int i = 0; i < s.scalar_size(); ++i) {
        const Vec2 x = s.scalar_node(i);
        EXPECT_NEAR(u.coeffs[s.component_offset(0) + i], (x.y + W / 2) / W, 1e-10);
        EXPECT_NEAR(u.coeffs[s.component_offset(1) + i], 0.0, 1e-10);
    }
    for (int i = 0; i < s.pressure_size(); ++i)
        EXPECT_NEAR(u.coeffs[s.pressure_offset() + i], 0.0, 1e-10);
    EXPECT_LT(discrete_divergence_norm(u), 1e-8);
}

TEST(Assemble, MatricesAreSymmetric)
{
    auto mesh = rect_mesh(5, 3, 0.0, 0.0, 1.0, 0.6);
    ProblemSpec e;
    e.model = Model::Elasticity;
    e.material = {1.0, 1.25};
    e.source = ExprField::vector(0, -1);
    for (int tag : {1, 2, 3, 4})
        e.boundary_conditions[tag] = BoundaryCondition::dirichlet(ExprField::vector(0, 0));
    for (auto [prob, kind] : {std::pair{poisson_all_dirichlet("x*y"), SpaceKind::P2}, std::pair{e, SpaceKind::VectorP2}}) {
        const auto sys = assemble(prob, std::make_shared<const FeSpace>(mesh, kind));
        const Eigen::SparseMatrix<double> A = sys.matrix;
        const Eigen::SparseMatrix<double> At = A.transpose();
        EXPECT_LT((A - At).norm(), 1e-14 * A.norm());
    }
}

TEST(EnergyNorm, SimpleFields)
{
    auto mesh = unit_square(3);
    auto p1 = std::make_shared<const FeSpace>(mesh, SpaceKind::P1);
    const auto pois = poisson_all_dirichlet("0");
    EXPECT_NEAR(energy_norm(pois, interpolate(p1, {Expression::constant(3.0)})), 0.0, 1e-15);
    EXPECT_NEAR(energy_norm(pois, interpolate(p1, {Expression::parse("x")})), 1.0, 1e-14);
    ProblemSpec st;
    st.model = Model::Stokes;
    auto th = std::make_shared<const FeSpace>(mesh, SpaceKind::TaylorHood);
    const auto q = interpolate(th, {Expression::constant(0), Expression::constant(0), Expression::constant(1)});
    EXPECT_NEAR(energy_norm(st, q), 1.0, 1e-14);
}

TEST(Trace, LinearAndQuadraticFields)
{
    std::shared_ptr<const Mesh> mesh = unit_square(4);
    const auto bottom = chain_of(mesh, tags::bottom);
    auto p1 = std::make_shared<const FeSpace>(mesh, SpaceKind::P1);
    const auto tr = boundary_trace(interpolate(p1, {Expression::parse("x + y")}), bottom);
    ASSERT_EQ(tr.size(), 12u);
    for (std::size_t q = 0; q < tr.size(); ++q) {
        EXPECT_NEAR(tr.values[q][0], tr.points[q].x, 1e-14);
        EXPECT_NEAR(tr.tangential[q][0], 1.0, 1e-13);
    }
    EXPECT_NEAR(tr.measure(), 1.0, 1e-14);
    const auto tc = boundary_trace(interpolate(p1, {Expression::constant(2.0)}), bottom);
    for (std::size_t q = 0; q < tc.size(); ++q)
        EXPECT_EQ(tc.tangential[q][0], 0.0);
    auto p2 = std::make_shared<const FeSpace>(mesh, SpaceKind::P2);
    const auto t2 = boundary_trace(interpolate(p2, {Expression::parse("x^2")}), bottom);
    for (std::size_t q = 0; q < t2.size(); ++q) {
        const double s = t2.points[q].x;
        EXPECT_NEAR(t2.values[q][0], s * s, 1e-14);
        EXPECT_NEAR(t2.tangential[q][0], 2.0 * s, 1e-13);
    }
}

TEST(Trace, NormalFluxes)
{
    std::shared_ptr<const Mesh> mesh = unit_square(3);
    const auto right = chain_of(mesh, tags::right);
    auto p1 = std::make_shared<const FeSpace>(mesh, SpaceKind::P1);
    const auto fp = normal_flux(poisson_all_dirichlet("0"), interpolate(p1, {Expression::parse("x")}), right);
    for (std::size_t q = 0; q < fp.size(); ++q)
        EXPECT_NEAR(fp.values[q][0], 1.0, 1e-13);

    ProblemSpec el;
    el.model = Model::Elasticity;
    el.material = {1.0, 1.25};
    auto v2 = std::make_shared<const FeSpace>(mesh, SpaceKind::VectorP2);
    const auto fe = normal_flux(el, interpolate(v2, {Expression::parse("x"), Expression::constant(0)}), right);
    for (std::size_t q = 0; q < fe.size(); ++q) {
        EXPECT_NEAR(fe.values[q][0], 3.25, 1e-12);
        EXPECT_NEAR(fe.values[q][1], 0.0, 1e-12);
    }

    ProblemSpec st;
    st.model = Model::Stokes;
    auto th = std::make_shared<const FeSpace>(mesh, SpaceKind::TaylorHood);
    const auto fs = normal_flux(st, interpolate(th, {Expression::constant(0), Expression::constant(0), Expression::constant(1)}), right);
    for (std::size_t q = 0; q < fs.size(); ++q) {
        EXPECT_NEAR(fs.values[q][0], -1.0, 1e-13);
        EXPECT_NEAR(fs.values[q][1], 0.0, 1e-13);
    }
    EXPECT_THROW(normal_flux(st, interpolate(th, {Expression::constant(0), Expression::constant(0)}),
                             chain_of(unit_square(2), tags::right)),
                 FemError);
}

TEST(Convergence, ManufacturedSine)
{
    const auto p = poisson_all_dirichlet("0", "2*pi^2*sin(pi*x)*sin(pi*y)");
    auto grad = [](const Vec2 &x) {
        return Vec2{pi * std::cos(pi * x.x) * std::sin(pi * x.y), pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
    };
    for (auto [kind, expected, tol] : {std::tuple{SpaceKind::P1, 1.0, 0.15}, std::tuple{SpaceKind::P2, 2.0, 0.2}}) {
        std::vector<double> hs, es;
        for (int n : {4, 8, 16, 32}) {
            const auto u = solve_problem(p, unit_square(n), kind);
            hs.push_back(1.0 / n);
            es.push_back(gradient_error(u, grad));
        }
        EXPECT_NEAR(slope(hs, es), expected, tol) << to_string(kind);
    }
}

TEST(Galerkin, ResidualOrthogonality)
{
    const auto p = poisson_all_dirichlet("x*y", "1 + x");
    auto space = std::make_shared<const FeSpace>(unit_square(6), SpaceKind::P2);
    const auto sys = assemble(p, space);
    const auto u = solve(sys);
    Eigen::VectorXd r = sys.matrix * u.coeffs - sys.rhs;
    for (const auto &[d, v] : sys.constrained_dofs)
        r[d] = 0.0;
    std::mt19937 gen(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd w(r.size());
        for (int i = 0; i < w.size(); ++i)
            w[i] = nd(gen);
        EXPECT_LT(std::abs(r.dot(w)), 1e-10 * sys.rhs.norm() * w.norm());
    }
}

TEST(Restrict, SharedCoefficientsAgree)
{
    const auto pair = build_mesh_pair(ExperimentGeometry::internal_disk(0.03), 16, 0);
    for (SpaceKind k : {SpaceKind::P2, SpaceKind::TaylorHood}) {
        auto df = std::make_shared<const FeSpace>(pair.defeatured, k);
        std::vector<Expression> f{Expression::parse("x^2 - y"), Expression::parse("x*y"), Expression::parse("1 + x")};
        const auto u0 = interpolate(df, f);
        auto ex = std::make_shared<const FeSpace>(pair.exact, k);
        const auto r = restrict_field(u0, pair, ex);
        EXPECT_LT((r.coeffs - interpolate(ex, f).coeffs).norm(), 1e-14);
    }
}
