#include <dmudf/field.hpp>
#include <dmudf/field_spec.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace dmudf;

namespace
{
    std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double lo = -1.2, double hi = 1.2)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(lo, hi);
        std::vector<Vec3> pts(n);
        for (auto& p : pts)
            p = Vec3(u(rng), u(rng), u(rng));
        return pts;
    }

    std::vector<FieldPtr> analytic_fields()
    {
        return {std::make_shared<SphereField>(0.5),
                std::make_shared<SphereField>(Vec3(0.1, -0.2, 0.3), 0.4),
                std::make_shared<BoxField>(0.5),
                std::make_shared<BoxField>(Vec3(0.05, 0.0, -0.1), Vec3(0.3, 0.5, 0.2)),
                std::make_shared<PlaneField>(Vec3(1, 2, 3), 0.1),
                std::make_shared<DiskField>(0.7, 0.05),
                std::make_shared<TorusField>(Vec3::Zero(), 0.5, 0.15)};
    }
}

TEST(Field, SphereDistanceAndGradient)
{
    SphereField s(0.5);
    auto [d, g] = s.distance_and_gradient(Vec3(1, 0, 0));
    EXPECT_DOUBLE_EQ(d, 0.5);
    EXPECT_NEAR((g - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(s.distance(Vec3(0, 0.2, 0)), 0.3);
}

TEST(Field, BatchLengthsMatch)
{
    BoxField b(0.5);
    const auto pts = random_points(17, 1);
    const auto r = b.eval_batch(pts);
    EXPECT_EQ(r.distances.size(), pts.size());
    EXPECT_EQ(r.gradients.size(), pts.size());
}

TEST(Field, AnalyticDistancesNonNegative)
{
    const auto pts = random_points(20000, 2);
    for (const auto& f : analytic_fields())
    {
        const auto r = f->eval_batch(pts);
        for (double d : r.distances)
            ASSERT_GE(d, 0.0);
    }
}

TEST(Field, AnalyticGradientHasUnitNorm)
{
    const auto pts = random_points(20000, 3);
    for (const auto& f : analytic_fields())
    {
        const auto r = f->eval_batch(pts);
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (r.distances[i] > 1e-6)
                ASSERT_NEAR(r.gradients[i].norm(), 1.0, 1e-9) << format_point(pts[i]);
    }
}

TEST(Field, AnalyticFieldsAreOneLipschitz)
{
    const auto a = random_points(5000, 4);
    const auto b = random_points(5000, 5);
    for (const auto& f : analytic_fields())
    {
        const auto ra = f->eval_batch(a);
        const auto rb = f->eval_batch(b);
        for (std::size_t i = 0; i < a.size(); ++i)
            ASSERT_LE(std::abs(ra.distances[i] - rb.distances[i]), (a[i] - b[i]).norm() + 1e-12);
    }
}

TEST(Field, EmptyBatchIsAnError)
{
    SphereField s(0.5);
    EXPECT_THROW(s.eval_batch({}), FieldError);
}

TEST(Field, NonFiniteQueryNamesThePoint)
{
    SphereField s(0.5);
    const std::vector<Vec3> pts {Vec3(0, std::nan(""), 0)};
    try
    {
        s.eval_batch(pts);
        FAIL() << "expected FieldError";
    }
    catch (const FieldError& e)
    {
        EXPECT_NE(std::string(e.what()).find("nan"), std::string::npos);
    }
}

TEST(Field, QueryCounterCountsPoints)
{
    SphereField s(0.5);
    s.eval_batch(random_points(10, 6));
    s.distance(Vec3::Zero());
    EXPECT_EQ(s.query_count(), 11u);
}

TEST(Field, BoxDistanceInsideAndOutside)
{
    BoxField b(0.5);
    EXPECT_DOUBLE_EQ(b.distance(Vec3(0, 0, 0)), 0.5);
    EXPECT_DOUBLE_EQ(b.distance(Vec3(0.4, 0, 0)), 0.1);
    EXPECT_NEAR(b.distance(Vec3(1, 1, 0.5)), std::sqrt(0.5), 1e-15);
}

TEST(Field, DiskDistanceToRim)
{
    DiskField d(1.0, 0.25);
    EXPECT_NEAR(d.distance(Vec3(0.2, 0.1, 0.75)), 0.5, 1e-15);
    EXPECT_NEAR(d.distance(Vec3(2.0, 0.0, 0.25)), 1.0, 1e-15);
    EXPECT_NEAR(d.distance(Vec3(0.0, 1.3, 0.65)), 0.5, 1e-15);
}

TEST(Field, UnionTakesTheMinimum)
{
    UnionField u({std::make_shared<PlaneField>(Vec3::UnitX(), 0.0), std::make_shared<PlaneField>(Vec3::UnitY(), 0.0)});
    EXPECT_DOUBLE_EQ(u.distance(Vec3(0.3, 0.1, 0.0)), 0.1);
    EXPECT_DOUBLE_EQ(u.distance(Vec3(-0.05, 0.4, 0.0)), 0.05);
}

TEST(NoisyField, SameSeedIsBitIdentical)
{
    auto base = std::make_shared<SphereField>(0.5);
    NoiseParams p;
    p.seed = 42;
    NoisyFieldWrapper a(base, p), b(base, p);
    const auto pts = random_points(2000, 7);
    const auto ra = a.eval_batch(pts);
    const auto rb = b.eval_batch(pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        ASSERT_EQ(ra.distances[i], rb.distances[i]);
        ASSERT_EQ(ra.gradients[i], rb.gradients[i]);
    }
}

TEST(NoisyField, DifferentSeedsDiffer)
{
    auto base = std::make_shared<PlaneField>(Vec3::UnitZ(), 0.0);
    NoiseParams p;
    p.seed = 1;
    NoisyFieldWrapper a(base, p);
    p.seed = 2;
    NoisyFieldWrapper b(base, p);
    const auto pts = random_points(500, 8, -0.01, 0.01);
    const auto ra = a.eval_batch(pts);
    const auto rb = b.eval_batch(pts);
    int differ = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        differ += ra.distances[i] != rb.distances[i];
    EXPECT_GT(differ, 250);
}

TEST(NoisyField, NeverReachesZero)
{
    auto base = std::make_shared<PlaneField>(Vec3::UnitZ(), 0.0);
    NoiseParams p;
    p.seed = 3;
    NoisyFieldWrapper f(base, p);
    auto pts = random_points(5000, 9, -0.5, 0.5);
    for (auto& q : pts)
        q.z() *= 0.01;
    const auto r = f.eval_batch(pts);
    for (double d : r.distances)
        ASSERT_GE(d, p.near_surface_bias);
}

TEST(NoisyField, GradientMatchesFiniteDifferences)
{
    auto base = std::make_shared<SphereField>(0.5);
    NoiseParams p;
    p.seed = 11;
    NoisyFieldWrapper f(base, p);
    const double h = 1e-6;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 300; ++i)
    {
        Vec3 dir(u(rng), u(rng), u(rng));
        const Vec3 x = dir.normalized() * (0.5 + 0.05 * u(rng));
        const auto [d, g] = f.distance_and_gradient(x);
        if (d < 0.02)
            continue; // stay clear of the clamp at u = 0
        for (int k = 0; k < 3; ++k)
        {
            Vec3 e = Vec3::Zero();
            e[k] = h;
            const double fd = (f.distance(x + e) - f.distance(x - e)) / (2 * h);
            ASSERT_NEAR(fd, g[k], 1e-5);
        }
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

TEST(FieldSpec, ParsesAnalyticShapes)
{
    const auto s = parse_field_spec("analytic:sphere:0.5:0.1:0:-0.1");
    EXPECT_EQ(s.scheme, "analytic");
    EXPECT_EQ(s.kind, "sphere");
    ASSERT_EQ(s.args.size(), 4u);
    EXPECT_DOUBLE_EQ(s.args[3], -0.1);
    EXPECT_NEAR(make_field(s)->distance(Vec3(0.1, 0, -0.1)), 0.5, 1e-15);
    EXPECT_NEAR(make_field("analytic:box:0.5")->distance(Vec3::Zero()), 0.5, 1e-15);
    EXPECT_NEAR(make_field("analytic:disk:1:0.2")->distance(Vec3(0, 0, 0.5)), 0.3, 1e-15);
    EXPECT_NEAR(make_field("analytic:plane:0.25")->distance(Vec3(0, 0, 0)), 0.25, 1e-15);
    EXPECT_NEAR(make_field("analytic:constant:1")->distance(Vec3(0.3, 0, 0)), 1.0, 0.0);
    EXPECT_NEAR(make_field("analytic:torus:0.5:0.1:0:0:0.2")->distance(Vec3(0.5, 0, 0.2)), 0.1, 1e-15);
}

TEST(FieldSpec, NoisyWrapsInnerSpec)
{
    const auto s = parse_field_spec("noisy:7:analytic:plane:0");
    EXPECT_EQ(s.seed, 7u);
    ASSERT_TRUE(s.inner);
    EXPECT_EQ(s.inner->kind, "plane");
    EXPECT_GT(make_field(s)->distance(Vec3::Zero()), 0.0);
}

TEST(FieldSpec, RejectsMalformedSpecs)
{
    EXPECT_THROW(parse_field_spec("sphere"), FieldSpecError);
    EXPECT_THROW(parse_field_spec("voxels:foo"), FieldSpecError);
    EXPECT_THROW(parse_field_spec("analytic:cone:1"), FieldSpecError);
    EXPECT_THROW(parse_field_spec("analytic:sphere:abc"), FieldSpecError);
    EXPECT_THROW(parse_field_spec("analytic:sphere:0.5:1"), FieldSpecError);
    EXPECT_THROW(parse_field_spec("noisy:-1:analytic:plane:0"), FieldSpecError);
    EXPECT_THROW(parse_field_spec("builtin:klein"), FieldSpecError);
}
