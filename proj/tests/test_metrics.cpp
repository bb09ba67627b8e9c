#include <dmudf/metrics.hpp>
#include <dmudf/shapes.hpp>

#include <gtest/gtest.h>

using namespace dmudf;

namespace
{
    IndexedMesh moved(IndexedMesh m, const Eigen::Matrix3d& r, const Vec3& t)
    {
        for (auto& v : m.vertices)
            v = r * v + t;
        return m;
    }

    MetricOptions opts(std::size_t samples = 20000, std::uint64_t seed = 1)
    {
        MetricOptions o;
        o.samples = samples;
        o.seed = seed;
        return o;
    }
}

TEST(Metrics, IdentityIsPerfect)
{
    const auto m = shapes::sphere(0.5, 3);
    const auto r = evaluate(m, m, opts());
    // samples are barycentric combinations, so only rounding separates them from the surface
    EXPECT_LT(r.chamfer, 1e-24);
    EXPECT_LT(r.hausdorff, 1e-12);
    EXPECT_EQ(r.f_score, 100.0);
    EXPECT_EQ(r.sample_count, 20000u);
}

TEST(Metrics, UniformOffsetOfASquare)
{
    const double t = 0.01;
    const auto a = shapes::square(1.0, 0.0, 4);
    const auto b = shapes::square(1.0, t, 4);
    const auto r = evaluate(a, b, opts());
    EXPECT_NEAR(r.hausdorff, t, 1e-12);
    EXPECT_NEAR(r.chamfer, 2 * t * t, 1e-12);
    EXPECT_EQ(r.f_score, 0.0);

    MetricOptions loose = opts();
    loose.threshold = 0.02;
    EXPECT_EQ(evaluate(a, b, loose).f_score, 100.0);
}

TEST(Metrics, SymmetricInArguments)
{
    const auto a = shapes::sphere(0.5, 3);
    const auto b = shapes::box(0.45, 4);
    const auto ab = evaluate(a, b, opts());
    const auto ba = evaluate(b, a, opts());
    EXPECT_EQ(ab.chamfer, ba.chamfer);
    EXPECT_EQ(ab.hausdorff, ba.hausdorff);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_EQ(ab.recall, ba.precision);
    EXPECT_EQ(ab.f_score, ba.f_score);
}

TEST(Metrics, FixedSeedIsBitIdentical)
{
    const auto a = shapes::sphere(0.5, 2);
    const auto b = shapes::sphere(0.5, 4);
    MetricOptions one = opts(30000, 9), many = opts(30000, 9);
    one.threads = 1;
    many.threads = 8;
    const auto x = evaluate(a, b, one);
    const auto y = evaluate(a, b, many);
    EXPECT_EQ(x.chamfer, y.chamfer);
    EXPECT_EQ(x.hausdorff, y.hausdorff);
    EXPECT_EQ(x.f_score, y.f_score);
    EXPECT_EQ(x.rng_seed, 9u);
}

TEST(Metrics, RigidMotionInvariance)
{
    const auto a = shapes::sphere(0.5, 2);
    const auto b = shapes::box(0.4, 3);
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    const Vec3 t(0.3, -0.2, 0.15);
    const auto before = evaluate(a, b, opts());
    const auto after = evaluate(moved(a, r, t), moved(b, r, t), opts());
    EXPECT_NEAR(before.chamfer, after.chamfer, 1e-9);
    EXPECT_NEAR(before.hausdorff, after.hausdorff, 1e-9);
}

TEST(Metrics, ChamferConvergesWithSampleCount)
{
    const auto coarse = shapes::sphere(0.5, 2);
    const auto fine = shapes::sphere(0.5, 5);
    const auto small = evaluate(coarse, fine, opts(10000, 3));
    const auto large = evaluate(coarse, fine, opts(100000, 4));
    EXPECT_GT(large.chamfer, 0.0);
    EXPECT_LT(std::abs(small.chamfer - large.chamfer), 0.1 * large.chamfer);
}

TEST(Metrics, SamplesAreOnTheSurfaceAndAreaWeighted)
{
    // two unit squares, one four times the area of the other
    IndexedMesh m = shapes::square(1.0, 0.0, 1);
    const auto big = shapes::square(2.0, 5.0, 1);
    const auto offset = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(), big.vertices.begin(), big.vertices.end());
    for (auto t : big.triangles)
        m.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    const auto pts = sample_surface(m, 50000, 5);
    std::size_t on_big = 0;
    for (const auto& p : pts)
    {
        const bool top = std::abs(p.z() - 5.0) < 1e-12;
        ASSERT_TRUE(top || std::abs(p.z()) < 1e-12);
        on_big += top;
    }
    EXPECT_NEAR(static_cast<double>(on_big) / 50000.0, 0.8, 0.01);
}

TEST(Metrics, InvalidInputsAreErrors)
{
    const auto m = shapes::sphere(0.5, 1);
    EXPECT_THROW(evaluate(IndexedMesh {}, m, opts()), std::invalid_argument);
    EXPECT_THROW(evaluate(m, IndexedMesh {}, opts()), std::invalid_argument);
    EXPECT_THROW(evaluate(m, m, opts(999)), std::invalid_argument);
}
