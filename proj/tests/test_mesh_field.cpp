#include <dmudf/mesh_field.hpp>
#include <dmudf/shapes.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace dmudf;

namespace
{
    // 500 random triangles in [-1,1]^3
    IndexedMesh triangle_soup(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_real_distribution<double> s(-0.15, 0.15);
        IndexedMesh m;
        for (std::uint32_t t = 0; t < 500; ++t)
        {
            const Vec3 c(u(rng), u(rng), u(rng));
            for (int k = 0; k < 3; ++k)
                m.vertices.push_back(c + Vec3(s(rng), s(rng), s(rng)));
            m.triangles.push_back({3 * t, 3 * t + 1, 3 * t + 2});
        }
        return m;
    }

    double brute_force(const IndexedMesh& m, const Vec3& p)
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : m.triangles)
        {
            const Vec3 c = closest_point_on_triangle(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
            best = std::min(best, (p - c).norm());
        }
        return best;
    }
}

TEST(MeshField, SingleTriangleAbove)
{
    IndexedMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}};
    MeshField f(m);
    auto [d, g] = f.distance_and_gradient(Vec3(0, 0, 1));
    EXPECT_DOUBLE_EQ(d, 1.0);
    EXPECT_NEAR((g - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(MeshField, ClosestFeatureRegions)
{
    IndexedMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}};
    MeshField f(m);
    EXPECT_NEAR(f.distance(Vec3(-1, -1, 0)), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(f.distance(Vec3(0.5, -2, 0)), 2.0, 1e-15);
    EXPECT_NEAR(f.distance(Vec3(1, 1, 0)), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(f.distance(Vec3(0.25, 0.25, -0.5)), 0.5, 1e-15);
}

TEST(MeshField, QueryAtVertexFlagsOnSurface)
{
    const auto m = shapes::sphere(0.5, 2);
    MeshField f(m);
    const auto q = f.query(m.vertices[5]);
    EXPECT_EQ(q.distance, 0.0);
    EXPECT_TRUE(q.on_surface);
    EXPECT_EQ(q.gradient, Vec3::Zero());
    EXPECT_EQ(f.distance_and_gradient(m.vertices[5]).second, Vec3::Zero());
}

TEST(MeshField, MatchesBruteForceScan)
{
    const auto m = triangle_soup(1);
    MeshField f(m);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.3, 1.3);
    for (int i = 0; i < 2000; ++i)
    {
        const Vec3 p(u(rng), u(rng), u(rng));
        ASSERT_NEAR(f.distance(p), brute_force(m, p), 1e-12);
    }
}

TEST(MeshField, GradientPointsAwayFromClosestPoint)
{
    const auto m = triangle_soup(3);
    MeshField f(m);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.3, 1.3);
    for (int i = 0; i < 500; ++i)
    {
        const Vec3 p(u(rng), u(rng), u(rng));
        const auto q = f.query(p);
        ASSERT_NEAR(q.gradient.norm(), 1.0, 1e-12);
        ASSERT_NEAR((p - q.distance * q.gradient - q.closest).norm(), 0.0, 1e-12);
    }
}

TEST(MeshField, IsOneLipschitz)
{
    MeshField f(shapes::mobius());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 5000; ++i)
    {
        const Vec3 a(u(rng), u(rng), u(rng));
        const Vec3 b = a + 0.05 * Vec3(u(rng), u(rng), u(rng));
        ASSERT_LE(std::abs(f.distance(a) - f.distance(b)), (a - b).norm() + 1e-12);
    }
}

TEST(MeshField, DropsDegenerateTriangles)
{
    IndexedMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}, {0, 1, 3}};
    MeshField f(m);
    EXPECT_EQ(f.triangle_count(), 1u);
}

TEST(MeshField, EmptyMeshIsAConstructionError)
{
    EXPECT_THROW(MeshField(IndexedMesh {}), FieldError);
    IndexedMesh flat;
    flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    flat.triangles = {{0, 1, 2}};
    EXPECT_THROW(MeshField {flat}, FieldError);
}
