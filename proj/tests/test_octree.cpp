#include <dmudf/field.hpp>
#include <dmudf/octree.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

using namespace dmudf;

namespace
{
    // every cell at max_depth tested directly with the same predicate
    std::vector<std::uint64_t> brute_force_leaves(const ScalarField& f, const OctreeConfig& cfg)
    {
        std::vector<std::uint64_t> keys;
        const auto res = static_cast<std::uint32_t>(cfg.resolution());
        std::vector<Vec3> centers;
        std::vector<std::uint64_t> all;
        for (std::uint32_t z = 0; z < res; ++z)
            for (std::uint32_t y = 0; y < res; ++y)
                for (std::uint32_t x = 0; x < res; ++x)
                {
                    const auto c = make_cell(cfg, cfg.max_depth, x, y, z);
                    centers.push_back(c.center());
                    all.push_back(c.morton_key);
                }
        const auto r = f.eval_batch(centers);
        for (std::size_t i = 0; i < all.size(); ++i)
            if (!is_provably_empty(r.distances[i], cfg.leaf_size(), cfg.epsilon))
                keys.push_back(all[i]);
        std::sort(keys.begin(), keys.end());
        return keys;
    }

    std::vector<std::uint64_t> keys_of(const std::vector<OctreeCell>& leaves)
    {
        std::vector<std::uint64_t> k;
        for (const auto& c : leaves)
            k.push_back(c.morton_key);
        return k;
    }
}

TEST(Octree, EmptinessPredicate)
{
    EXPECT_TRUE(is_provably_empty(0.25, 0.25, 0.002));
    EXPECT_FALSE(is_provably_empty(0.21, 0.25, 0.002));
    const double half_diag = std::sqrt(3.0) * 0.25 / 2;
    EXPECT_FALSE(is_provably_empty(half_diag + 0.002, 0.25, 0.002));
    EXPECT_TRUE(is_provably_empty(half_diag + 0.0021, 0.25, 0.002));
}

TEST(Octree, ConstantFieldHasNoLeaves)
{
    ConstantField f(1.0);
    OctreeConfig cfg;
    OctreeStats stats;
    EXPECT_TRUE(build_octree(f, cfg, 1, &stats).empty());
    // the root's half diagonal is sqrt(3) > 1, so the test fires on its 8 children
    EXPECT_EQ(stats.field_queries, 9u);
}

TEST(Octree, PlaneLeavesMatchBruteForce)
{
    PlaneField f(Vec3::UnitZ(), 0.0);
    OctreeConfig cfg;
    cfg.max_depth = 4;
    const auto leaves = build_octree(f, cfg);
    const auto expected = brute_force_leaves(f, cfg);
    EXPECT_EQ(keys_of(leaves), expected);
    // the two slabs touching z = 0
    std::set<std::uint32_t> layers;
    for (const auto& c : leaves)
        layers.insert(c.coord[2]);
    EXPECT_EQ(layers, (std::set<std::uint32_t> {7, 8}));
    EXPECT_EQ(leaves.size(), 2u * 16 * 16);
}

TEST(Octree, SphereLeavesMatchBruteForce)
{
    SphereField f(0.5);
    OctreeConfig cfg;
    cfg.max_depth = 6;
    EXPECT_EQ(keys_of(build_octree(f, cfg)), brute_force_leaves(f, cfg));
}

TEST(Octree, OffCenterTorusMatchesBruteForce)
{
    TorusField f(Vec3(0.1, -0.05, 0.2), 0.45, 0.12);
    OctreeConfig cfg;
    cfg.max_depth = 5;
    cfg.epsilon = 0.0;
    EXPECT_EQ(keys_of(build_octree(f, cfg)), brute_force_leaves(f, cfg));
}

TEST(Octree, LeavesAreSortedAtMaxDepth)
{
    BoxField f(0.5);
    OctreeConfig cfg;
    cfg.max_depth = 5;
    const auto leaves = build_octree(f, cfg);
    ASSERT_FALSE(leaves.empty());
    for (std::size_t i = 0; i < leaves.size(); ++i)
    {
        EXPECT_EQ(leaves[i].depth, cfg.max_depth);
        EXPECT_EQ(leaves[i].state, CellState::Leaf);
        EXPECT_DOUBLE_EQ(leaves[i].size, cfg.leaf_size());
        if (i > 0)
            EXPECT_LT(leaves[i - 1].morton_key, leaves[i].morton_key);
    }
}

TEST(Octree, ThreadCountDoesNotChangeOutput)
{
    TorusField f(Vec3::Zero(), 0.5, 0.2);
    OctreeConfig cfg;
    cfg.max_depth = 6;
    const auto a = build_octree(f, cfg, 1);
    for (unsigned t : {2u, 4u, 8u})
    {
        const auto b = build_octree(f, cfg, t);
        ASSERT_EQ(keys_of(a), keys_of(b));
        for (std::size_t i = 0; i < a.size(); ++i)
            ASSERT_EQ(a[i].center_distance, b[i].center_distance);
    }
}

TEST(Octree, DenseSurfaceSamplesLieInLeaves)
{
    SphereField f(0.5);
    OctreeConfig cfg;
    cfg.max_depth = 6;
    const auto leaf_keys = keys_of(build_octree(f, cfg));
    const std::set<std::uint64_t> keys(leaf_keys.begin(), leaf_keys.end());
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    const double h = cfg.leaf_size();
    for (int i = 0; i < 1000000; ++i)
    {
        const Vec3 p = 0.5 * Vec3(n(rng), n(rng), n(rng)).normalized();
        const Vec3 g = (p - cfg.domain_min) / h;
        const auto x = static_cast<std::uint32_t>(g.x()), y = static_cast<std::uint32_t>(g.y()),
                   z = static_cast<std::uint32_t>(g.z());
        ASSERT_TRUE(keys.count(morton_encode(x, y, z))) << format_point(p);
    }
}

TEST(Octree, ChildrenTileTheParent)
{
    OctreeConfig cfg;
    const auto parent = make_cell(cfg, 3, 2, 5, 1);
    double volume = 0.0;
    for (std::uint32_t k = 0; k < 8; ++k)
    {
        const auto c = make_cell(cfg, 4, 4 + (k & 1), 10 + ((k >> 1) & 1), 2 + (k >> 2));
        EXPECT_TRUE(parent.box().contains(c.box().lo));
        EXPECT_TRUE(parent.box().contains(c.box().hi));
        volume += std::pow(c.size, 3);
    }
    EXPECT_DOUBLE_EQ(volume, std::pow(parent.size, 3));
}

TEST(Octree, ConfigValidation)
{
    SphereField f(0.5);
    OctreeConfig cfg;
    cfg.max_depth = 3;
    EXPECT_THROW(build_octree(f, cfg), std::invalid_argument);
    cfg.max_depth = 11;
    EXPECT_THROW(build_octree(f, cfg), std::invalid_argument);
    cfg.max_depth = 5;
    cfg.epsilon = -1e-3;
    EXPECT_THROW(build_octree(f, cfg), std::invalid_argument);
}

TEST(Octree, LeafDumpHasOneRecordPerLeaf)
{
    SphereField f(0.5);
    OctreeConfig cfg;
    cfg.max_depth = 4;
    const auto leaves = build_octree(f, cfg);
    std::ostringstream os;
    write_leaf_dump(os, leaves);
    const std::string text = os.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), leaves.size());
    EXPECT_NE(text.find("\"morton_key\":"), std::string::npos);
    EXPECT_NE(text.find("\"d0\":"), std::string::npos);
}
