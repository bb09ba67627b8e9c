#pragma once

// Adaptive subdivision of the cubic domain. A cell is pruned as soon as the
// distance at its center exceeds half its diagonal plus a tolerance; the
// survivors at the maximum depth are the candidate leaves for vertex solving.

#include "field.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace dmudf
{
    enum class CellState : std::uint8_t
    {
        Empty,
        Unsolved,
        Leaf
    };

    struct OctreeConfig
    {
        int max_depth = 7;
        double epsilon = 2e-3;
        Vec3 domain_min = Vec3::Constant(-1.0);
        double domain_size = 2.0;

        void validate() const
        {
            if (max_depth < 4 || max_depth > 10)
                throw std::invalid_argument("max_depth must lie in [4, 10], got " + std::to_string(max_depth));
            if (!(epsilon >= 0.0))
                throw std::invalid_argument("epsilon must be non-negative");
            if (!(domain_size > 0.0))
                throw std::invalid_argument("domain size must be positive");
        }

        int resolution() const { return 1 << max_depth; }
        double leaf_size() const { return domain_size / resolution(); }
    };

    struct OctreeCell
    {
        Vec3 min_corner = Vec3::Zero();
        double size = 0.0;
        int depth = 0;
        CellState state = CellState::Unsolved;
        std::uint64_t morton_key = 0;
        std::array<std::uint32_t, 3> coord {0, 0, 0}; // integer position at this depth
        double center_distance = 0.0;                 // d0 = F(center)

        Vec3 center() const { return min_corner + Vec3::Constant(0.5 * size); }
        Aabb box() const { return Aabb::cube(min_corner, size); }
    };

    /// Sufficient emptiness test: the sphere of radius Diag/2 around the center
    /// encloses the cell, so d0 > Diag/2 + epsilon rules out any surface inside.
    inline bool is_provably_empty(double center_distance, double cell_size, double epsilon)
    {
        return center_distance > std::sqrt(3.0) * cell_size * 0.5 + epsilon;
    }

    inline bool is_provably_empty(const OctreeCell& cell, const ScalarField& field, double epsilon)
    {
        return is_provably_empty(field.distance(cell.center()), cell.size, epsilon);
    }

    inline OctreeCell make_cell(const OctreeConfig& config, int depth, std::uint32_t x, std::uint32_t y, std::uint32_t z)
    {
        OctreeCell c;
        c.depth = depth;
        c.size = config.domain_size / static_cast<double>(1u << depth);
        c.coord = {x, y, z};
        c.min_corner = config.domain_min + c.size * Vec3(x, y, z);
        c.morton_key = morton_encode(x, y, z);
        return c;
    }

    struct OctreeStats
    {
        std::uint64_t field_queries = 0;
        std::vector<std::size_t> cells_per_depth; // surviving cells at each depth
    };

    /// Returns the non-empty leaves at config.max_depth, sorted by Morton key.
    inline std::vector<OctreeCell> build_octree(const ScalarField& field, const OctreeConfig& config, unsigned threads = 0,
                                                OctreeStats* stats = nullptr)
    {
        config.validate();
        OctreeStats local;
        local.cells_per_depth.assign(static_cast<std::size_t>(config.max_depth) + 1, 0);

        OctreeCell root = make_cell(config, 0, 0, 0, 0);
        root.center_distance = field.distance(root.center());
        local.field_queries = 1;
        std::vector<OctreeCell> frontier;
        if (!is_provably_empty(root.center_distance, root.size, config.epsilon))
            frontier.push_back(root);
        local.cells_per_depth[0] = frontier.size();

        for (int depth = 0; depth < config.max_depth && !frontier.empty(); ++depth)
        {
            std::vector<std::array<OctreeCell, 8>> children(frontier.size());
            std::vector<std::uint8_t> keep(frontier.size());
            parallel_for(frontier.size(), threads, [&](std::size_t i) {
                const OctreeCell& parent = frontier[i];
                std::array<Vec3, 8> centers;
                for (std::uint32_t k = 0; k < 8; ++k)
                {
                    auto& ch = children[i][k];
                    ch = make_cell(config, depth + 1, 2 * parent.coord[0] + (k & 1), 2 * parent.coord[1] + ((k >> 1) & 1),
                                   2 * parent.coord[2] + ((k >> 2) & 1));
                    centers[k] = ch.center();
                }
                std::array<double, 8> d;
                std::array<Vec3, 8> g;
                try
                {
                    field.eval_into(centers, d, g);
                }
                catch (const FieldError& e)
                {
                    throw FieldError("octree cell (depth " + std::to_string(parent.depth) + ", coord " +
                                     std::to_string(parent.coord[0]) + "," + std::to_string(parent.coord[1]) + "," +
                                     std::to_string(parent.coord[2]) + "): " + e.what());
                }
                std::uint8_t mask = 0;
                for (int k = 0; k < 8; ++k)
                {
                    auto& ch = children[i][k];
                    ch.center_distance = d[k];
                    if (is_provably_empty(d[k], ch.size, config.epsilon))
                        ch.state = CellState::Empty;
                    else
                    {
                        ch.state = depth + 1 == config.max_depth ? CellState::Leaf : CellState::Unsolved;
                        mask |= static_cast<std::uint8_t>(1u << k);
                    }
                }
                keep[i] = mask;
            });
            local.field_queries += 8 * frontier.size();

            std::vector<OctreeCell> next;
            for (std::size_t i = 0; i < frontier.size(); ++i)
                for (int k = 0; k < 8; ++k)
                    if (keep[i] & (1u << k))
                        next.push_back(children[i][k]);
            frontier = std::move(next);
            local.cells_per_depth[static_cast<std::size_t>(depth) + 1] = frontier.size();
        }

        if (config.max_depth == 0)
            for (auto& c : frontier)
                c.state = CellState::Leaf;
        std::sort(frontier.begin(), frontier.end(),
                  [](const OctreeCell& a, const OctreeCell& b) { return a.morton_key < b.morton_key; });
        if (stats)
            *stats = local;
        return frontier;
    }

    /// One JSON object per line: {morton_key, min_corner, size, d0}.
    inline void write_leaf_dump(std::ostream& os, const std::vector<OctreeCell>& leaves)
    {
        const auto old = os.precision(17);
        for (const auto& c : leaves)
            os << "{\"morton_key\":" << c.morton_key << ",\"min_corner\":[" << c.min_corner.x() << ","
               << c.min_corner.y() << "," << c.min_corner.z() << "],\"size\":" << c.size
               << ",\"d0\":" << c.center_distance << "}\n";
        os.precision(old);
    }
}
