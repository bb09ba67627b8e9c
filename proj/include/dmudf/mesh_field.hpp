#pragma once

// Exact unsigned distance to a triangle mesh, accelerated by a bounding
// volume hierarchy over the triangles.

#include "field.hpp"
#include "mesh.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace dmudf
{
    struct MeshPointQuery
    {
        double distance = 0.0;
        Vec3 gradient = Vec3::Zero(); // unit, or zero when on_surface
        Vec3 closest = Vec3::Zero();
        std::uint32_t triangle = 0;
        bool on_surface = false;
    };

    class MeshField final : public ScalarField
    {
    public:
        // Points closer than this to the surface get the degenerate-gradient flag.
        static constexpr double kOnSurface = 1e-12;

        explicit MeshField(const IndexedMesh& mesh)
        {
            for (const auto& t : mesh.triangles)
            {
                for (auto v : t)
                    if (v >= mesh.vertices.size())
                        throw FieldError("mesh field: triangle index out of range");
                const Vec3& a = mesh.vertices[t[0]];
                const Vec3& b = mesh.vertices[t[1]];
                const Vec3& c = mesh.vertices[t[2]];
                if (triangle_area(a, b, c) > 0.0)
                    tris_.push_back({a, b, c});
            }
            if (tris_.empty())
                throw FieldError("mesh field: mesh has no non-degenerate triangles");
            build();
        }

        std::size_t triangle_count() const { return tris_.size(); }

        MeshPointQuery query(const Vec3& p) const
        {
            MeshPointQuery best;
            double best_d2 = std::numeric_limits<double>::infinity();
            std::uint32_t stack[64];
            int top = 0;
            stack[top++] = 0;
            while (top > 0)
            {
                const Node& node = nodes_[stack[--top]];
                if (node.box.squared_distance(p) >= best_d2)
                    continue;
                if (node.count > 0)
                {
                    for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
                    {
                        const auto& t = tris_[order_[i]];
                        const Vec3 c = closest_point_on_triangle(p, t[0], t[1], t[2]);
                        const double d2 = (p - c).squaredNorm();
                        if (d2 < best_d2 || (d2 == best_d2 && order_[i] < best.triangle))
                        {
                            best_d2 = d2;
                            best.closest = c;
                            best.triangle = order_[i];
                        }
                    }
                    continue;
                }
                const std::uint32_t l = node.first, r = node.first + 1;
                const double dl = nodes_[l].box.squared_distance(p);
                const double dr = nodes_[r].box.squared_distance(p);
                // push the farther child first so the nearer one is visited next
                if (dl < dr)
                {
                    stack[top++] = r;
                    stack[top++] = l;
                }
                else
                {
                    stack[top++] = l;
                    stack[top++] = r;
                }
            }
            best.distance = std::sqrt(best_d2);
            if (best.distance <= kOnSurface)
            {
                best.on_surface = true;
                best.gradient = Vec3::Zero();
            }
            else
                best.gradient = (p - best.closest) / best.distance;
            return best;
        }

        /// Linear scan over every triangle; reference for the BVH.
        double brute_force_distance(const Vec3& p) const
        {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& t : tris_)
                best = std::min(best, (p - closest_point_on_triangle(p, t[0], t[1], t[2])).squaredNorm());
            return std::sqrt(best);
        }

    protected:
        void evaluate(std::span<const Vec3> points, std::span<double> distances, std::span<Vec3> gradients) const override
        {
            for (std::size_t i = 0; i < points.size(); ++i)
            {
                const auto q = query(points[i]);
                distances[i] = q.distance;
                gradients[i] = q.gradient;
            }
        }

    private:
        struct Node
        {
            Aabb box;
            std::uint32_t first = 0; // leaf: first index into order_; inner: left child index
            std::uint32_t count = 0; // leaf triangle count; 0 for inner nodes
        };

        static constexpr std::uint32_t kLeafSize = 4;

        void build()
        {
            order_.resize(tris_.size());
            std::iota(order_.begin(), order_.end(), 0u);
            centroids_.resize(tris_.size());
            for (std::size_t i = 0; i < tris_.size(); ++i)
                centroids_[i] = (tris_[i][0] + tris_[i][1] + tris_[i][2]) / 3.0;
            nodes_.reserve(2 * tris_.size());
            nodes_.push_back({});
            split(0, 0, static_cast<std::uint32_t>(tris_.size()));
            centroids_.clear();
            centroids_.shrink_to_fit();
        }

        void split(std::uint32_t node_index, std::uint32_t first, std::uint32_t count)
        {
            Aabb box, cbox;
            for (std::uint32_t i = first; i < first + count; ++i)
            {
                for (const auto& v : tris_[order_[i]])
                    box.extend(v);
                cbox.extend(centroids_[order_[i]]);
            }
            nodes_[node_index].box = box;
            int axis;
            const double spread = cbox.extent().maxCoeff(&axis);
            if (count <= kLeafSize || !(spread > 0.0))
            {
                nodes_[node_index].first = first;
                nodes_[node_index].count = count;
                return;
            }
            const std::uint32_t mid = first + count / 2;
            std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                             [&](std::uint32_t a, std::uint32_t b) {
                                 const double ca = centroids_[a][axis], cb = centroids_[b][axis];
                                 return ca < cb || (ca == cb && a < b);
                             });
            const auto left = static_cast<std::uint32_t>(nodes_.size());
            nodes_.push_back({});
            nodes_.push_back({});
            nodes_[node_index].first = left;
            nodes_[node_index].count = 0;
            split(left, first, mid - first);
            split(left + 1, mid, first + count - mid);
        }

        std::vector<std::array<Vec3, 3>> tris_;
        std::vector<std::uint32_t> order_;
        std::vector<Vec3> centroids_;
        std::vector<Node> nodes_;
    };
}
