#pragma once

// Indexed triangle mesh plus the topology queries used by tests, the report
// and the manifold repair.

#include "geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dmudf
{
    using Triangle = std::array<std::uint32_t, 3>;

    struct IndexedMesh
    {
        std::vector<Vec3> vertices;
        std::vector<Triangle> triangles;
        // Owning octree cell per vertex (Morton key). Empty for meshes that
        // were not produced by extraction.
        std::vector<std::uint64_t> vertex_cells;

        std::size_t num_vertices() const { return vertices.size(); }
        std::size_t num_triangles() const { return triangles.size(); }
        bool empty() const { return triangles.empty(); }

        double area() const
        {
            double a = 0.0;
            for (const auto& t : triangles)
                a += triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            return a;
        }
    };

    using EdgeKey = std::pair<std::uint32_t, std::uint32_t>;

    inline EdgeKey make_edge(std::uint32_t a, std::uint32_t b)
    {
        return a < b ? EdgeKey {a, b} : EdgeKey {b, a};
    }

    /// Undirected edge -> number of incident triangles, in sorted edge order.
    inline std::map<EdgeKey, int> edge_degrees(const IndexedMesh& mesh)
    {
        std::map<EdgeKey, int> deg;
        for (const auto& t : mesh.triangles)
            for (int k = 0; k < 3; ++k)
                ++deg[make_edge(t[k], t[(k + 1) % 3])];
        return deg;
    }

    inline std::vector<EdgeKey> boundary_edges(const IndexedMesh& mesh)
    {
        std::vector<EdgeKey> out;
        for (const auto& [e, d] : edge_degrees(mesh))
            if (d == 1)
                out.push_back(e);
        return out;
    }

    inline int max_edge_degree(const IndexedMesh& mesh)
    {
        int m = 0;
        for (const auto& [e, d] : edge_degrees(mesh))
            m = std::max(m, d);
        return m;
    }

    namespace detail
    {
        struct DisjointSets
        {
            std::vector<std::uint32_t> parent;
            explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
            std::uint32_t find(std::uint32_t x)
            {
                while (parent[x] != x)
                {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                return x;
            }
            void unite(std::uint32_t a, std::uint32_t b)
            {
                a = find(a);
                b = find(b);
                if (a != b)
                    parent[std::max(a, b)] = std::min(a, b);
            }
        };
    }

    /// Number of connected components of the boundary-edge graph.
    inline int count_boundary_loops(const IndexedMesh& mesh)
    {
        const auto edges = boundary_edges(mesh);
        detail::DisjointSets sets(mesh.vertices.size());
        std::vector<char> used(mesh.vertices.size(), 0);
        for (const auto& [a, b] : edges)
        {
            sets.unite(a, b);
            used[a] = used[b] = 1;
        }
        int loops = 0;
        for (std::uint32_t v = 0; v < used.size(); ++v)
            if (used[v] && sets.find(v) == v)
                ++loops;
        return loops;
    }

    /// Per-triangle component label (triangles connected through shared edges),
    /// labels numbered 0..n-1 in order of first triangle.
    inline std::vector<int> triangle_components(const IndexedMesh& mesh, int* count = nullptr)
    {
        detail::DisjointSets sets(mesh.triangles.size());
        std::map<EdgeKey, std::uint32_t> first;
        for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t)
            for (int k = 0; k < 3; ++k)
            {
                const auto e = make_edge(mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3]);
                auto [it, inserted] = first.emplace(e, t);
                if (!inserted)
                    sets.unite(it->second, t);
            }
        std::vector<int> label(mesh.triangles.size(), -1);
        std::unordered_map<std::uint32_t, int> ids;
        for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t)
        {
            auto [it, inserted] = ids.emplace(sets.find(t), static_cast<int>(ids.size()));
            label[t] = it->second;
        }
        if (count)
            *count = static_cast<int>(ids.size());
        return label;
    }

    inline int count_components(const IndexedMesh& mesh)
    {
        int n = 0;
        triangle_components(mesh, &n);
        return n;
    }

    /// V - E + F counting only vertices referenced by triangles.
    inline long euler_characteristic(const IndexedMesh& mesh)
    {
        std::vector<char> used(mesh.vertices.size(), 0);
        for (const auto& t : mesh.triangles)
            for (auto v : t)
                used[v] = 1;
        const long v = std::count(used.begin(), used.end(), 1);
        const long e = static_cast<long>(edge_degrees(mesh).size());
        return v - e + static_cast<long>(mesh.triangles.size());
    }

    /// Drops vertices not referenced by any triangle, keeping relative order.
    inline void compact_vertices(IndexedMesh& mesh)
    {
        std::vector<std::uint32_t> remap(mesh.vertices.size(), UINT32_MAX);
        for (const auto& t : mesh.triangles)
            for (auto v : t)
                remap[v] = 0;
        std::uint32_t next = 0;
        std::vector<Vec3> verts;
        std::vector<std::uint64_t> cells;
        for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v)
        {
            if (remap[v] == UINT32_MAX)
                continue;
            remap[v] = next++;
            verts.push_back(mesh.vertices[v]);
            if (!mesh.vertex_cells.empty())
                cells.push_back(mesh.vertex_cells[v]);
        }
        for (auto& t : mesh.triangles)
            for (auto& v : t)
                v = remap[v];
        mesh.vertices = std::move(verts);
        mesh.vertex_cells = std::move(cells);
    }
}
