#pragma once

// Reference triangle meshes for evaluation and mesh-derived fields.

#include "mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace dmudf::shapes
{
    /// Surface of the axis-aligned cube [-half, half]^3, each face split into n x n quads.
    inline IndexedMesh box(double half, int n = 1)
    {
        if (n < 1)
            throw std::invalid_argument("box subdivision must be >= 1");
        IndexedMesh m;
        for (int axis = 0; axis < 3; ++axis)
            for (int side = 0; side < 2; ++side)
            {
                const int u = (axis + 1) % 3, v = (axis + 2) % 3;
                const auto base = static_cast<std::uint32_t>(m.vertices.size());
                for (int j = 0; j <= n; ++j)
                    for (int i = 0; i <= n; ++i)
                    {
                        Vec3 p;
                        p[axis] = side ? half : -half;
                        p[u] = -half + 2.0 * half * i / n;
                        p[v] = -half + 2.0 * half * j / n;
                        m.vertices.push_back(p);
                    }
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i < n; ++i)
                    {
                        const std::uint32_t a = base + static_cast<std::uint32_t>(j * (n + 1) + i);
                        const std::uint32_t b = a + 1, c = a + static_cast<std::uint32_t>(n + 1), d = c + 1;
                        if (side)
                        {
                            m.triangles.push_back({a, b, d});
                            m.triangles.push_back({a, d, c});
                        }
                        else
                        {
                            m.triangles.push_back({a, d, b});
                            m.triangles.push_back({a, c, d});
                        }
                    }
            }
        // weld the duplicated face-border vertices
        std::map<std::array<double, 3>, std::uint32_t> unique;
        std::vector<std::uint32_t> remap(m.vertices.size());
        std::vector<Vec3> verts;
        for (std::size_t i = 0; i < m.vertices.size(); ++i)
        {
            const auto& p = m.vertices[i];
            auto [it, inserted] = unique.emplace(std::array<double, 3> {p.x(), p.y(), p.z()},
                                                 static_cast<std::uint32_t>(verts.size()));
            if (inserted)
                verts.push_back(p);
            remap[i] = it->second;
        }
        for (auto& t : m.triangles)
            for (auto& v : t)
                v = remap[v];
        m.vertices = std::move(verts);
        return m;
    }

    /// Icosphere with `levels` rounds of 4:1 subdivision.
    inline IndexedMesh sphere(double radius, int levels = 4, const Vec3& center = Vec3::Zero())
    {
        const double t = (1.0 + std::sqrt(5.0)) / 2.0;
        IndexedMesh m;
        m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
        m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                       {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                       {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
        for (auto& v : m.vertices)
            v.normalize();
        for (int l = 0; l < levels; ++l)
        {
            std::map<EdgeKey, std::uint32_t> mid;
            auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
                auto [it, inserted] = mid.emplace(make_edge(a, b), static_cast<std::uint32_t>(m.vertices.size()));
                if (inserted)
                    m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
                return it->second;
            };
            std::vector<Triangle> next;
            next.reserve(m.triangles.size() * 4);
            for (const auto& tri : m.triangles)
            {
                const auto ab = midpoint(tri[0], tri[1]);
                const auto bc = midpoint(tri[1], tri[2]);
                const auto ca = midpoint(tri[2], tri[0]);
                next.push_back({tri[0], ab, ca});
                next.push_back({tri[1], bc, ab});
                next.push_back({tri[2], ca, bc});
                next.push_back({ab, bc, ca});
            }
            m.triangles = std::move(next);
        }
        for (auto& v : m.vertices)
            v = center + radius * v;
        return m;
    }

    /// Flat disk in the plane z = height with `rings` concentric rings.
    inline IndexedMesh disk(double radius, double height = 0.0, int rings = 64, int segments = 256)
    {
        IndexedMesh m;
        m.vertices.push_back({0.0, 0.0, height});
        for (int r = 1; r <= rings; ++r)
            for (int s = 0; s < segments; ++s)
            {
                const double a = 2.0 * std::numbers::pi * s / segments;
                const double rho = radius * r / rings;
                m.vertices.push_back({rho * std::cos(a), rho * std::sin(a), height});
            }
        auto ring = [&](int r, int s) {
            return static_cast<std::uint32_t>(1 + (r - 1) * segments + ((s % segments) + segments) % segments);
        };
        for (int s = 0; s < segments; ++s)
            m.triangles.push_back({0, ring(1, s), ring(1, s + 1)});
        for (int r = 1; r < rings; ++r)
            for (int s = 0; s < segments; ++s)
            {
                m.triangles.push_back({ring(r, s), ring(r + 1, s), ring(r + 1, s + 1)});
                m.triangles.push_back({ring(r, s), ring(r + 1, s + 1), ring(r, s + 1)});
            }
        return m;
    }

    /// Axis-aligned square [0, side]^2 in the plane z = height, split into n x n quads.
    inline IndexedMesh square(double side, double height = 0.0, int n = 1)
    {
        IndexedMesh m;
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
                m.vertices.push_back({side * i / n, side * j / n, height});
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
            {
                const auto a = static_cast<std::uint32_t>(j * (n + 1) + i);
                const auto b = a + 1, c = a + static_cast<std::uint32_t>(n + 1), d = c + 1;
                m.triangles.push_back({a, b, d});
                m.triangles.push_back({a, d, c});
            }
        return m;
    }

    /// Moebius strip of center radius R and half width w:
    /// ((R + v cos(u/2)) cos u, (R + v cos(u/2)) sin u, v sin(u/2)), u in [0, 2 pi), v in [-w, w].
    inline IndexedMesh mobius(double radius = 0.5, double half_width = 0.2, int nu = 480, int nv = 48)
    {
        IndexedMesh m;
        for (int i = 0; i < nu; ++i)
        {
            const double u = 2.0 * std::numbers::pi * i / nu;
            for (int j = 0; j <= nv; ++j)
            {
                const double v = -half_width + 2.0 * half_width * j / nv;
                const double r = radius + v * std::cos(0.5 * u);
                m.vertices.push_back({r * std::cos(u), r * std::sin(u), v * std::sin(0.5 * u)});
            }
        }
        auto id = [&](int i, int j) { return static_cast<std::uint32_t>(i * (nv + 1) + j); };
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nv; ++j)
            {
                std::uint32_t a = id(i, j), b = id(i, j + 1), c, d;
                if (i + 1 < nu)
                {
                    c = id(i + 1, j);
                    d = id(i + 1, j + 1);
                }
                else
                {
                    // the seam glues u = 2 pi back to u = 0 with v reversed
                    c = id(0, nv - j);
                    d = id(0, nv - j - 1);
                }
                m.triangles.push_back({a, c, d});
                m.triangles.push_back({a, d, b});
            }
        return m;
    }
}
