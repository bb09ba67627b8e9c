#pragma once

// Small geometric kernel shared by the fields, the mesher and the metrics.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace dmudf
{
    using Vec3 = Eigen::Vector3d;
    using Vec3i = Eigen::Vector3i;

    struct Aabb
    {
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

        static Aabb cube(const Vec3& min_corner, double size)
        {
            return {min_corner, min_corner + Vec3::Constant(size)};
        }

        void extend(const Vec3& p)
        {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }

        void extend(const Aabb& b)
        {
            lo = lo.cwiseMin(b.lo);
            hi = hi.cwiseMax(b.hi);
        }

        Vec3 center() const { return 0.5 * (lo + hi); }
        Vec3 extent() const { return hi - lo; }

        bool contains(const Vec3& p, double tol = 0.0) const
        {
            return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
        }

        // Squared distance from p to the box (0 inside).
        double squared_distance(const Vec3& p) const
        {
            const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
            return d.squaredNorm();
        }

        Vec3 clamp(const Vec3& p) const { return p.cwiseMax(lo).cwiseMin(hi); }
    };

    /// Closest point on triangle (a, b, c) to p. Region-based walk over the
    /// Voronoi regions of vertices, edges and face.
    inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
    {
        const Vec3 ab = b - a;
        const Vec3 ac = c - a;
        const Vec3 ap = p - a;
        const double d1 = ab.dot(ap);
        const double d2 = ac.dot(ap);
        if (d1 <= 0.0 && d2 <= 0.0)
            return a;

        const Vec3 bp = p - b;
        const double d3 = ab.dot(bp);
        const double d4 = ac.dot(bp);
        if (d3 >= 0.0 && d4 <= d3)
            return b;

        const double vc = d1 * d4 - d3 * d2;
        if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
            return a + (d1 / (d1 - d3)) * ab;

        const Vec3 cp = p - c;
        const double d5 = ab.dot(cp);
        const double d6 = ac.dot(cp);
        if (d6 >= 0.0 && d5 <= d6)
            return c;

        const double vb = d5 * d2 - d1 * d6;
        if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
            return a + (d2 / (d2 - d6)) * ac;

        const double va = d3 * d6 - d5 * d4;
        if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
            return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

        const double denom = 1.0 / (va + vb + vc);
        const double v = vb * denom;
        const double w = vc * denom;
        return a + ab * v + ac * w;
    }

    inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c)
    {
        return 0.5 * (b - a).cross(c - a).norm();
    }

    /// Unit normal of (a, b, c); zero vector for a degenerate triangle.
    inline Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c)
    {
        const Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    }

    /// Aspect ratio normalized so an equilateral triangle scores 1.
    /// Degenerate triangles score +inf.
    inline double triangle_aspect_ratio(const Vec3& a, const Vec3& b, const Vec3& c)
    {
        const double la = (b - c).norm();
        const double lb = (c - a).norm();
        const double lc = (a - b).norm();
        const double area = triangle_area(a, b, c);
        const double longest = std::max({la, lb, lc});
        if (!(area > 1e-300 * longest * longest) || area == 0.0)
            return std::numeric_limits<double>::infinity();
        const double perimeter = la + lb + lc;
        // inradius r = area / s; ratio = longest / (2 sqrt(3) r)
        return longest * perimeter / (4.0 * std::sqrt(3.0) * area);
    }

    inline std::uint64_t spread_bits_3(std::uint32_t v)
    {
        std::uint64_t x = v & 0x1fffff;
        x = (x | (x << 32)) & 0x1f00000000ffffULL;
        x = (x | (x << 16)) & 0x1f0000ff0000ffULL;
        x = (x | (x << 8)) & 0x100f00f00f00f00fULL;
        x = (x | (x << 4)) & 0x10c30c30c30c30c3ULL;
        x = (x | (x << 2)) & 0x1249249249249249ULL;
        return x;
    }

    /// Interleaved-bit key of a non-negative integer cell coordinate.
    inline std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z)
    {
        return spread_bits_3(x) | (spread_bits_3(y) << 1) | (spread_bits_3(z) << 2);
    }

    inline std::uint32_t compact_bits_3(std::uint64_t x)
    {
        x &= 0x1249249249249249ULL;
        x = (x ^ (x >> 2)) & 0x10c30c30c30c30c3ULL;
        x = (x ^ (x >> 4)) & 0x100f00f00f00f00fULL;
        x = (x ^ (x >> 8)) & 0x1f0000ff0000ffULL;
        x = (x ^ (x >> 16)) & 0x1f00000000ffffULL;
        x = (x ^ (x >> 32)) & 0x1fffff;
        return static_cast<std::uint32_t>(x);
    }

    inline std::array<std::uint32_t, 3> morton_decode(std::uint64_t key)
    {
        return {compact_bits_3(key), compact_bits_3(key >> 1), compact_bits_3(key >> 2)};
    }
}
