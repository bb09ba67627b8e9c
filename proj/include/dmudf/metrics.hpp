#pragma once

// Surface-sampling quality metrics between two triangle meshes:
// double-sided Chamfer distance (mean squared point-to-surface distance in
// each direction, summed), F-score at a distance threshold, and Hausdorff
// distance (largest point-to-surface distance in either direction).
// Point-to-surface distances are exact (BVH), never point-to-point.

#include "mesh.hpp"
#include "mesh_field.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace dmudf
{
    struct MetricReport
    {
        double chamfer = 0.0;
        double f_score = 0.0; // percent
        double hausdorff = 0.0;
        double precision = 0.0; // percent of candidate samples near the reference
        double recall = 0.0;    // percent of reference samples near the candidate
        std::size_t sample_count = 0;
        double threshold = 0.0;
        std::uint64_t rng_seed = 0;
    };

    struct MetricOptions
    {
        std::size_t samples = 100000;
        double threshold = 1e-3;
        std::uint64_t seed = 0;
        unsigned threads = 0;
    };

    /// Area-weighted uniform samples on the mesh surface. Deterministic for a seed.
    inline std::vector<Vec3> sample_surface(const IndexedMesh& mesh, std::size_t count, std::uint64_t seed)
    {
        if (mesh.triangles.empty())
            throw std::invalid_argument("cannot sample an empty mesh");
        std::vector<double> cdf(mesh.triangles.size());
        double total = 0.0;
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        {
            const auto& tri = mesh.triangles[t];
            total += triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
            cdf[t] = total;
        }
        if (!(total > 0.0))
            throw std::invalid_argument("cannot sample a mesh with zero area");

        std::mt19937_64 rng(seed);
        auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        std::vector<Vec3> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
        {
            const double u = uniform() * total;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            if (it == cdf.end())
                --it;
            const auto& tri = mesh.triangles[static_cast<std::size_t>(it - cdf.begin())];
            const double r1 = std::sqrt(uniform());
            const double r2 = uniform();
            const Vec3& a = mesh.vertices[tri[0]];
            const Vec3& b = mesh.vertices[tri[1]];
            const Vec3& c = mesh.vertices[tri[2]];
            out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
        }
        return out;
    }

    namespace detail
    {
        // Pairwise summation over a fixed split, independent of thread count.
        inline double pairwise_sum(std::span<const double> v)
        {
            if (v.size() <= 64)
            {
                double s = 0.0;
                for (double x : v)
                    s += x;
                return s;
            }
            const std::size_t half = v.size() / 2;
            return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
        }

        inline std::vector<double> distances_to(const MeshField& target, const std::vector<Vec3>& points, unsigned threads)
        {
            std::vector<double> d(points.size());
            parallel_for(points.size(), threads, [&](std::size_t i) { d[i] = target.query(points[i]).distance; });
            return d;
        }
    }

    inline MetricReport evaluate(const IndexedMesh& candidate, const IndexedMesh& reference, const MetricOptions& options = {})
    {
        if (candidate.triangles.empty() || reference.triangles.empty())
            throw std::invalid_argument("metrics require two non-empty meshes");
        if (options.samples < 1000)
            throw std::invalid_argument("metrics require at least 1000 samples per mesh");

        const MeshField cand_field(candidate);
        const MeshField ref_field(reference);
        // both meshes use the same seed so evaluate(A, B) and evaluate(B, A) see identical samples
        const auto cand_pts = sample_surface(candidate, options.samples, options.seed);
        const auto ref_pts = sample_surface(reference, options.samples, options.seed);
        const auto d_cr = detail::distances_to(ref_field, cand_pts, options.threads);
        const auto d_rc = detail::distances_to(cand_field, ref_pts, options.threads);

        auto squares = [](const std::vector<double>& d) {
            std::vector<double> s(d.size());
            for (std::size_t i = 0; i < d.size(); ++i)
                s[i] = d[i] * d[i];
            return s;
        };
        auto within = [&](const std::vector<double>& d) {
            std::size_t n = 0;
            for (double x : d)
                n += x < options.threshold;
            return 100.0 * static_cast<double>(n) / static_cast<double>(d.size());
        };

        MetricReport r;
        const auto n = static_cast<double>(options.samples);
        r.chamfer = detail::pairwise_sum(squares(d_cr)) / n + detail::pairwise_sum(squares(d_rc)) / n;
        r.hausdorff = std::max(*std::max_element(d_cr.begin(), d_cr.end()), *std::max_element(d_rc.begin(), d_rc.end()));
        r.precision = within(d_cr);
        r.recall = within(d_rc);
        r.f_score = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
        r.sample_count = options.samples;
        r.threshold = options.threshold;
        r.rng_seed = options.seed;
        return r;
    }
}
