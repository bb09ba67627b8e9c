#pragma once

/**
 * Per-cell surface point estimation.
 *
 * Each candidate leaf is sampled on a regular lattice (3 x 3 x 3 by default:
 * corners, edge midpoints, face midpoints and center). Every sample p with
 * distance d and unit normal n = grad F / |grad F| yields the projection
 * q = p - d n and an estimated tangent plane n . x = n . p - d. Samples that
 * are too close to the surface (F(p) < delta1) or whose projection lands far
 * from it (F(q) > delta2) are discarded. The remaining planes form a least
 * squares system whose singular values decide how the vertex is placed:
 *
 *   rank 3  Corner  least squares solution
 *   rank 2  Edge    midpoint of the solution line clipped to the cell
 *   rank 1  Plane   centroid of the plane's crossings with the 12 cell edges
 *
 * Lattice samples are shared between neighboring cells, so each lattice
 * position is evaluated once.
 */

#include "field.hpp"
#include "octree.hpp"
#include "parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace dmudf
{
    struct FilterParams
    {
        double delta1 = 2e-3;
        double delta2 = 2e-3;
        double fallback_delta1 = 1e-3;
        bool enabled = true; // false keeps only the gradient-norm guard

        void validate() const
        {
            if (!enabled)
                return;
            if (!(fallback_delta1 > 0.0) || !(fallback_delta1 <= delta1))
                throw std::invalid_argument("filter requires 0 < fallback_delta1 <= delta1");
            if (!(delta2 > 0.0))
                throw std::invalid_argument("filter requires delta2 > 0");
        }

        static FilterParams disabled()
        {
            FilterParams p;
            p.enabled = false;
            return p;
        }
    };

    // Gradients shorter than this cannot be normalized; such samples are invalid.
    inline constexpr double kMinGradientNorm = 1e-8;

    struct SamplePoint
    {
        Vec3 position = Vec3::Zero();   // p
        double distance = 0.0;          // F(p)
        Vec3 normal = Vec3::Zero();     // grad F(p) normalized; zero if the gradient vanished
        Vec3 projection = Vec3::Zero(); // q = p - F(p) n
        double projection_distance = std::numeric_limits<double>::infinity(); // F(q)
        bool gradient_ok = false;
        bool valid = false;
    };

    /// Criterion 1 (F(p) >= delta1), criterion 2 (F(q) <= delta2) and the
    /// gradient guard, with an explicit delta1 so the fallback retry can reuse it.
    inline bool passes_filter(const SamplePoint& s, const FilterParams& params, double delta1)
    {
        if (!s.gradient_ok)
            return false;
        if (!params.enabled)
            return true;
        return s.distance >= delta1 && s.projection_distance <= params.delta2;
    }

    /// Fills normal/projection from a raw (distance, gradient) pair.
    inline SamplePoint make_sample(const Vec3& p, double d, const Vec3& gradient)
    {
        SamplePoint s;
        s.position = p;
        s.distance = d;
        const double len = gradient.norm();
        s.gradient_ok = len >= kMinGradientNorm;
        if (s.gradient_ok)
        {
            s.normal = gradient / len;
            s.projection = p - d * s.normal;
        }
        else
            s.projection = p;
        return s;
    }

    /// Evaluates F(q) when needed and sets s.valid. Returns s.valid.
    inline bool filter_sample(SamplePoint& s, const ScalarField& field, const FilterParams& params)
    {
        if (s.gradient_ok && params.enabled)
            s.projection_distance = field.distance(s.projection);
        s.valid = passes_filter(s, params, params.delta1);
        return s.valid;
    }

    struct SamplingPattern
    {
        int per_axis = 3; // 3 -> 27 samples per cell, 5 -> 125

        int subdivisions() const { return per_axis - 1; }
        int count() const { return per_axis * per_axis * per_axis; }
    };

    /// Lattice positions of a cell in x-fastest order.
    inline std::vector<Vec3> cell_sample_positions(const OctreeCell& cell, SamplingPattern pattern = {})
    {
        std::vector<Vec3> out;
        out.reserve(static_cast<std::size_t>(pattern.count()));
        const double step = cell.size / pattern.subdivisions();
        for (int k = 0; k < pattern.per_axis; ++k)
            for (int j = 0; j < pattern.per_axis; ++j)
                for (int i = 0; i < pattern.per_axis; ++i)
                    out.push_back(cell.min_corner + step * Vec3(i, j, k));
        return out;
    }

    /// Samples one cell without any sharing: every lattice point and every
    /// projection is evaluated directly.
    inline std::vector<SamplePoint> sample_cell(const OctreeCell& cell, const ScalarField& field, const FilterParams& params,
                                                SamplingPattern pattern = {})
    {
        const auto positions = cell_sample_positions(cell, pattern);
        const auto response = field.eval_batch(positions);
        std::vector<SamplePoint> out;
        out.reserve(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i)
            out.push_back(make_sample(positions[i], response.distances[i], response.gradients[i]));
        std::vector<Vec3> proj;
        for (const auto& s : out)
            if (s.gradient_ok)
                proj.push_back(s.projection);
        if (params.enabled && !proj.empty())
        {
            const auto pr = field.eval_batch(proj);
            std::size_t k = 0;
            for (auto& s : out)
                if (s.gradient_ok)
                    s.projection_distance = pr.distances[k++];
        }
        for (auto& s : out)
            s.valid = passes_filter(s, params, params.delta1);
        return out;
    }

    enum class FeatureClass : std::uint8_t
    {
        Corner,
        Edge,
        Plane
    };

    inline const char* to_string(FeatureClass c)
    {
        switch (c)
        {
        case FeatureClass::Corner: return "corner";
        case FeatureClass::Edge: return "edge";
        case FeatureClass::Plane: return "plane";
        }
        return "?";
    }

    struct QefRow
    {
        Vec3 normal;
        double rhs; // n . p - d
    };

    /// Tangent-plane rows n_i . x = n_i . p_i - d_i.
    struct QefSystem
    {
        std::vector<QefRow> rows;
        Vec3 centroid = Vec3::Zero(); // of the contributing projections

        static QefSystem from_samples(std::span<const SamplePoint> samples, bool valid_only = true)
        {
            QefSystem sys;
            for (const auto& s : samples)
            {
                if (valid_only && !s.valid)
                    continue;
                if (!s.gradient_ok)
                    continue;
                sys.rows.push_back({s.normal, s.normal.dot(s.position) - s.distance});
                sys.centroid += s.projection;
            }
            if (!sys.rows.empty())
                sys.centroid /= static_cast<double>(sys.rows.size());
            return sys;
        }

        /// Sum of squared plane residuals at x.
        double residual(const Vec3& x) const
        {
            double r = 0.0;
            for (const auto& row : rows)
            {
                const double e = row.normal.dot(x) - row.rhs;
                r += e * e;
            }
            return r;
        }
    };

    struct DualVertex
    {
        Vec3 position = Vec3::Zero();
        FeatureClass classification = FeatureClass::Corner;
        Vec3 direction = Vec3::Zero(); // edge direction (Edge) or plane normal (Plane)
        std::uint64_t cell_key = 0;
        Vec3 singular_values = Vec3::Zero(); // sigma0 >= sigma1 >= sigma2
        int n_valid_samples = 0;
        bool clamped = false; // placement fell back or left the cell and was clamped
        bool inside = true;   // placement lies in the closed cell
        double miss_distance = 0.0; // distance from the unclamped placement to the cell
        Vec3 placement = Vec3::Zero(); // unclamped placement
    };

    struct QefOptions
    {
        double sigma_ratio = 0.1; // sigma_i counts as zero when sigma_i / sigma0 < ratio
        double inside_tolerance = 1e-7; // slack, as a fraction of the cell size, of the containment test
    };

    namespace detail
    {
        inline std::optional<Vec3> clip_line_midpoint(const Aabb& box, const Vec3& origin, const Vec3& dir, double tol)
        {
            double t0 = -std::numeric_limits<double>::infinity();
            double t1 = std::numeric_limits<double>::infinity();
            for (int k = 0; k < 3; ++k)
            {
                if (std::abs(dir[k]) < 1e-14)
                {
                    if (origin[k] < box.lo[k] - tol || origin[k] > box.hi[k] + tol)
                        return std::nullopt;
                    continue;
                }
                double a = (box.lo[k] - origin[k]) / dir[k];
                double b = (box.hi[k] - origin[k]) / dir[k];
                if (a > b)
                    std::swap(a, b);
                t0 = std::max(t0, a);
                t1 = std::min(t1, b);
            }
            if (!(t1 - t0 > tol))
                return std::nullopt;
            return origin + 0.5 * (t0 + t1) * dir;
        }

        inline std::optional<Vec3> plane_edge_centroid(const Aabb& box, const Vec3& normal, double offset, double tol)
        {
            static constexpr int kEdges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3},
                                                  {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
            std::array<Vec3, 8> corner;
            for (int c = 0; c < 8; ++c)
                corner[c] = Vec3(c & 1 ? box.hi.x() : box.lo.x(), c & 2 ? box.hi.y() : box.lo.y(),
                                 c & 4 ? box.hi.z() : box.lo.z());
            Vec3 sum = Vec3::Zero();
            int n = 0;
            for (const auto& e : kEdges)
            {
                const Vec3& a = corner[e[0]];
                const Vec3& b = corner[e[1]];
                const double sa = normal.dot(a) - offset;
                const double sb = normal.dot(b) - offset;
                const bool on_a = std::abs(sa) <= tol;
                const bool on_b = std::abs(sb) <= tol;
                if (on_a || on_b)
                {
                    // edges lying in the plane contribute both endpoints
                    if (on_a)
                    {
                        sum += a;
                        ++n;
                    }
                    if (on_b)
                    {
                        sum += b;
                        ++n;
                    }
                    continue;
                }
                if ((sa < 0.0) != (sb < 0.0))
                {
                    sum += a + (sa / (sa - sb)) * (b - a);
                    ++n;
                }
            }
            if (n == 0)
                return std::nullopt;
            return sum / n;
        }
    }

    /// Solves one vertex from a tangent-plane system inside `cell`.
    /// Returns nullopt with fewer than 3 rows.
    inline std::optional<DualVertex> solve_qef(const QefSystem& sys, const OctreeCell& cell, const QefOptions& options = {})
    {
        if (sys.rows.size() < 3)
            return std::nullopt;

        const Vec3 c = cell.center();
        const auto m = static_cast<Eigen::Index>(sys.rows.size());
        Eigen::MatrixXd a(m, 3);
        Eigen::VectorXd b(m);
        for (Eigen::Index i = 0; i < m; ++i)
        {
            const auto& row = sys.rows[static_cast<std::size_t>(i)];
            a.row(i) = row.normal.transpose();
            b[i] = row.rhs - row.normal.dot(c);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec3 sigma = svd.singularValues();
        if (!(sigma[0] > 0.0))
            return std::nullopt;

        int rank = 0;
        for (int i = 0; i < 3; ++i)
            if (sigma[i] >= options.sigma_ratio * sigma[0])
                ++rank;

        // truncated pseudoinverse: minimum-norm solution relative to the cell center
        const Eigen::VectorXd utb = svd.matrixU().transpose() * b;
        Vec3 y = Vec3::Zero();
        for (int i = 0; i < rank; ++i)
            y += svd.matrixV().col(i) * (utb[i] / sigma[i]);
        const Vec3 anchor = c + y;

        DualVertex v;
        v.cell_key = cell.morton_key;
        v.singular_values = sigma;
        v.n_valid_samples = static_cast<int>(sys.rows.size());

        const Aabb box = cell.box();
        const double tol = 1e-9 * cell.size;
        std::optional<Vec3> placed;
        if (rank == 3)
        {
            v.classification = FeatureClass::Corner;
            placed = anchor;
        }
        else if (rank == 2)
        {
            v.classification = FeatureClass::Edge;
            v.direction = svd.matrixV().col(2).normalized();
            placed = detail::clip_line_midpoint(box, anchor, v.direction, tol);
        }
        else
        {
            v.classification = FeatureClass::Plane;
            v.direction = svd.matrixV().col(0).normalized();
            placed = detail::plane_edge_centroid(box, v.direction, v.direction.dot(anchor), tol);
        }

        if (!placed)
        {
            // no line/plane crossing of the cell: clamped least squares fallback
            v.position = box.clamp(anchor);
            v.clamped = true;
            v.inside = box.contains(anchor, options.inside_tolerance * cell.size);
            v.miss_distance = std::sqrt(box.squared_distance(anchor));
            v.placement = anchor;
            return v;
        }
        v.inside = box.contains(*placed, options.inside_tolerance * cell.size);
        v.miss_distance = std::sqrt(box.squared_distance(*placed));
        v.placement = *placed;
        v.position = box.clamp(*placed);
        v.clamped = (v.position - *placed).norm() > 0.0;
        return v;
    }

    /// Sorted-by-key list of vertices with binary-search lookup.
    class VertexMap
    {
    public:
        VertexMap() = default;
        explicit VertexMap(std::vector<DualVertex> verts) : verts_(std::move(verts))
        {
            std::sort(verts_.begin(), verts_.end(),
                      [](const DualVertex& a, const DualVertex& b) { return a.cell_key < b.cell_key; });
        }

        const DualVertex* find(std::uint64_t key) const
        {
            auto it = std::lower_bound(verts_.begin(), verts_.end(), key,
                                       [](const DualVertex& v, std::uint64_t k) { return v.cell_key < k; });
            return it != verts_.end() && it->cell_key == key ? &*it : nullptr;
        }

        std::size_t size() const { return verts_.size(); }
        bool empty() const { return verts_.empty(); }
        const std::vector<DualVertex>& vertices() const { return verts_; }
        auto begin() const { return verts_.begin(); }
        auto end() const { return verts_.end(); }

    private:
        std::vector<DualVertex> verts_;
    };

    struct VertexerOptions
    {
        FilterParams filter;
        QefOptions qef;
        SamplingPattern pattern;
        bool require_inside = true; // demote cells whose solved point falls outside the closed cell
        double near_miss = 0.25;    // demoted cells missing by less than this fraction of their size are kept aside
        unsigned threads = 0;
    };

    struct VertexerStats
    {
        std::size_t lattice_points = 0;     // unique sample positions evaluated
        std::size_t projection_queries = 0; // F(q) evaluations
        std::size_t fallback_cells = 0;     // cells that needed the lowered delta1
        std::size_t demoted_few_samples = 0;
        std::size_t demoted_outside = 0; // solved point did not fall inside the cell
        std::size_t clamped = 0;

        std::size_t field_queries() const { return lattice_points + projection_queries; }
        std::size_t demoted() const { return demoted_few_samples + demoted_outside; }
    };

    struct VertexerResult
    {
        VertexMap vertices;
        VertexMap near_misses;              // demoted cells whose placement only just left the cell
        std::vector<std::uint64_t> demoted; // sorted cell keys
        VertexerStats stats;
    };

    /// Shared lattice samples for a set of leaves at one depth.
    class SampleCache
    {
    public:
        SampleCache(const std::vector<OctreeCell>& leaves, const OctreeConfig& config, SamplingPattern pattern)
            : config_(config), pattern_(pattern)
        {
            const auto sub = static_cast<std::uint32_t>(pattern.subdivisions());
            keys_.reserve(leaves.size() * static_cast<std::size_t>(pattern.count()));
            for (const auto& cell : leaves)
                for (int k = 0; k < pattern.per_axis; ++k)
                    for (int j = 0; j < pattern.per_axis; ++j)
                        for (int i = 0; i < pattern.per_axis; ++i)
                            keys_.push_back(morton_encode(cell.coord[0] * sub + i, cell.coord[1] * sub + j,
                                                          cell.coord[2] * sub + k));
            std::sort(keys_.begin(), keys_.end());
            keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
        }

        Vec3 position(std::uint64_t key) const
        {
            const auto idx = morton_decode(key);
            const double step = config_.leaf_size() / pattern_.subdivisions();
            return config_.domain_min + step * Vec3(idx[0], idx[1], idx[2]);
        }

        void evaluate(const ScalarField& field, const FilterParams& params, unsigned threads, VertexerStats& stats)
        {
            constexpr std::size_t kBatch = 1024;
            samples_.resize(keys_.size());
            const std::size_t batches = (keys_.size() + kBatch - 1) / kBatch;
            parallel_for(batches, threads, [&](std::size_t bi) {
                const std::size_t begin = bi * kBatch;
                const std::size_t end = std::min(keys_.size(), begin + kBatch);
                std::vector<Vec3> pts(end - begin);
                for (std::size_t i = begin; i < end; ++i)
                    pts[i - begin] = position(keys_[i]);
                std::vector<double> d(pts.size());
                std::vector<Vec3> g(pts.size());
                field.eval_into(pts, d, g);
                std::vector<Vec3> proj;
                std::vector<std::size_t> proj_idx;
                for (std::size_t i = begin; i < end; ++i)
                {
                    samples_[i] = make_sample(pts[i - begin], d[i - begin], g[i - begin]);
                    if (params.enabled && samples_[i].gradient_ok)
                    {
                        proj.push_back(samples_[i].projection);
                        proj_idx.push_back(i);
                    }
                }
                if (!proj.empty())
                {
                    std::vector<double> pd(proj.size());
                    std::vector<Vec3> pg(proj.size());
                    field.eval_into(proj, pd, pg);
                    for (std::size_t k = 0; k < proj.size(); ++k)
                        samples_[proj_idx[k]].projection_distance = pd[k];
                }
            });
            stats.lattice_points += keys_.size();
            for (const auto& s : samples_)
                if (params.enabled && s.gradient_ok)
                    ++stats.projection_queries;
        }

        const SamplePoint& at(std::uint64_t key) const
        {
            const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
            return samples_[static_cast<std::size_t>(it - keys_.begin())];
        }

        std::uint64_t key_for(const OctreeCell& cell, int i, int j, int k) const
        {
            const auto sub = static_cast<std::uint32_t>(pattern_.subdivisions());
            return morton_encode(cell.coord[0] * sub + i, cell.coord[1] * sub + j, cell.coord[2] * sub + k);
        }

        std::size_t size() const { return keys_.size(); }

    private:
        OctreeConfig config_;
        SamplingPattern pattern_;
        std::vector<std::uint64_t> keys_;
        std::vector<SamplePoint> samples_;
    };

    /// Solves one vertex per leaf. Leaves with fewer than 3 valid samples after
    /// the fallback delta1, or whose solved point falls outside the cell, are
    /// demoted to empty.
    inline VertexerResult solve_all(const std::vector<OctreeCell>& leaves, const ScalarField& field,
                                    const OctreeConfig& config, const VertexerOptions& options)
    {
        options.filter.validate();
        VertexerResult result;
        if (leaves.empty())
            return result;

        SampleCache cache(leaves, config, options.pattern);
        cache.evaluate(field, options.filter, options.threads, result.stats);

        struct CellOutcome
        {
            std::optional<DualVertex> vertex;
            bool fallback = false;
            bool few = false;
        };
        std::vector<CellOutcome> outcomes(leaves.size());
        const int per_axis = options.pattern.per_axis;

        parallel_for(leaves.size(), options.threads, [&](std::size_t li) {
            const OctreeCell& cell = leaves[li];
            std::vector<SamplePoint> samples;
            samples.reserve(static_cast<std::size_t>(options.pattern.count()));
            for (int k = 0; k < per_axis; ++k)
                for (int j = 0; j < per_axis; ++j)
                    for (int i = 0; i < per_axis; ++i)
                        samples.push_back(cache.at(cache.key_for(cell, i, j, k)));

            auto mark = [&](double delta1) {
                int n = 0;
                for (auto& s : samples)
                {
                    s.valid = passes_filter(s, options.filter, delta1);
                    n += s.valid;
                }
                return n;
            };
            CellOutcome& out = outcomes[li];
            if (mark(options.filter.delta1) < 3 && options.filter.enabled)
            {
                out.fallback = true;
                mark(options.filter.fallback_delta1);
            }
            auto v = solve_qef(QefSystem::from_samples(samples), cell, options.qef);
            if (!v)
            {
                out.few = true;
                return;
            }
            out.vertex = v;
        });

        std::vector<DualVertex> verts, misses;
        for (std::size_t li = 0; li < leaves.size(); ++li)
        {
            auto& out = outcomes[li];
            result.stats.fallback_cells += out.fallback;
            if (out.few)
            {
                ++result.stats.demoted_few_samples;
                result.demoted.push_back(leaves[li].morton_key);
                continue;
            }
            if (options.require_inside && !out.vertex->inside)
            {
                ++result.stats.demoted_outside;
                result.demoted.push_back(leaves[li].morton_key);
                if (out.vertex->miss_distance <= options.near_miss * leaves[li].size)
                    misses.push_back(*out.vertex);
                continue;
            }
            result.stats.clamped += out.vertex->clamped;
            verts.push_back(*out.vertex);
        }
        std::sort(result.demoted.begin(), result.demoted.end());
        result.vertices = VertexMap(std::move(verts));
        result.near_misses = VertexMap(std::move(misses));
        return result;
    }

    /// One JSON object per line: {cell_key, position, class, sigmas, n_valid_samples}.
    inline void write_vertex_dump(std::ostream& os, const VertexMap& vertices)
    {
        const auto old = os.precision(17);
        for (const auto& v : vertices)
            os << "{\"cell_key\":" << v.cell_key << ",\"position\":[" << v.position.x() << "," << v.position.y() << ","
               << v.position.z() << "],\"class\":\"" << to_string(v.classification) << "\",\"sigmas\":["
               << v.singular_values[0] << "," << v.singular_values[1] << "," << v.singular_values[2]
               << "],\"n_valid_samples\":" << v.n_valid_samples << "}\n";
        os.precision(old);
    }
}
