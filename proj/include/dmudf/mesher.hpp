#pragma once

/**
 * Dual mesh assembly on the regular grid of maximum-depth cells.
 *
 * Every grid edge is surrounded by four cells. When all four hold a dual
 * vertex the edge yields a quad, which is split into two triangles along the
 * better-shaped diagonal. Triangles whose normal contradicts the feature
 * classification of one of their vertices are dropped: a Plane vertex wants
 * the triangle normal parallel to its plane normal, an Edge vertex wants it
 * orthogonal to its edge direction, a Corner vertex accepts anything.
 *
 * manifold_repair() rebuilds connectivity from the outer envelope of the
 * blocky model, i.e. the same faces with every vertex snapped to its cell
 * center. In that model each quad is the dual-grid square crossing its grid
 * edge, so flooding the grid vertices from the domain boundary, stopped by
 * edges that carry a face, tells which side of each face is outside.
 */

#include "mesh.hpp"
#include "octree.hpp"
#include "parallel.hpp"
#include "vertexer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dmudf
{
    enum class Axis : std::uint8_t
    {
        X = 0,
        Y = 1,
        Z = 2
    };

    /// The four cells around one grid edge, in right-handed order about the axis.
    struct EdgeStencil
    {
        Axis axis = Axis::X;
        std::array<std::uint32_t, 3> base {0, 0, 0}; // grid vertex where the edge starts
        std::array<std::uint64_t, 4> cells {};       // cell keys
    };

    struct QuadCandidate
    {
        EdgeStencil stencil;
        std::array<std::uint32_t, 4> vertices {}; // indices into the vertex map order
    };

    inline std::uint64_t edge_tag(const EdgeStencil& s)
    {
        return morton_encode(s.base[0], s.base[1], s.base[2]) * 3 + static_cast<std::uint64_t>(s.axis);
    }

    /// The stencil of the edge along `axis` starting at grid vertex `base`.
    /// Returns false when the edge touches the domain boundary (fewer than 4 cells).
    inline bool make_stencil(Axis axis, std::array<std::uint32_t, 3> base, int resolution, EdgeStencil& out)
    {
        const int a = static_cast<int>(axis);
        const int b = (a + 1) % 3;
        const int c = (a + 2) % 3;
        if (base[a] >= static_cast<std::uint32_t>(resolution) || base[b] == 0 || base[c] == 0 ||
            base[b] >= static_cast<std::uint32_t>(resolution) || base[c] >= static_cast<std::uint32_t>(resolution))
            return false;
        out.axis = axis;
        out.base = base;
        static constexpr int kOffsets[4][2] = {{-1, -1}, {0, -1}, {0, 0}, {-1, 0}};
        for (int k = 0; k < 4; ++k)
        {
            std::array<std::uint32_t, 3> cell = base;
            cell[b] = static_cast<std::uint32_t>(static_cast<int>(base[b]) + kOffsets[k][0]);
            cell[c] = static_cast<std::uint32_t>(static_cast<int>(base[c]) + kOffsets[k][1]);
            out.cells[k] = morton_encode(cell[0], cell[1], cell[2]);
        }
        return true;
    }

    /// One quad per grid edge whose four incident cells all own a vertex.
    /// Output is ordered by (owning vertex key, axis) for determinism.
    inline std::vector<QuadCandidate> build_quads(const VertexMap& vertices, int max_depth, unsigned threads = 0)
    {
        const int res = 1 << max_depth;
        const auto& verts = vertices.vertices();
        auto index_of = [&](std::uint64_t key) -> std::int64_t {
            const DualVertex* v = vertices.find(key);
            return v ? static_cast<std::int64_t>(v - verts.data()) : -1;
        };

        std::vector<std::array<QuadCandidate, 3>> found(verts.size());
        std::vector<std::uint8_t> mask(verts.size(), 0);
        parallel_for(verts.size(), threads, [&](std::size_t vi) {
            // each stencil is generated once, from its lowest cell (offset (-1,-1))
            const auto c = morton_decode(verts[vi].cell_key);
            for (int a = 0; a < 3; ++a)
            {
                const int b = (a + 1) % 3, cc = (a + 2) % 3;
                std::array<std::uint32_t, 3> base = c;
                base[b] += 1;
                base[cc] += 1;
                EdgeStencil s;
                if (!make_stencil(static_cast<Axis>(a), base, res, s))
                    continue;
                QuadCandidate q;
                q.stencil = s;
                bool all = true;
                for (int k = 0; k < 4 && all; ++k)
                {
                    const auto idx = index_of(s.cells[k]);
                    all = idx >= 0;
                    if (all)
                        q.vertices[k] = static_cast<std::uint32_t>(idx);
                }
                if (all)
                {
                    found[vi][a] = q;
                    mask[vi] |= static_cast<std::uint8_t>(1u << a);
                }
            }
        });

        std::vector<QuadCandidate> quads;
        for (std::size_t vi = 0; vi < verts.size(); ++vi)
            for (int a = 0; a < 3; ++a)
                if (mask[vi] & (1u << a))
                    quads.push_back(found[vi][a]);
        return quads;
    }

    struct MesherOptions
    {
        double normal_tolerance_deg = 25.0;
        unsigned threads = 0;
    };

    struct TriangulationStats
    {
        std::size_t quads = 0;
        std::size_t triangles_accepted = 0;
        std::size_t rejected_degenerate = 0;
        std::size_t rejected_normal = 0;

        std::size_t rejected() const { return rejected_degenerate + rejected_normal; }
    };

    /// Triangle mesh that remembers which grid edge produced each triangle.
    struct DualMesh
    {
        IndexedMesh mesh;
        std::vector<std::uint64_t> triangle_edges; // edge_tag per triangle
    };

    /// True when the triangle normal agrees with the vertex's classification.
    inline bool normal_consistent(const Vec3& tri_normal, const DualVertex& v, double tolerance_deg)
    {
        const double tol = tolerance_deg * std::numbers::pi / 180.0;
        switch (v.classification)
        {
        case FeatureClass::Plane: return std::abs(tri_normal.dot(v.direction)) >= std::cos(tol);
        case FeatureClass::Edge: return std::abs(tri_normal.dot(v.direction)) <= std::sin(tol);
        case FeatureClass::Corner: return true;
        }
        return true;
    }

    namespace detail
    {
        struct QuadTriangles
        {
            std::array<Triangle, 2> tris;
            std::uint8_t keep = 0; // bit per triangle
            std::uint8_t degenerate = 0;
            std::uint8_t inconsistent = 0;
        };

        // Splits a quad along the diagonal giving the smaller worst aspect ratio,
        // then drops degenerate and normal-inconsistent halves.
        // A pivot in 0..3 forces the diagonal through that corner.
        inline QuadTriangles triangulate_quad(const std::array<std::uint32_t, 4>& q, const std::array<const DualVertex*, 4>& v,
                                              double tolerance_deg, int pivot = -1, double sliver_ratio = 0.0)
        {
            const auto p = [&](int k) -> const Vec3& { return v[static_cast<std::size_t>(k)]->position; };
            const double ra = std::max(triangle_aspect_ratio(p(0), p(1), p(2)), triangle_aspect_ratio(p(0), p(2), p(3)));
            const double rb = std::max(triangle_aspect_ratio(p(0), p(1), p(3)), triangle_aspect_ratio(p(1), p(2), p(3)));
            static constexpr int kDiagA[2][3] = {{0, 1, 2}, {0, 2, 3}};
            static constexpr int kDiagB[2][3] = {{0, 1, 3}, {1, 2, 3}};
            const bool use_b = pivot < 0 ? rb < ra : pivot % 2 == 1;
            const auto& local = use_b ? kDiagB : kDiagA;
            QuadTriangles r;
            for (int t = 0; t < 2; ++t)
            {
                const int a = local[t][0], b = local[t][1], c = local[t][2];
                r.tris[static_cast<std::size_t>(t)] = {q[static_cast<std::size_t>(a)], q[static_cast<std::size_t>(b)],
                                                       q[static_cast<std::size_t>(c)]};
                if (!std::isfinite(triangle_aspect_ratio(p(a), p(b), p(c))))
                {
                    r.degenerate |= static_cast<std::uint8_t>(1u << t);
                    continue;
                }
                const Vec3 n = triangle_normal(p(a), p(b), p(c));
                const double shortest = std::min({(p(a) - p(b)).norm(), (p(b) - p(c)).norm(), (p(c) - p(a)).norm()});
                const double longest = std::max({(p(a) - p(b)).norm(), (p(b) - p(c)).norm(), (p(c) - p(a)).norm()});
                bool ok = true;
                for (int k : {a, b, c})
                    ok = ok && normal_consistent(n, *v[static_cast<std::size_t>(k)], tolerance_deg);
                ok = ok || shortest < sliver_ratio * longest;
                if (!ok)
                {
                    r.inconsistent |= static_cast<std::uint8_t>(1u << t);
                    continue;
                }
                r.keep |= static_cast<std::uint8_t>(1u << t);
            }
            return r;
        }
    }

    inline DualMesh validate_and_triangulate(const std::vector<QuadCandidate>& quads, const VertexMap& vertices,
                                             const MesherOptions& options = {}, TriangulationStats* stats = nullptr)
    {
        const auto& verts = vertices.vertices();
        DualMesh out;
        out.mesh.vertices.reserve(verts.size());
        out.mesh.vertex_cells.reserve(verts.size());
        for (const auto& v : verts)
        {
            out.mesh.vertices.push_back(v.position);
            out.mesh.vertex_cells.push_back(v.cell_key);
        }

        std::vector<detail::QuadTriangles> results(quads.size());
        parallel_for(quads.size(), options.threads, [&](std::size_t qi) {
            const auto& q = quads[qi].vertices;
            results[qi] = detail::triangulate_quad(q, {&verts[q[0]], &verts[q[1]], &verts[q[2]], &verts[q[3]]},
                                                   options.normal_tolerance_deg);
        });

        TriangulationStats local;
        local.quads = quads.size();
        for (std::size_t qi = 0; qi < quads.size(); ++qi)
        {
            const auto& r = results[qi];
            for (int t = 0; t < 2; ++t)
            {
                if (r.keep & (1u << t))
                {
                    out.mesh.triangles.push_back(r.tris[t]);
                    out.triangle_edges.push_back(edge_tag(quads[qi].stencil));
                    ++local.triangles_accepted;
                }
                local.rejected_degenerate += (r.degenerate >> t) & 1u;
                local.rejected_normal += (r.inconsistent >> t) & 1u;
            }
        }
        if (stats)
            *stats = local;
        return out;
    }

    /// Admits near-miss cells (demoted because their placement only just left
    /// the cell) where they close holes. A surface passing close to a grid
    /// vertex can graze the cells at both ends of a cube diagonal; when the
    /// vertex solve demotes both, every edge around that grid vertex loses one
    /// of its four cells and a hexagonal hole opens. A candidate is accepted
    /// only if all faces it completes validate and every edge they add between
    /// existing vertices either closes a boundary edge or stays interior to
    /// the new faces. Candidates are visited in key order and placed at their
    /// unclamped solution. Returns the faces added; the mesh gains one vertex
    /// per accepted cell.
    inline std::vector<QuadCandidate> rescue_near_misses(DualMesh& dm, const VertexMap& vertices, const VertexMap& near_misses,
                                                         int max_depth, const MesherOptions& options = {})
    {
        std::vector<QuadCandidate> added;
        if (near_misses.empty() || dm.mesh.triangles.empty())
            return added;
        const int res = 1 << max_depth;
        const auto& verts = vertices.vertices();

        std::vector<const DualVertex*> info;
        info.reserve(verts.size());
        for (const auto& v : verts)
            info.push_back(&v);
        std::deque<DualVertex> unclamped;
        std::map<std::uint64_t, std::uint32_t> rescued;
        auto index_of = [&](std::uint64_t key) -> std::int64_t {
            if (const DualVertex* v = vertices.find(key))
                return v - verts.data();
            const auto it = rescued.find(key);
            return it == rescued.end() ? -1 : static_cast<std::int64_t>(it->second);
        };

        std::map<EdgeKey, int> degree = edge_degrees(dm.mesh);
        for (const auto& cand : near_misses)
        {
            const auto cell = morton_decode(cand.cell_key);
            const auto self = static_cast<std::uint32_t>(dm.mesh.vertices.size());
            std::vector<QuadCandidate> quads;
            for (int a = 0; a < 3; ++a)
            {
                const int b = (a + 1) % 3, c = (a + 2) % 3;
                // the four edges along axis a that border this cell
                for (int db = 0; db <= 1; ++db)
                    for (int dc = 0; dc <= 1; ++dc)
                    {
                        std::array<std::uint32_t, 3> base = cell;
                        base[b] += static_cast<std::uint32_t>(db);
                        base[c] += static_cast<std::uint32_t>(dc);
                        EdgeStencil st;
                        if (!make_stencil(static_cast<Axis>(a), base, res, st))
                            continue;
                        QuadCandidate q;
                        q.stencil = st;
                        bool all = true;
                        for (int k = 0; k < 4 && all; ++k)
                        {
                            if (st.cells[k] == cand.cell_key)
                            {
                                q.vertices[k] = self;
                                continue;
                            }
                            const auto idx = index_of(st.cells[k]);
                            all = idx >= 0;
                            if (all)
                                q.vertices[k] = static_cast<std::uint32_t>(idx);
                        }
                        if (all)
                            quads.push_back(q);
                    }
            }
            if (quads.empty())
                continue;

            DualVertex& moved = unclamped.emplace_back(cand);
            moved.position = cand.placement;
            info.push_back(&moved);
            std::vector<Triangle> tris;
            bool ok = true;
            for (const auto& q : quads)
            {
                const int pivot = static_cast<int>(std::find(q.vertices.begin(), q.vertices.end(), self) - q.vertices.begin());
                const auto r = detail::triangulate_quad(
                    q.vertices, {info[q.vertices[0]], info[q.vertices[1]], info[q.vertices[2]], info[q.vertices[3]]},
                    options.normal_tolerance_deg, pivot, 0.2);
                if (r.keep != 3)
                {
                    ok = false;
                    break;
                }
                tris.push_back(r.tris[0]);
                tris.push_back(r.tris[1]);
            }
            std::map<EdgeKey, int> extra;
            if (ok)
                for (const auto& t : tris)
                    for (int k = 0; k < 3; ++k)
                        ++extra[make_edge(t[k], t[(k + 1) % 3])];
            for (auto it = extra.begin(); ok && it != extra.end(); ++it)
            {
                const auto& [e, n] = *it;
                if (e.first == self || e.second == self)
                    ok = n <= 2;
                else
                {
                    // either closes a boundary edge or is a diagonal inside the new faces
                    const auto d = degree.find(e);
                    const int current = d == degree.end() ? 0 : d->second;
                    ok = (current == 1 && n == 1) || (current == 0 && n == 2);
                }
            }
            if (!ok)
            {
                info.pop_back();
                unclamped.pop_back();
                continue;
            }

            dm.mesh.vertices.push_back(moved.position);
            dm.mesh.vertex_cells.push_back(cand.cell_key);
            rescued.emplace(cand.cell_key, self);
            for (std::size_t i = 0; i < tris.size(); ++i)
            {
                dm.mesh.triangles.push_back(tris[i]);
                dm.triangle_edges.push_back(edge_tag(quads[i / 2].stencil));
            }
            for (const auto& [e, n] : extra)
                degree[e] += n;
            added.insert(added.end(), quads.begin(), quads.end());
        }
        return added;
    }

    namespace detail
    {
        /// Drops connected components of at most two triangles.
        inline std::size_t remove_debris(DualMesh& dm)
        {
            auto& tris = dm.mesh.triangles;
            int n = 0;
            const auto comp = triangle_components(dm.mesh, &n);
            std::vector<int> size(static_cast<std::size_t>(n), 0);
            for (int c : comp)
                ++size[static_cast<std::size_t>(c)];
            std::vector<Triangle> kept;
            std::vector<std::uint64_t> tags;
            for (std::size_t t = 0; t < tris.size(); ++t)
                if (size[static_cast<std::size_t>(comp[t])] > 2)
                {
                    kept.push_back(tris[t]);
                    tags.push_back(dm.triangle_edges[t]);
                }
            const std::size_t removed = tris.size() - kept.size();
            tris = std::move(kept);
            dm.triangle_edges = std::move(tags);
            return removed;
        }
    }

    struct RepairStats
    {
        std::size_t removed_interior = 0;    // both sides enclosed
        std::size_t removed_nonmanifold = 0; // pruned to bring edge degree to 2
        std::size_t removed_debris = 0;      // components no larger than one quad
        bool enclosed_region = false;

        std::size_t total() const { return removed_interior + removed_nonmanifold + removed_debris; }
    };

    namespace detail
    {
        /// Removes triangles until every edge has at most two incident triangles.
        /// Over-shared edges first lose triangles that dangle (have a free edge);
        /// if still over-shared, the most nearly coplanar pair is kept.
        inline std::size_t prune_nonmanifold_edges(DualMesh& dm)
        {
            auto& tris = dm.mesh.triangles;
            std::map<EdgeKey, std::vector<std::uint32_t>> incident;
            for (std::uint32_t t = 0; t < tris.size(); ++t)
                for (int k = 0; k < 3; ++k)
                    incident[make_edge(tris[t][k], tris[t][(k + 1) % 3])].push_back(t);

            std::vector<char> removed(tris.size(), 0);
            std::size_t count = 0;
            auto live_degree = [&](const EdgeKey& e) {
                int d = 0;
                for (auto t : incident[e])
                    d += !removed[t];
                return d;
            };
            auto remove = [&](std::uint32_t t) {
                removed[t] = 1;
                ++count;
            };
            const auto normal = [&](std::uint32_t t) {
                const auto& v = dm.mesh.vertices;
                return triangle_normal(v[tris[t][0]], v[tris[t][1]], v[tris[t][2]]);
            };

            for (auto& [edge, list] : incident)
            {
                if (live_degree(edge) <= 2)
                    continue;
                for (auto t : list)
                {
                    if (removed[t] || live_degree(edge) <= 2)
                        continue;
                    bool dangling = false;
                    for (int k = 0; k < 3; ++k)
                    {
                        const auto e = make_edge(tris[t][k], tris[t][(k + 1) % 3]);
                        if (e != edge && live_degree(e) == 1)
                            dangling = true;
                    }
                    if (dangling)
                        remove(t);
                }
                if (live_degree(edge) <= 2)
                    continue;
                std::vector<std::uint32_t> live;
                for (auto t : list)
                    if (!removed[t])
                        live.push_back(t);
                std::size_t best_i = 0, best_j = 1;
                double best = -1.0;
                for (std::size_t i = 0; i < live.size(); ++i)
                    for (std::size_t j = i + 1; j < live.size(); ++j)
                    {
                        const double s = std::abs(normal(live[i]).dot(normal(live[j])));
                        if (s > best + 1e-12)
                        {
                            best = s;
                            best_i = i;
                            best_j = j;
                        }
                    }
                for (std::size_t i = 0; i < live.size(); ++i)
                    if (i != best_i && i != best_j)
                        remove(live[i]);
            }

            if (count > 0)
            {
                std::vector<Triangle> kept;
                std::vector<std::uint64_t> tags;
                for (std::uint32_t t = 0; t < tris.size(); ++t)
                    if (!removed[t])
                    {
                        kept.push_back(tris[t]);
                        tags.push_back(dm.triangle_edges[t]);
                    }
                tris = std::move(kept);
                dm.triangle_edges = std::move(tags);
            }
            return count;
        }
    }

    /// Keeps only the outer envelope of the blocky model and guarantees every
    /// edge ends up with at most two incident triangles. Vertex positions are
    /// untouched.
    inline DualMesh manifold_repair(const DualMesh& input, const std::vector<QuadCandidate>& candidates, int max_depth,
                                    RepairStats* stats = nullptr)
    {
        RepairStats local;
        DualMesh out = input;
        if (out.mesh.triangles.empty())
        {
            if (stats)
                *stats = local;
            return out;
        }

        const int res = 1 << max_depth;
        // flood-fill window: grid vertices around the occupied cells plus a margin
        std::array<int, 3> lo {res, res, res}, hi {0, 0, 0};
        for (auto key : out.mesh.vertex_cells)
        {
            const auto c = morton_decode(key);
            for (int k = 0; k < 3; ++k)
            {
                lo[k] = std::min(lo[k], static_cast<int>(c[k]));
                hi[k] = std::max(hi[k], static_cast<int>(c[k]) + 1);
            }
        }
        for (int k = 0; k < 3; ++k)
        {
            lo[k] = std::max(lo[k] - 1, 0);
            hi[k] = std::min(hi[k] + 1, res);
        }
        const std::array<std::size_t, 3> dim {static_cast<std::size_t>(hi[0] - lo[0] + 1),
                                              static_cast<std::size_t>(hi[1] - lo[1] + 1),
                                              static_cast<std::size_t>(hi[2] - lo[2] + 1)};
        auto linear = [&](int x, int y, int z) {
            return (static_cast<std::size_t>(z - lo[2]) * dim[1] + static_cast<std::size_t>(y - lo[1])) * dim[0] +
                   static_cast<std::size_t>(x - lo[0]);
        };

        std::unordered_set<std::uint64_t> blocked;
        for (const auto& q : candidates)
            blocked.insert(edge_tag(q.stencil));
        auto is_blocked = [&](int x, int y, int z, int axis) {
            const auto key = morton_encode(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                           static_cast<std::uint32_t>(z)) *
                                 3 +
                             static_cast<std::uint64_t>(axis);
            return blocked.count(key) > 0;
        };

        std::vector<char> outside(dim[0] * dim[1] * dim[2], 0);
        std::vector<std::array<int, 3>> stack;
        auto seed = [&](int x, int y, int z) {
            auto& o = outside[linear(x, y, z)];
            if (!o)
            {
                o = 1;
                stack.push_back({x, y, z});
            }
        };
        for (int z = lo[2]; z <= hi[2]; ++z)
            for (int y = lo[1]; y <= hi[1]; ++y)
                for (int x = lo[0]; x <= hi[0]; ++x)
                    if (x == lo[0] || x == hi[0] || y == lo[1] || y == hi[1] || z == lo[2] || z == hi[2])
                        seed(x, y, z);
        while (!stack.empty())
        {
            const auto [x, y, z] = stack.back();
            stack.pop_back();
            const std::array<int, 3> p {x, y, z};
            for (int a = 0; a < 3; ++a)
            {
                // step forward along axis a through edge (p, a)
                if (p[a] < hi[a] && !is_blocked(x, y, z, a))
                {
                    auto q = p;
                    ++q[a];
                    seed(q[0], q[1], q[2]);
                }
                // step backward through edge (p - e_a, a)
                if (p[a] > lo[a])
                {
                    auto q = p;
                    --q[a];
                    if (!is_blocked(q[0], q[1], q[2], a))
                        seed(q[0], q[1], q[2]);
                }
            }
        }
        local.enclosed_region = std::find(outside.begin(), outside.end(), 0) != outside.end();

        // side classification per triangle: 0, 1 or 2 outside sides
        const std::size_t nt = out.mesh.triangles.size();
        std::vector<int> sides(nt);
        for (std::size_t t = 0; t < nt; ++t)
        {
            const std::uint64_t tag = out.triangle_edges[t];
            const int axis = static_cast<int>(tag % 3);
            auto base = morton_decode(tag / 3);
            std::array<int, 3> u {static_cast<int>(base[0]), static_cast<int>(base[1]), static_cast<int>(base[2])};
            auto w = u;
            ++w[axis];
            sides[t] = outside[linear(u[0], u[1], u[2])] + outside[linear(w[0], w[1], w[2])];
        }

        // faces with no outside side are interior to the blocky solid
        std::vector<Triangle> kept;
        std::vector<std::uint64_t> tags;
        for (std::size_t t = 0; t < nt; ++t)
        {
            if (sides[t] == 0)
            {
                ++local.removed_interior;
                continue;
            }
            kept.push_back(out.mesh.triangles[t]);
            tags.push_back(out.triangle_edges[t]);
        }
        out.mesh.triangles = std::move(kept);
        out.triangle_edges = std::move(tags);
        local.removed_nonmanifold = detail::prune_nonmanifold_edges(out);
        local.removed_debris = detail::remove_debris(out);

        if (stats)
            *stats = local;
        return out;
    }

    /// Merges vertices at bitwise-identical positions and drops the triangles
    /// this collapses or duplicates. Returns the number of triangles removed.
    inline std::size_t weld_coincident(DualMesh& dm)
    {
        auto& mesh = dm.mesh;
        std::map<std::array<double, 3>, std::uint32_t> first;
        std::vector<std::uint32_t> remap(mesh.vertices.size());
        for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v)
        {
            const auto& p = mesh.vertices[v];
            remap[v] = first.emplace(std::array<double, 3> {p.x(), p.y(), p.z()}, v).first->second;
        }

        std::set<std::array<std::uint32_t, 3>> seen;
        std::vector<Triangle> kept;
        std::vector<std::uint64_t> tags;
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        {
            Triangle tri = mesh.triangles[t];
            for (auto& v : tri)
                v = remap[v];
            if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
                continue;
            std::array<std::uint32_t, 3> sorted = tri;
            std::sort(sorted.begin(), sorted.end());
            if (!seen.insert(sorted).second)
                continue;
            kept.push_back(tri);
            tags.push_back(dm.triangle_edges[t]);
        }
        const std::size_t removed = mesh.triangles.size() - kept.size();
        mesh.triangles = std::move(kept);
        dm.triangle_edges = std::move(tags);
        return removed;
    }

    /// Makes winding consistent within each connected component by propagating
    /// across manifold edges from the component's first triangle. Non-orientable
    /// components keep whatever orientation the propagation reaches first.
    inline void orient_components(IndexedMesh& mesh)
    {
        auto& tris = mesh.triangles;
        std::map<EdgeKey, std::vector<std::uint32_t>> incident;
        for (std::uint32_t t = 0; t < tris.size(); ++t)
            for (int k = 0; k < 3; ++k)
                incident[make_edge(tris[t][k], tris[t][(k + 1) % 3])].push_back(t);

        auto has_directed = [](const Triangle& t, std::uint32_t a, std::uint32_t b) {
            for (int k = 0; k < 3; ++k)
                if (t[k] == a && t[(k + 1) % 3] == b)
                    return true;
            return false;
        };

        std::vector<char> visited(tris.size(), 0);
        std::vector<std::uint32_t> queue;
        for (std::uint32_t start = 0; start < tris.size(); ++start)
        {
            if (visited[start])
                continue;
            visited[start] = 1;
            queue.assign(1, start);
            for (std::size_t head = 0; head < queue.size(); ++head)
            {
                const std::uint32_t t = queue[head];
                for (int k = 0; k < 3; ++k)
                {
                    const std::uint32_t a = tris[t][k], b = tris[t][(k + 1) % 3];
                    const auto& list = incident[make_edge(a, b)];
                    if (list.size() != 2)
                        continue;
                    const std::uint32_t n = list[0] == t ? list[1] : list[0];
                    if (visited[n])
                        continue;
                    visited[n] = 1;
                    // a consistently oriented neighbor traverses the shared edge as b -> a
                    if (has_directed(tris[n], a, b))
                        std::swap(tris[n][1], tris[n][2]);
                    queue.push_back(n);
                }
            }
        }
    }
}
