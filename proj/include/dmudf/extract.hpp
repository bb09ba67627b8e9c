#pragma once

// The full extraction pipeline: octree -> vertex solve -> dual faces ->
// optional manifold repair -> per-component orientation.

#include "mesher.hpp"
#include "octree.hpp"
#include "vertexer.hpp"

#include <chrono>

namespace dmudf
{
    struct ExtractOptions
    {
        OctreeConfig octree;
        FilterParams filter;
        QefOptions qef;
        SamplingPattern pattern;
        double normal_tolerance_deg = 25.0;
        bool manifold = true;
        unsigned threads = 0;
    };

    struct ExtractionReport
    {
        std::size_t leaves = 0;
        std::size_t vertices = 0;
        std::size_t demoted_cells = 0;
        std::size_t fallback_cells = 0;
        std::size_t clamped_vertices = 0;
        std::size_t corner_vertices = 0;
        std::size_t edge_vertices = 0;
        std::size_t plane_vertices = 0;
        std::size_t quads = 0;
        std::size_t rescued_faces = 0;
        std::size_t rejected_degenerate = 0;
        std::size_t rejected_normal = 0;
        std::size_t welded_triangles = 0;
        std::size_t triangles = 0;
        std::size_t boundary_edges = 0;
        int max_edge_degree = 0;
        RepairStats repair;
        bool manifold_repair = false;
        std::uint64_t octree_queries = 0;
        std::uint64_t vertex_queries = 0;
        double seconds_octree = 0.0;
        double seconds_vertices = 0.0;
        double seconds_mesh = 0.0;

        std::uint64_t field_queries() const { return octree_queries + vertex_queries; }
    };

    struct ExtractionResult
    {
        IndexedMesh mesh;
        std::vector<OctreeCell> leaves;
        VertexMap vertices;
        ExtractionReport report;
    };

    inline ExtractionResult extract(const ScalarField& field, const ExtractOptions& options)
    {
        using clock = std::chrono::steady_clock;
        auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

        ExtractionResult res;
        auto& rep = res.report;
        const auto t0 = clock::now();
        OctreeStats ostats;
        res.leaves = build_octree(field, options.octree, options.threads, &ostats);
        rep.leaves = res.leaves.size();
        rep.octree_queries = ostats.field_queries;
        const auto t1 = clock::now();

        VertexerOptions vopt;
        vopt.filter = options.filter;
        vopt.qef = options.qef;
        vopt.pattern = options.pattern;
        vopt.threads = options.threads;
        auto solved = solve_all(res.leaves, field, options.octree, vopt);
        res.vertices = std::move(solved.vertices);
        const VertexMap near_misses = std::move(solved.near_misses);
        rep.vertices = res.vertices.size();
        rep.demoted_cells = solved.stats.demoted();
        rep.fallback_cells = solved.stats.fallback_cells;
        rep.clamped_vertices = solved.stats.clamped;
        rep.vertex_queries = solved.stats.field_queries();
        for (const auto& v : res.vertices)
        {
            rep.corner_vertices += v.classification == FeatureClass::Corner;
            rep.edge_vertices += v.classification == FeatureClass::Edge;
            rep.plane_vertices += v.classification == FeatureClass::Plane;
        }
        const auto t2 = clock::now();

        auto quads = build_quads(res.vertices, options.octree.max_depth, options.threads);
        MesherOptions mopt;
        mopt.normal_tolerance_deg = options.normal_tolerance_deg;
        mopt.threads = options.threads;
        TriangulationStats tstats;
        DualMesh dm = validate_and_triangulate(quads, res.vertices, mopt, &tstats);
        rep.quads = tstats.quads;
        rep.rejected_degenerate = tstats.rejected_degenerate;
        rep.rejected_normal = tstats.rejected_normal;
        const auto rescued = rescue_near_misses(dm, res.vertices, near_misses, options.octree.max_depth, mopt);
        rep.rescued_faces = rescued.size();
        quads.insert(quads.end(), rescued.begin(), rescued.end());
        rep.manifold_repair = options.manifold;
        if (options.manifold)
            dm = manifold_repair(dm, quads, options.octree.max_depth, &rep.repair);
        rep.welded_triangles = weld_coincident(dm);
        if (options.manifold)
        {
            rep.repair.removed_nonmanifold += detail::prune_nonmanifold_edges(dm);
            rep.repair.removed_debris += detail::remove_debris(dm);
        }
        res.mesh = std::move(dm.mesh);
        orient_components(res.mesh);
        compact_vertices(res.mesh);
        rep.triangles = res.mesh.triangles.size();
        rep.boundary_edges = boundary_edges(res.mesh).size();
        rep.max_edge_degree = max_edge_degree(res.mesh);
        const auto t3 = clock::now();

        rep.seconds_octree = seconds(t0, t1);
        rep.seconds_vertices = seconds(t1, t2);
        rep.seconds_mesh = seconds(t2, t3);
        return res;
    }
}
