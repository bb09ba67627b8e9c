#include <dmudf/extract.hpp>
#include <dmudf/field_spec.hpp>
#include <dmudf/mesh_io.hpp>
#include <dmudf/metrics.hpp>
#include <dmudf/shapes.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dmudf;

namespace
{
    constexpr int kReportSchema = 1;

    struct ExtractArgs
    {
        std::string field;
        int max_depth = 7;
        double delta1 = 2e-3;
        double delta2 = 2e-3;
        double fallback_delta1 = 1e-3;
        double epsilon = 2e-3;
        double sigma_ratio = 0.1;
        double normal_tolerance = 25.0;
        bool manifold = true;
        bool no_filter = false;
        bool dense = false;
        bool timings = false;
        unsigned threads = 0;
        std::uint64_t seed = 0;
        std::string out;
        std::string report;
        std::string dump_leaves;
        std::string dump_vertices;
    };

    struct EvalArgs
    {
        std::string candidate;
        std::string reference;
        double threshold = 1e-3;
        std::size_t samples = 100000;
        std::uint64_t seed = 0;
        unsigned threads = 0;
        std::string report;
    };

    struct ProbeArgs
    {
        std::string field;
        std::string points;
        int lattice = 0;
        std::string out;
    };

    struct ShapeArgs
    {
        std::string shape;
        std::string out;
        double size = 0.5;
        double height = 0.0;
        int detail = 0;
    };

    // removes the listed files on scope exit unless released
    class OutputGuard
    {
    public:
        void add(const std::string& path)
        {
            if (!path.empty())
                paths_.push_back(path);
        }
        void release() { paths_.clear(); }
        ~OutputGuard()
        {
            std::error_code ec;
            for (const auto& p : paths_)
                fs::remove(p, ec);
        }

    private:
        std::vector<std::string> paths_;
    };

    std::ofstream open_output(const std::string& path)
    {
        std::ofstream os(path);
        if (!os)
            throw std::runtime_error("cannot write " + path);
        os.precision(17);
        return os;
    }

    json report_json(const ExtractArgs& a, const ExtractionReport& r)
    {
        json j;
        j["schema_version"] = kReportSchema;
        j["field"] = a.field;
        j["config"] = {{"max_depth", a.max_depth},
                       {"resolution", 1 << a.max_depth},
                       {"delta1", a.delta1},
                       {"delta2", a.delta2},
                       {"fallback_delta1", a.fallback_delta1},
                       {"epsilon", a.epsilon},
                       {"sigma_ratio", a.sigma_ratio},
                       {"normal_tolerance_deg", a.normal_tolerance},
                       {"manifold", a.manifold},
                       {"filter", !a.no_filter},
                       {"samples_per_cell", a.dense ? 125 : 27},
                       {"seed", a.seed}};
        j["cells"] = {{"leaves", r.leaves},
                      {"demoted", r.demoted_cells},
                      {"fallback_delta1", r.fallback_cells}};
        j["vertices"] = {{"total", r.vertices},
                         {"corner", r.corner_vertices},
                         {"edge", r.edge_vertices},
                         {"plane", r.plane_vertices},
                         {"clamped", r.clamped_vertices}};
        j["faces"] = {{"quads", r.quads},
                      {"rescued_quads", r.rescued_faces},
                      {"rejected_degenerate", r.rejected_degenerate},
                      {"rejected_normal", r.rejected_normal},
                      {"welded", r.welded_triangles},
                      {"triangles", r.triangles}};
        j["repair"] = {{"enabled", r.manifold_repair},
                       {"removed_interior", r.repair.removed_interior},
                       {"removed_nonmanifold", r.repair.removed_nonmanifold},
                       {"removed_debris", r.repair.removed_debris},
                       {"enclosed_region", r.repair.enclosed_region}};
        j["mesh"] = {{"boundary_edges", r.boundary_edges}, {"max_edge_degree", r.max_edge_degree}};
        j["field_queries"] = {{"octree", r.octree_queries}, {"vertices", r.vertex_queries}, {"total", r.field_queries()}};
        if (a.timings)
            j["seconds"] = {{"octree", r.seconds_octree}, {"vertices", r.seconds_vertices}, {"mesh", r.seconds_mesh}};
        return j;
    }

    int cmd_extract(const ExtractArgs& a)
    {
        OutputGuard guard;
        guard.add(a.out);
        guard.add(a.report);
        guard.add(a.dump_leaves);
        guard.add(a.dump_vertices);

        const auto field = make_field(a.field);
        ExtractOptions opt;
        opt.octree.max_depth = a.max_depth;
        opt.octree.epsilon = a.epsilon;
        opt.filter.delta1 = a.delta1;
        opt.filter.delta2 = a.delta2;
        opt.filter.fallback_delta1 = std::min(a.fallback_delta1, a.delta1);
        opt.filter.enabled = !a.no_filter;
        opt.qef.sigma_ratio = a.sigma_ratio;
        opt.pattern.per_axis = a.dense ? 5 : 3;
        opt.normal_tolerance_deg = a.normal_tolerance;
        opt.manifold = a.manifold;
        opt.threads = a.threads;

        const auto res = extract(*field, opt);
        if (res.mesh.triangles.empty())
            std::cerr << "warning: extraction produced no triangles\n";
        write_mesh(res.mesh, a.out);
        const json j = report_json(a, res.report);
        if (!a.report.empty())
            open_output(a.report) << j.dump(2) << "\n";
        if (!a.dump_leaves.empty())
        {
            auto os = open_output(a.dump_leaves);
            write_leaf_dump(os, res.leaves);
        }
        if (!a.dump_vertices.empty())
        {
            auto os = open_output(a.dump_vertices);
            write_vertex_dump(os, res.vertices);
        }
        std::cout << j.dump(2) << "\n";
        guard.release();
        return 0;
    }

    int cmd_eval(const EvalArgs& a)
    {
        OutputGuard guard;
        guard.add(a.report);
        const auto cand = read_mesh(a.candidate);
        const auto ref = read_mesh(a.reference);
        MetricOptions mo;
        mo.samples = a.samples;
        mo.threshold = a.threshold;
        mo.seed = a.seed;
        mo.threads = a.threads;
        const auto m = evaluate(cand, ref, mo);

        json j;
        j["schema_version"] = kReportSchema;
        j["candidate"] = a.candidate;
        j["reference"] = a.reference;
        j["chamfer"] = m.chamfer;
        j["f_score"] = m.f_score;
        j["precision"] = m.precision;
        j["recall"] = m.recall;
        j["hausdorff"] = m.hausdorff;
        j["sample_count"] = m.sample_count;
        j["threshold"] = m.threshold;
        j["rng_seed"] = m.rng_seed;
        if (!a.report.empty())
            open_output(a.report) << j.dump(2) << "\n";
        std::cout << j.dump(2) << "\n\n";

        std::ostringstream t;
        t << std::left << std::setw(12) << "metric" << std::right << std::setw(16) << "value" << "\n";
        auto row = [&](const char* name, double v) {
            t << std::left << std::setw(12) << name << std::right << std::setw(16) << std::setprecision(6) << v << "\n";
        };
        row("CD", m.chamfer);
        row("F-score", m.f_score);
        row("precision", m.precision);
        row("recall", m.recall);
        row("HD", m.hausdorff);
        std::cout << t.str();
        guard.release();
        return 0;
    }

    std::vector<Vec3> read_points(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open points file " + path);
        std::vector<Vec3> pts;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            for (auto& c : line)
                if (c == ',')
                    c = ' ';
            std::istringstream ls(line);
            std::string first;
            if (!(ls >> first) || first[0] == '#' || first == "x")
                continue;
            Vec3 p;
            std::istringstream fs_(first);
            if (!(fs_ >> p.x()) || !(ls >> p.y() >> p.z()))
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected three numbers");
            pts.push_back(p);
        }
        return pts;
    }

    int cmd_probe(const ProbeArgs& a)
    {
        OutputGuard guard;
        guard.add(a.out);
        const auto field = make_field(a.field);
        std::vector<Vec3> pts;
        if (!a.points.empty())
            pts = read_points(a.points);
        if (a.lattice > 0)
        {
            const int n = a.lattice;
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i < n; ++i)
                    {
                        auto coord = [n](int q) { return n == 1 ? 0.0 : -1.0 + 2.0 * q / (n - 1); };
                        pts.emplace_back(coord(i), coord(j), coord(k));
                    }
        }
        if (pts.empty())
            throw std::runtime_error("no probe points given");
        const auto r = field->eval_batch(pts);

        std::ofstream file;
        if (!a.out.empty())
            file = open_output(a.out);
        std::ostream& os = a.out.empty() ? std::cout : file;
        os.precision(17);
        os << "x,y,z,d,gx,gy,gz\n";
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            const auto& p = pts[i];
            const auto& g = r.gradients[i];
            os << p.x() << "," << p.y() << "," << p.z() << "," << r.distances[i] << "," << g.x() << "," << g.y() << ","
               << g.z() << "\n";
        }
        if (!os)
            throw std::runtime_error("write failed");
        guard.release();
        return 0;
    }

    int cmd_make_shape(const ShapeArgs& a)
    {
        OutputGuard guard;
        guard.add(a.out);
        IndexedMesh m;
        if (a.shape == "box")
            m = shapes::box(a.size, a.detail > 0 ? a.detail : 8);
        else if (a.shape == "sphere")
            m = shapes::sphere(a.size, a.detail > 0 ? a.detail : 6);
        else if (a.shape == "disk")
            m = shapes::disk(a.size, a.height, a.detail > 0 ? a.detail : 64);
        else if (a.shape == "square")
            m = shapes::square(a.size, a.height, a.detail > 0 ? a.detail : 1);
        else if (a.shape == "mobius")
            m = shapes::mobius(a.size, 0.2, a.detail > 0 ? a.detail : 480);
        else
            throw std::runtime_error("unknown shape '" + a.shape + "'");
        write_mesh(m, a.out);
        guard.release();
        return 0;
    }
}

int main(int argc, char** argv)
{
    CLI::App app {"Mesh extraction from unsigned distance fields"};
    app.require_subcommand(1);

    ExtractArgs ex;
    auto* extract_cmd = app.add_subcommand("extract", "Extract a triangle mesh from a distance field");
    extract_cmd->add_option("--field", ex.field, "Field spec, e.g. analytic:sphere:0.5, mesh:PATH, mlp:PATH")->required();
    extract_cmd->add_option("--max-depth", ex.max_depth, "Octree depth; resolution is 2^depth")
        ->check(CLI::Range(4, 10))
        ->capture_default_str();
    extract_cmd->add_option("--delta1", ex.delta1, "Criterion 1 threshold")->check(CLI::PositiveNumber)->capture_default_str();
    extract_cmd->add_option("--delta2", ex.delta2, "Criterion 2 threshold")->check(CLI::PositiveNumber)->capture_default_str();
    extract_cmd->add_option("--fallback-delta1", ex.fallback_delta1, "delta1 retry for cells with < 3 samples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    extract_cmd->add_option("--epsilon", ex.epsilon, "Pruning tolerance")->check(CLI::NonNegativeNumber)->capture_default_str();
    extract_cmd->add_option("--sigma-ratio", ex.sigma_ratio, "Relative singular value cutoff")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    extract_cmd->add_option("--normal-tolerance", ex.normal_tolerance, "Face normal tolerance in degrees")
        ->check(CLI::Range(0.0, 90.0))
        ->capture_default_str();
    extract_cmd->add_flag("--manifold,!--no-manifold", ex.manifold, "Run manifold repair")->capture_default_str();
    extract_cmd->add_flag("--no-filter", ex.no_filter, "Disable sample filtering");
    extract_cmd->add_flag("--dense-sampling", ex.dense, "Use 125 samples per cell instead of 27");
    extract_cmd->add_flag("--timings", ex.timings, "Include wall-clock timings in the report");
    extract_cmd->add_option("--threads", ex.threads, "Worker threads, 0 = hardware cores")->capture_default_str();
    extract_cmd->add_option("--seed", ex.seed, "Seed echoed in the report")->capture_default_str();
    extract_cmd->add_option("--out", ex.out, "Output mesh (.obj or .ply)")->required();
    extract_cmd->add_option("--report", ex.report, "Write the JSON report here");
    extract_cmd->add_option("--dump-leaves", ex.dump_leaves, "Write leaf cells as JSON lines");
    extract_cmd->add_option("--dump-vertices", ex.dump_vertices, "Write dual vertices as JSON lines");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Compare a candidate mesh against a reference");
    eval_cmd->add_option("candidate", ev.candidate, "Candidate mesh")->required();
    eval_cmd->add_option("reference", ev.reference, "Reference mesh")->required();
    eval_cmd->add_option("--threshold", ev.threshold, "F-score distance threshold")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eval_cmd->add_option("--samples", ev.samples, "Surface samples per mesh")
        ->check(CLI::Range(std::size_t {1000}, std::size_t {100000000}))
        ->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
    eval_cmd->add_option("--threads", ev.threads, "Worker threads, 0 = hardware cores")->capture_default_str();
    eval_cmd->add_option("--report", ev.report, "Write the JSON report here");

    ProbeArgs pr;
    auto* probe_cmd = app.add_subcommand("probe", "Print distance and gradient at points as CSV");
    probe_cmd->add_option("--field", pr.field, "Field spec")->required();
    probe_cmd->add_option("--points", pr.points, "Text file with one x y z point per line");
    probe_cmd->add_option("--lattice", pr.lattice, "Also probe an N^3 lattice over [-1,1]^3")->check(CLI::Range(1, 1000));
    probe_cmd->add_option("--out", pr.out, "CSV output (default stdout)");

    ShapeArgs sh;
    auto* shape_cmd = app.add_subcommand("make-shape", "Write a reference mesh");
    shape_cmd->add_option("shape", sh.shape, "box | sphere | disk | square | mobius")->required();
    shape_cmd->add_option("--out", sh.out, "Output mesh (.obj or .ply)")->required();
    shape_cmd->add_option("--size", sh.size, "Half size, radius or side")->capture_default_str();
    shape_cmd->add_option("--height", sh.height, "Plane height for disk and square")->capture_default_str();
    shape_cmd->add_option("--detail", sh.detail, "Tessellation level (0 = shape default)")->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try
    {
        if (*extract_cmd)
            return cmd_extract(ex);
        if (*eval_cmd)
            return cmd_eval(ev);
        if (*probe_cmd)
            return cmd_probe(pr);
        if (*shape_cmd)
            return cmd_make_shape(sh);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
