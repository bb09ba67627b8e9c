#include "test_util.hpp"

#include <dmudf/mesh_field.hpp>
#include <dmudf/mesh_io.hpp>
#include <dmudf/shapes.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace dmudf;
using dmudf::test::temp_path;

namespace
{
    std::string read_text(const std::filesystem::path& p)
    {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write_text(const std::filesystem::path& p, const std::string& text)
    {
        std::ofstream out(p, std::ios::binary);
        out << text;
    }

    std::string io_error(const std::filesystem::path& p)
    {
        try
        {
            read_mesh(p);
        }
        catch (const MeshIoError& e)
        {
            return e.what();
        }
        return {};
    }
}

TEST(Obj, OneTriangleEcho)
{
    IndexedMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}};
    const auto path = temp_path("one.obj");
    write_obj(m, path);
    std::istringstream lines(read_text(path));
    int v = 0, f = 0;
    for (std::string line; std::getline(lines, line);)
    {
        v += line.rfind("v ", 0) == 0;
        f += line.rfind("f ", 0) == 0;
    }
    EXPECT_EQ(v, 3);
    EXPECT_EQ(f, 1);
    EXPECT_NE(read_text(path).find("f 1 2 3"), std::string::npos);
}

TEST(Obj, RoundTripIsExact)
{
    const auto m = shapes::sphere(0.37, 3, Vec3(0.1, -0.2, 1.0 / 3.0));
    const auto path = temp_path("sphere.obj");
    write_mesh(m, path);
    const auto back = read_mesh(path);
    EXPECT_EQ(back.vertices, m.vertices);
    EXPECT_EQ(back.triangles, m.triangles);
}

TEST(Obj, PolygonsAndNegativeIndices)
{
    const auto path = temp_path("poly.obj");
    write_text(path, "# comment\no quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\n"
                     "f 1/1/1 2/2/1 3/3/1 4/4/1\nf -4 -3 -1\n");
    const auto m = read_obj(path);
    ASSERT_EQ(m.vertices.size(), 4u);
    ASSERT_EQ(m.triangles.size(), 3u);
    EXPECT_EQ(m.triangles[0], (Triangle {0, 1, 2}));
    EXPECT_EQ(m.triangles[1], (Triangle {0, 2, 3}));
    EXPECT_EQ(m.triangles[2], (Triangle {0, 1, 3}));
}

TEST(Obj, OutOfRangeIndexIsAnError)
{
    const auto path = temp_path("bad.obj");
    write_text(path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
    EXPECT_NE(io_error(path).find("out of range"), std::string::npos);
}

TEST(Ply, RoundTripIsExact)
{
    const auto m = shapes::mobius(0.5, 0.2, 60, 8);
    const auto path = temp_path("mobius.ply");
    write_mesh(m, path);
    const auto back = read_mesh(path);
    EXPECT_EQ(back.vertices, m.vertices);
    EXPECT_EQ(back.triangles, m.triangles);
}

TEST(Ply, AsciiIsAccepted)
{
    const auto path = temp_path("ascii.ply");
    write_text(path, "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 4\n"
                     "property float x\nproperty float y\nproperty float z\nproperty uchar red\n"
                     "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
                     "0 0 0 255\n1 0 0 255\n1 1 0 255\n0 1 0 255\n4 0 1 2 3\n");
    const auto m = read_mesh(path);
    ASSERT_EQ(m.vertices.size(), 4u);
    EXPECT_EQ(m.vertices[2], Vec3(1, 1, 0));
    ASSERT_EQ(m.triangles.size(), 2u);
}

TEST(Ply, LargeMeshSurvivesDistanceOracle)
{
    const auto m = shapes::box(0.5, 92);
    ASSERT_GE(m.triangles.size(), 100000u);
    const auto path = temp_path("large.ply");
    write_ply(m, path);
    const MeshField f(read_mesh(path));
    double worst = 0.0;
    for (const auto& v : m.vertices)
        worst = std::max(worst, f.distance(v));
    EXPECT_EQ(worst, 0.0);
}

TEST(MeshIo, ErrorsNameThePath)
{
    const auto missing = temp_path("missing.obj");
    EXPECT_NE(io_error(missing).find(missing.string()), std::string::npos);
    const auto stl = temp_path("mesh.stl");
    write_text(stl, "solid x\n");
    EXPECT_NE(io_error(stl).find(".stl"), std::string::npos);
    const auto truncated = temp_path("trunc.ply");
    write_ply(shapes::box(0.5), truncated);
    const auto size = std::filesystem::file_size(truncated);
    std::filesystem::resize_file(truncated, size - 10);
    EXPECT_NE(io_error(truncated).find(truncated.string()), std::string::npos);
}
