#pragma once

// OBJ and PLY reading/writing for IndexedMesh.
//
// Reading: OBJ v/f records (polygons fan-triangulated, negative indices
// allowed) and PLY in ascii or binary little-endian encoding.
// Writing: ASCII OBJ with 1-based indices, binary little-endian PLY with
// double-precision coordinates so a round trip is exact.

#include "mesh.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmudf
{
    class MeshIoError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    enum class MeshFormat
    {
        Obj,
        Ply
    };

    inline MeshFormat format_from_path(const std::filesystem::path& path)
    {
        auto ext = path.extension().string();
        for (auto& c : ext)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".obj")
            return MeshFormat::Obj;
        if (ext == ".ply")
            return MeshFormat::Ply;
        throw MeshIoError("unsupported mesh extension '" + ext + "' for " + path.string());
    }

    namespace detail
    {
        inline void fan_triangulate(const std::vector<std::uint32_t>& poly, std::vector<Triangle>& out)
        {
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                out.push_back({poly[0], poly[k], poly[k + 1]});
        }

        inline void check_indices(const IndexedMesh& mesh, const std::string& path)
        {
            for (const auto& t : mesh.triangles)
                for (auto v : t)
                    if (v >= mesh.vertices.size())
                        throw MeshIoError("face index out of range in " + path);
        }
    }

    inline IndexedMesh read_obj(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw MeshIoError("cannot open " + path.string());
        IndexedMesh mesh;
        std::string line;
        std::vector<std::uint32_t> poly;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            std::istringstream ls(line);
            std::string tag;
            if (!(ls >> tag))
                continue;
            if (tag == "v")
            {
                Vec3 p;
                if (!(ls >> p.x() >> p.y() >> p.z()))
                    throw MeshIoError(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
                mesh.vertices.push_back(p);
            }
            else if (tag == "f")
            {
                poly.clear();
                std::string tok;
                while (ls >> tok)
                {
                    const long idx = std::stol(tok.substr(0, tok.find('/')));
                    const long n = static_cast<long>(mesh.vertices.size());
                    const long resolved = idx < 0 ? n + idx : idx - 1;
                    if (idx == 0 || resolved < 0)
                        throw MeshIoError(path.string() + ":" + std::to_string(line_no) + ": bad face index");
                    poly.push_back(static_cast<std::uint32_t>(resolved));
                }
                detail::fan_triangulate(poly, mesh.triangles);
            }
        }
        detail::check_indices(mesh, path.string());
        return mesh;
    }

    inline IndexedMesh read_ply(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw MeshIoError("cannot open " + path.string());

        struct Property
        {
            std::string name;
            std::string type;
            bool is_list = false;
            std::string count_type;
        };
        struct Element
        {
            std::string name;
            std::size_t count = 0;
            std::vector<Property> props;
        };

        std::string line;
        std::getline(in, line);
        if (line.rfind("ply", 0) != 0)
            throw MeshIoError(path.string() + ": missing ply magic");
        std::string format;
        std::vector<Element> elements;
        while (std::getline(in, line))
        {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "format")
                ls >> format;
            else if (tag == "element")
            {
                Element e;
                ls >> e.name >> e.count;
                elements.push_back(e);
            }
            else if (tag == "property")
            {
                if (elements.empty())
                    throw MeshIoError(path.string() + ": property before element");
                Property p;
                ls >> p.type;
                if (p.type == "list")
                {
                    p.is_list = true;
                    ls >> p.count_type >> p.type;
                }
                ls >> p.name;
                elements.back().props.push_back(p);
            }
            else if (tag == "end_header")
                break;
        }
        const bool ascii = format == "ascii";
        if (!ascii && format != "binary_little_endian")
            throw MeshIoError(path.string() + ": unsupported ply format '" + format + "'");

        auto type_size = [&](const std::string& t) -> std::size_t {
            if (t == "char" || t == "uchar" || t == "int8" || t == "uint8")
                return 1;
            if (t == "short" || t == "ushort" || t == "int16" || t == "uint16")
                return 2;
            if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32")
                return 4;
            if (t == "double" || t == "float64")
                return 8;
            throw MeshIoError(path.string() + ": unknown ply type '" + t + "'");
        };
        auto read_scalar = [&](const std::string& t) -> double {
            if (ascii)
            {
                double v;
                if (!(in >> v))
                    throw MeshIoError(path.string() + ": unexpected end of ply data");
                return v;
            }
            unsigned char buf[8];
            const std::size_t n = type_size(t);
            if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n)))
                throw MeshIoError(path.string() + ": unexpected end of ply data");
            if constexpr (std::endian::native != std::endian::little)
                std::reverse(buf, buf + n);
            if (t == "char" || t == "int8")
                return static_cast<std::int8_t>(buf[0]);
            if (t == "uchar" || t == "uint8")
                return buf[0];
            if (t == "short" || t == "int16")
            {
                std::int16_t v;
                std::memcpy(&v, buf, 2);
                return v;
            }
            if (t == "ushort" || t == "uint16")
            {
                std::uint16_t v;
                std::memcpy(&v, buf, 2);
                return v;
            }
            if (t == "int" || t == "int32")
            {
                std::int32_t v;
                std::memcpy(&v, buf, 4);
                return v;
            }
            if (t == "uint" || t == "uint32")
            {
                std::uint32_t v;
                std::memcpy(&v, buf, 4);
                return v;
            }
            if (t == "float" || t == "float32")
            {
                float v;
                std::memcpy(&v, buf, 4);
                return v;
            }
            double v;
            std::memcpy(&v, buf, 8);
            return v;
        };

        IndexedMesh mesh;
        std::vector<std::uint32_t> poly;
        for (const auto& e : elements)
        {
            for (std::size_t i = 0; i < e.count; ++i)
            {
                Vec3 p = Vec3::Zero();
                for (const auto& prop : e.props)
                {
                    if (prop.is_list)
                    {
                        const auto n = static_cast<std::size_t>(read_scalar(prop.count_type));
                        poly.clear();
                        for (std::size_t k = 0; k < n; ++k)
                            poly.push_back(static_cast<std::uint32_t>(read_scalar(prop.type)));
                        if (e.name == "face" && (prop.name == "vertex_indices" || prop.name == "vertex_index"))
                            detail::fan_triangulate(poly, mesh.triangles);
                        continue;
                    }
                    const double v = read_scalar(prop.type);
                    if (e.name == "vertex")
                    {
                        if (prop.name == "x")
                            p.x() = v;
                        else if (prop.name == "y")
                            p.y() = v;
                        else if (prop.name == "z")
                            p.z() = v;
                    }
                }
                if (e.name == "vertex")
                    mesh.vertices.push_back(p);
            }
        }
        detail::check_indices(mesh, path.string());
        return mesh;
    }

    inline IndexedMesh read_mesh(const std::filesystem::path& path)
    {
        if (!std::filesystem::exists(path))
            throw MeshIoError("mesh file not found: " + path.string());
        return format_from_path(path) == MeshFormat::Obj ? read_obj(path) : read_ply(path);
    }

    inline void write_obj(const IndexedMesh& mesh, const std::filesystem::path& path)
    {
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        if (!f)
            throw MeshIoError("cannot write " + path.string());
        for (const auto& v : mesh.vertices)
            std::fprintf(f, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        for (const auto& t : mesh.triangles)
            std::fprintf(f, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
        const bool failed = std::ferror(f) != 0;
        if (std::fclose(f) != 0 || failed)
            throw MeshIoError("write failed for " + path.string());
    }

    inline void write_ply(const IndexedMesh& mesh, const std::filesystem::path& path)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw MeshIoError("cannot write " + path.string());
        out << "ply\nformat binary_little_endian 1.0\n"
            << "element vertex " << mesh.vertices.size() << "\n"
            << "property double x\nproperty double y\nproperty double z\n"
            << "element face " << mesh.triangles.size() << "\n"
            << "property list uchar uint vertex_indices\nend_header\n";
        auto put = [&](const void* data, std::size_t n) {
            unsigned char buf[8];
            std::memcpy(buf, data, n);
            if constexpr (std::endian::native != std::endian::little)
                std::reverse(buf, buf + n);
            out.write(reinterpret_cast<const char*>(buf), static_cast<std::streamsize>(n));
        };
        for (const auto& v : mesh.vertices)
            for (int k = 0; k < 3; ++k)
            {
                const double c = v[k];
                put(&c, 8);
            }
        for (const auto& t : mesh.triangles)
        {
            const unsigned char n = 3;
            put(&n, 1);
            for (auto idx : t)
                put(&idx, 4);
        }
        if (!out)
            throw MeshIoError("write failed for " + path.string());
    }

    inline void write_mesh(const IndexedMesh& mesh, const std::filesystem::path& path, MeshFormat format)
    {
        if (format == MeshFormat::Obj)
            write_obj(mesh, path);
        else
            write_ply(mesh, path);
    }

    inline void write_mesh(const IndexedMesh& mesh, const std::filesystem::path& path)
    {
        write_mesh(mesh, path, format_from_path(path));
    }
}
