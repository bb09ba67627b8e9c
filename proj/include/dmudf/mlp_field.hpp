#pragma once

/**
 * MLP-encoded UDF: a chain of dense layers with Sine or SoftPlus(beta)
 * activations, evaluated on the CPU with an exact backward pass for the
 * input gradient.
 *
 * Weights are kept as float32 (their on-disk precision) so save/load is
 * bit-identical; arithmetic runs in double.
 *
 * UDFW layout (little-endian):
 *
 *   "UDFW"  u32 version  u32 layer_count
 *   [version 2 only]  u32 num_frequencies  u8 include_input
 *   per layer: u32 in_dim  u32 out_dim  u8 activation (0 = Sine, 1 = SoftPlus)
 *              f32 beta  f32[out_dim * in_dim] weights (row-major)  f32[out_dim] biases
 *   f32[6] domain bounds (min x, min y, min z, max x, max y, max z)
 *
 * Version 2 prepends a positional encoding to the first layer:
 *   [x (if include_input), sin(2^k pi x), cos(2^k pi x) for k = 0..L-1]
 * where each entry is a 3-vector, so the first in_dim is 3 * (include + 2L).
 */

#include "field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

namespace dmudf
{
    enum class Activation : std::uint8_t
    {
        Sine = 0,
        SoftPlus = 1
    };

    struct DenseLayer
    {
        std::uint32_t in_dim = 0;
        std::uint32_t out_dim = 0;
        Activation activation = Activation::Sine;
        float beta = 0.0f;
        std::vector<float> weights; // out_dim x in_dim, row-major
        std::vector<float> biases;  // out_dim
    };

    struct PositionalEncoding
    {
        std::uint32_t num_frequencies = 0;
        bool include_input = true;

        std::uint32_t output_dim() const { return 3u * ((include_input ? 1u : 0u) + 2u * num_frequencies); }
    };

    struct MlpWeights
    {
        std::uint32_t version = 1;
        PositionalEncoding encoding; // only meaningful for version 2
        std::vector<DenseLayer> layers;
        std::array<float, 6> domain {-1.f, -1.f, -1.f, 1.f, 1.f, 1.f};
    };

    class MlpField final : public ScalarField
    {
    public:
        explicit MlpField(MlpWeights weights) : w_(std::move(weights))
        {
            validate(w_);
            for (const auto& l : w_.layers)
            {
                Eigen::MatrixXd m(l.out_dim, l.in_dim);
                for (std::uint32_t r = 0; r < l.out_dim; ++r)
                    for (std::uint32_t c = 0; c < l.in_dim; ++c)
                        m(r, c) = l.weights[static_cast<std::size_t>(r) * l.in_dim + c];
                Eigen::VectorXd b(l.out_dim);
                for (std::uint32_t r = 0; r < l.out_dim; ++r)
                    b[r] = l.biases[r];
                mats_.push_back(std::move(m));
                biases_.push_back(std::move(b));
            }
        }

        const MlpWeights& weights() const { return w_; }

        static void validate(const MlpWeights& w)
        {
            if (w.version != 1 && w.version != 2)
                throw FieldError("unsupported UDFW version " + std::to_string(w.version));
            if (w.layers.empty())
                throw FieldError("MLP has no layers");
            const std::uint32_t input_dim = w.version == 2 ? w.encoding.output_dim() : 3u;
            std::uint32_t expected = input_dim;
            for (std::size_t k = 0; k < w.layers.size(); ++k)
            {
                const auto& l = w.layers[k];
                if (l.in_dim != expected)
                    throw FieldError("dimension chain break at layer " + std::to_string(k) + ": expected in_dim " +
                                     std::to_string(expected) + ", got " + std::to_string(l.in_dim));
                if (l.out_dim == 0)
                    throw FieldError("layer " + std::to_string(k) + " has zero outputs");
                if (l.weights.size() != static_cast<std::size_t>(l.in_dim) * l.out_dim || l.biases.size() != l.out_dim)
                    throw FieldError("layer " + std::to_string(k) + " parameter count mismatch");
                if (l.activation != Activation::Sine && l.activation != Activation::SoftPlus)
                    throw FieldError("unknown activation code " + std::to_string(static_cast<int>(l.activation)) +
                                     " at layer " + std::to_string(k));
                if (l.activation == Activation::SoftPlus && !(l.beta > 0.0f))
                    throw FieldError("SoftPlus beta must be positive at layer " + std::to_string(k));
                expected = l.out_dim;
            }
            if (expected != 1)
                throw FieldError("MLP output dimension must be 1, got " + std::to_string(expected));
            if (w.layers.back().activation != Activation::SoftPlus)
                throw FieldError("final MLP activation must be SoftPlus");
        }

    protected:
        static constexpr std::size_t kChunk = 8;

        void evaluate(std::span<const Vec3> points, std::span<double> distances, std::span<Vec3> gradients) const override
        {
            // every chunk is padded to full width so a point's result does not
            // depend on how callers batch it
            std::array<Vec3, kChunk> pad;
            std::array<double, kChunk> pad_d;
            std::array<Vec3, kChunk> pad_g;
            for (std::size_t start = 0; start < points.size(); start += kChunk)
            {
                const std::size_t n = std::min(kChunk, points.size() - start);
                if (n == kChunk)
                {
                    eval_chunk(points.subspan(start, n), distances.subspan(start, n), gradients.subspan(start, n));
                    continue;
                }
                std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(start), n, pad.begin());
                std::fill(pad.begin() + static_cast<std::ptrdiff_t>(n), pad.end(), Vec3::Zero());
                eval_chunk(pad, pad_d, pad_g);
                std::copy_n(pad_d.begin(), n, distances.begin() + static_cast<std::ptrdiff_t>(start));
                std::copy_n(pad_g.begin(), n, gradients.begin() + static_cast<std::ptrdiff_t>(start));
            }
        }

    private:
        static double softplus(double z, double beta)
        {
            const double t = beta * z;
            return t > 30.0 ? z : std::log1p(std::exp(t)) / beta;
        }

        static double logistic(double t)
        {
            if (t >= 0.0)
                return 1.0 / (1.0 + std::exp(-t));
            const double e = std::exp(t);
            return e / (1.0 + e);
        }

        void eval_chunk(std::span<const Vec3> pts, std::span<double> dist, std::span<Vec3> grad) const
        {
            const auto n = static_cast<Eigen::Index>(pts.size());
            const bool encoded = w_.version == 2;
            const auto& enc = w_.encoding;

            Eigen::MatrixXd x(encoded ? enc.output_dim() : 3, n);
            for (Eigen::Index j = 0; j < n; ++j)
            {
                const Vec3& p = pts[static_cast<std::size_t>(j)];
                if (!encoded)
                {
                    x.col(j) = p;
                    continue;
                }
                Eigen::Index row = 0;
                if (enc.include_input)
                {
                    x.block<3, 1>(row, j) = p;
                    row += 3;
                }
                for (std::uint32_t k = 0; k < enc.num_frequencies; ++k)
                {
                    const double f = std::ldexp(std::numbers::pi, static_cast<int>(k));
                    for (int c = 0; c < 3; ++c)
                        x(row + c, j) = std::sin(f * p[c]);
                    for (int c = 0; c < 3; ++c)
                        x(row + 3 + c, j) = std::cos(f * p[c]);
                    row += 6;
                }
            }

            // forward pass, keeping pre-activations for the backward pass
            std::vector<Eigen::MatrixXd> pre(w_.layers.size());
            Eigen::MatrixXd h = x;
            for (std::size_t k = 0; k < w_.layers.size(); ++k)
            {
                pre[k] = (mats_[k] * h).colwise() + biases_[k];
                const auto& l = w_.layers[k];
                if (l.activation == Activation::Sine)
                    h = pre[k].array().sin().matrix();
                else
                {
                    const double beta = l.beta;
                    h = pre[k].unaryExpr([beta](double z) { return softplus(z, beta); });
                }
            }

            // backward pass for d(output)/d(input)
            Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, n);
            for (std::size_t k = w_.layers.size(); k-- > 0;)
            {
                const auto& l = w_.layers[k];
                if (l.activation == Activation::Sine)
                    g.array() *= pre[k].array().cos();
                else
                {
                    const double beta = l.beta;
                    g.array() *= pre[k].unaryExpr([beta](double z) { return logistic(beta * z); }).array();
                }
                g = mats_[k].transpose() * g;
            }

            for (Eigen::Index j = 0; j < n; ++j)
            {
                const auto idx = static_cast<std::size_t>(j);
                dist[idx] = h(0, j);
                if (!encoded)
                {
                    grad[idx] = g.col(j);
                    continue;
                }
                const Vec3& p = pts[idx];
                Vec3 gp = Vec3::Zero();
                Eigen::Index row = 0;
                if (enc.include_input)
                {
                    gp += g.block<3, 1>(row, j);
                    row += 3;
                }
                for (std::uint32_t k = 0; k < enc.num_frequencies; ++k)
                {
                    const double f = std::ldexp(std::numbers::pi, static_cast<int>(k));
                    for (int c = 0; c < 3; ++c)
                        gp[c] += g(row + c, j) * f * std::cos(f * p[c]) - g(row + 3 + c, j) * f * std::sin(f * p[c]);
                    row += 6;
                }
                grad[idx] = gp;
            }
        }

        MlpWeights w_;
        std::vector<Eigen::MatrixXd> mats_;
        std::vector<Eigen::VectorXd> biases_;
    };

    namespace detail
    {
        class LeReader
        {
        public:
            explicit LeReader(std::ifstream& in) : in_(in) {}

            template<class T>
            bool read(T& out)
            {
                unsigned char buf[sizeof(T)];
                if (!in_.read(reinterpret_cast<char*>(buf), sizeof(T)))
                    return false;
                if constexpr (std::endian::native != std::endian::little)
                    std::reverse(buf, buf + sizeof(T));
                std::memcpy(&out, buf, sizeof(T));
                return true;
            }

        private:
            std::ifstream& in_;
        };

        template<class T>
        void write_le(std::ofstream& out, T value)
        {
            unsigned char buf[sizeof(T)];
            std::memcpy(buf, &value, sizeof(T));
            if constexpr (std::endian::native != std::endian::little)
                std::reverse(buf, buf + sizeof(T));
            out.write(reinterpret_cast<const char*>(buf), sizeof(T));
        }
    }

    inline MlpWeights read_udfw(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw FieldError("cannot open weights file " + path.string());
        detail::LeReader rd(in);

        char magic[4];
        if (!in.read(magic, 4) || std::memcmp(magic, "UDFW", 4) != 0)
            throw FieldError(path.string() + ": bad magic, not a UDFW file");
        MlpWeights w;
        std::uint32_t count = 0;
        if (!rd.read(w.version) || !rd.read(count))
            throw FieldError(path.string() + ": unexpected EOF in header");
        if (w.version != 1 && w.version != 2)
            throw FieldError(path.string() + ": unsupported UDFW version " + std::to_string(w.version));
        if (w.version == 2)
        {
            std::uint8_t include = 0;
            if (!rd.read(w.encoding.num_frequencies) || !rd.read(include))
                throw FieldError(path.string() + ": unexpected EOF in encoding header");
            w.encoding.include_input = include != 0;
        }

        for (std::uint32_t k = 0; k < count; ++k)
        {
            const std::string eof = path.string() + ": unexpected EOF at layer " + std::to_string(k);
            DenseLayer l;
            std::uint8_t act = 0;
            if (!rd.read(l.in_dim) || !rd.read(l.out_dim) || !rd.read(act) || !rd.read(l.beta))
                throw FieldError(eof);
            if (act > 1)
                throw FieldError(path.string() + ": unknown activation code " + std::to_string(act) + " at layer " +
                                 std::to_string(k));
            l.activation = static_cast<Activation>(act);
            const std::uint32_t expected = k == 0 ? (w.version == 2 ? w.encoding.output_dim() : 3u) : w.layers.back().out_dim;
            if (l.in_dim != expected)
                throw FieldError(path.string() + ": dimension chain break at layer " + std::to_string(k) + " (in_dim " +
                                 std::to_string(l.in_dim) + ", expected " + std::to_string(expected) + ")");
            if (l.out_dim == 0 || l.out_dim > (1u << 16) || l.in_dim > (1u << 16))
                throw FieldError(path.string() + ": implausible layer size at layer " + std::to_string(k));
            l.weights.resize(static_cast<std::size_t>(l.in_dim) * l.out_dim);
            l.biases.resize(l.out_dim);
            for (auto& v : l.weights)
                if (!rd.read(v))
                    throw FieldError(eof);
            for (auto& v : l.biases)
                if (!rd.read(v))
                    throw FieldError(eof);
            w.layers.push_back(std::move(l));
        }
        for (auto& v : w.domain)
            if (!rd.read(v))
                throw FieldError(path.string() + ": unexpected EOF in domain bounds");
        try
        {
            MlpField::validate(w);
        }
        catch (const FieldError& e)
        {
            throw FieldError(path.string() + ": " + e.what());
        }
        return w;
    }

    inline void write_udfw(const MlpWeights& w, const std::filesystem::path& path)
    {
        MlpField::validate(w);
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw FieldError("cannot write weights file " + path.string());
        out.write("UDFW", 4);
        detail::write_le(out, w.version);
        detail::write_le(out, static_cast<std::uint32_t>(w.layers.size()));
        if (w.version == 2)
        {
            detail::write_le(out, w.encoding.num_frequencies);
            detail::write_le(out, static_cast<std::uint8_t>(w.encoding.include_input ? 1 : 0));
        }
        for (const auto& l : w.layers)
        {
            detail::write_le(out, l.in_dim);
            detail::write_le(out, l.out_dim);
            detail::write_le(out, static_cast<std::uint8_t>(l.activation));
            detail::write_le(out, l.beta);
            for (float v : l.weights)
                detail::write_le(out, v);
            for (float v : l.biases)
                detail::write_le(out, v);
        }
        for (float v : w.domain)
            detail::write_le(out, v);
        if (!out)
            throw FieldError("write failed for " + path.string());
    }

    inline std::shared_ptr<MlpField> load_weights(const std::filesystem::path& path)
    {
        return std::make_shared<MlpField>(read_udfw(path));
    }
}
