#pragma once

#include <dmudf/mlp_field.hpp>

#include <filesystem>
#include <random>
#include <string>

namespace dmudf::test
{
    inline std::filesystem::path temp_path(const std::string& name)
    {
        const std::filesystem::path dir = DMUDF_TEST_TMP;
        std::filesystem::create_directories(dir);
        return dir / name;
    }

    inline DenseLayer random_layer(std::uint32_t in, std::uint32_t out, Activation act, float beta, float scale,
                                   std::mt19937_64& rng)
    {
        std::uniform_real_distribution<float> u(-scale, scale);
        DenseLayer l;
        l.in_dim = in;
        l.out_dim = out;
        l.activation = act;
        l.beta = beta;
        l.weights.resize(static_cast<std::size_t>(in) * out);
        l.biases.resize(out);
        for (auto& w : l.weights)
            w = u(rng);
        for (auto& b : l.biases)
            b = u(rng);
        return l;
    }

    // sine hidden layers, SoftPlus output
    inline MlpWeights random_mlp(std::uint64_t seed, std::uint32_t width = 32, int hidden = 2, float beta = 100.f)
    {
        std::mt19937_64 rng(seed);
        MlpWeights w;
        std::uint32_t in = 3;
        for (int k = 0; k < hidden; ++k)
        {
            w.layers.push_back(random_layer(in, width, Activation::Sine, 0.f, k == 0 ? 2.f : 0.3f, rng));
            in = width;
        }
        w.layers.push_back(random_layer(in, 1, Activation::SoftPlus, beta, 0.3f, rng));
        return w;
    }
}
