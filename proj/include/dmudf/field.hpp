#pragma once

/**
 * Unsigned distance field sources.
 *
 * Every source answers batched queries through ScalarField::eval_batch, which
 * returns one distance and one (unnormalized) gradient per point. Fields are
 * immutable after construction and may be evaluated from many threads at once.
 *
 * Analytic shapes here return the exact UDF of their surface, so their gradient
 * has unit length wherever the distance is positive. The mesh-backed and
 * MLP-backed sources live in mesh_field.hpp and mlp_field.hpp.
 */

#include "geometry.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmudf
{
    class FieldError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    struct FieldResponse
    {
        std::vector<double> distances;
        std::vector<Vec3> gradients;
    };

    inline std::string format_point(const Vec3& p)
    {
        std::ostringstream os;
        os.precision(17);
        os << "(" << p.x() << ", " << p.y() << ", " << p.z() << ")";
        return os.str();
    }

    class ScalarField
    {
    public:
        ScalarField() = default;
        ScalarField(const ScalarField&) = delete;
        ScalarField& operator=(const ScalarField&) = delete;
        virtual ~ScalarField() = default;

        FieldResponse eval_batch(std::span<const Vec3> points) const
        {
            FieldResponse out;
            out.distances.resize(points.size());
            out.gradients.resize(points.size());
            eval_into(points, out.distances, out.gradients);
            return out;
        }

        /// Same as eval_batch but writes into caller-owned storage.
        void eval_into(std::span<const Vec3> points, std::span<double> distances, std::span<Vec3> gradients) const
        {
            if (points.empty())
                throw FieldError("field query batch is empty");
            if (distances.size() != points.size() || gradients.size() != points.size())
                throw FieldError("field response storage does not match batch length");
            for (const Vec3& p : points)
                if (!p.allFinite())
                    throw FieldError("non-finite query point " + format_point(p));

            evaluate(points, distances, gradients);
            queries_.fetch_add(points.size(), std::memory_order_relaxed);

            for (std::size_t i = 0; i < points.size(); ++i)
            {
                if (!std::isfinite(distances[i]) || !gradients[i].allFinite())
                    throw FieldError("non-finite field output at point " + format_point(points[i]));
            }
        }

        double distance(const Vec3& p) const
        {
            double d = 0.0;
            Vec3 g;
            eval_into(std::span<const Vec3>(&p, 1), std::span<double>(&d, 1), std::span<Vec3>(&g, 1));
            return d;
        }

        std::pair<double, Vec3> distance_and_gradient(const Vec3& p) const
        {
            double d = 0.0;
            Vec3 g;
            eval_into(std::span<const Vec3>(&p, 1), std::span<double>(&d, 1), std::span<Vec3>(&g, 1));
            return {d, g};
        }

        /// Total number of points evaluated since construction (or the last reset).
        std::uint64_t query_count() const { return queries_.load(std::memory_order_relaxed); }
        void reset_query_count() const { queries_.store(0, std::memory_order_relaxed); }

    protected:
        virtual void evaluate(std::span<const Vec3> points, std::span<double> distances, std::span<Vec3> gradients) const = 0;

    private:
        mutable std::atomic<std::uint64_t> queries_ {0};
    };

    using FieldPtr = std::shared_ptr<const ScalarField>;

    /// Base for fields whose value is a closed-form function of one point.
    class PointwiseField : public ScalarField
    {
    protected:
        virtual std::pair<double, Vec3> at(const Vec3& p) const = 0;

        void evaluate(std::span<const Vec3> points, std::span<double> distances, std::span<Vec3> gradients) const override
        {
            for (std::size_t i = 0; i < points.size(); ++i)
            {
                auto [d, g] = at(points[i]);
                distances[i] = d;
                gradients[i] = g;
            }
        }
    };

    class SphereField final : public PointwiseField
    {
    public:
        SphereField(Vec3 center, double radius) : center_(std::move(center)), radius_(radius)
        {
            if (!(radius > 0.0))
                throw FieldError("sphere radius must be positive");
        }
        explicit SphereField(double radius) : SphereField(Vec3::Zero(), radius) {}

        double radius() const { return radius_; }
        const Vec3& center() const { return center_; }

    protected:
        std::pair<double, Vec3> at(const Vec3& p) const override
        {
            const Vec3 r = p - center_;
            const double len = r.norm();
            if (len == 0.0)
                return {radius_, Vec3::Zero()};
            const double s = len - radius_;
            const Vec3 dir = r / len;
            return {std::abs(s), s < 0.0 ? Vec3(-dir) : dir};
        }

    private:
        Vec3 center_;
        double radius_;
    };

    /// UDF of the surface of an axis-aligned box.
    class BoxField final : public PointwiseField
    {
    public:
        BoxField(Vec3 center, Vec3 half_extent) : center_(std::move(center)), half_(std::move(half_extent))
        {
            if (!(half_.array() > 0.0).all())
                throw FieldError("box half extents must be positive");
        }
        explicit BoxField(double half_size) : BoxField(Vec3::Zero(), Vec3::Constant(half_size)) {}

        const Vec3& center() const { return center_; }
        const Vec3& half_extent() const { return half_; }

    protected:
        std::pair<double, Vec3> at(const Vec3& p) const override
        {
            const Vec3 local = p - center_;
            Vec3 sign;
            for (int k = 0; k < 3; ++k)
                sign[k] = local[k] < 0.0 ? -1.0 : 1.0;
            const Vec3 q = local.cwiseAbs() - half_;
            const Vec3 outside = q.cwiseMax(0.0);
            const double d_out = outside.norm();
            if (d_out > 0.0)
                return {d_out, sign.cwiseProduct(outside) / d_out};

            int k;
            const double d_in = 0.0 - q.maxCoeff(&k);
            Vec3 g = Vec3::Zero();
            g[k] = d_in > 0.0 ? -sign[k] : sign[k];
            return {d_in, g};
        }

    private:
        Vec3 center_;
        Vec3 half_;
    };

    /// |n . x - offset| for a unit normal n.
    class PlaneField final : public PointwiseField
    {
    public:
        PlaneField(Vec3 normal, double offset) : normal_(normal.normalized()), offset_(offset)
        {
            if (!(normal.norm() > 0.0))
                throw FieldError("plane normal must be non-zero");
        }

        const Vec3& normal() const { return normal_; }
        double offset() const { return offset_; }

    protected:
        std::pair<double, Vec3> at(const Vec3& p) const override
        {
            const double s = normal_.dot(p) - offset_;
            return {std::abs(s), s < 0.0 ? Vec3(-normal_) : normal_};
        }

    private:
        Vec3 normal_;
        double offset_;
    };

    /// Flat disk of the given radius in the plane z = height, centered on the z axis.
    class DiskField final : public PointwiseField
    {
    public:
        DiskField(double radius, double height = 0.0) : radius_(radius), height_(height)
        {
            if (!(radius > 0.0))
                throw FieldError("disk radius must be positive");
        }

        double radius() const { return radius_; }
        double height() const { return height_; }

    protected:
        std::pair<double, Vec3> at(const Vec3& p) const override
        {
            const double dz = p.z() - height_;
            const double rho = std::hypot(p.x(), p.y());
            if (rho <= radius_)
                return {std::abs(dz), Vec3(0.0, 0.0, dz < 0.0 ? -1.0 : 1.0)};
            const Vec3 closest(radius_ * p.x() / rho, radius_ * p.y() / rho, height_);
            const Vec3 r = p - closest;
            const double d = r.norm();
            return {d, r / d};
        }

    private:
        double radius_;
        double height_;
    };

    /// Torus around the z axis: major radius R, tube radius r.
    class TorusField final : public PointwiseField
    {
    public:
        TorusField(Vec3 center, double major, double minor) : center_(std::move(center)), major_(major), minor_(minor)
        {
            if (!(major > 0.0) || !(minor > 0.0) || minor >= major)
                throw FieldError("torus requires 0 < minor < major");
        }

    protected:
        std::pair<double, Vec3> at(const Vec3& p) const override
        {
            const Vec3 l = p - center_;
            const double rho = std::hypot(l.x(), l.y());
            // nearest point on the core circle; ill-defined on the axis, pick +x
            const Vec3 core = rho > 0.0 ? Vec3(major_ * l.x() / rho, major_ * l.y() / rho, 0.0) : Vec3(major_, 0.0, 0.0);
            const Vec3 r = l - core;
            const double len = r.norm();
            if (len == 0.0)
                return {minor_, Vec3::Zero()};
            const double s = len - minor_;
            const Vec3 dir = r / len;
            return {std::abs(s), s < 0.0 ? Vec3(-dir) : dir};
        }

    private:
        Vec3 center_;
        double major_;
        double minor_;
    };

    /// Constant value everywhere; has no zero-level set when value > 0.
    class ConstantField final : public PointwiseField
    {
    public:
        explicit ConstantField(double value) : value_(value)
        {
            if (!(value >= 0.0))
                throw FieldError("constant field value must be non-negative");
        }

    protected:
        std::pair<double, Vec3> at(const Vec3&) const override { return {value_, Vec3::Zero()}; }

    private:
        double value_;
    };

    /// Pointwise minimum of several UDFs: the UDF of the union of their surfaces.
    class UnionField final : public ScalarField
    {
    public:
        explicit UnionField(std::vector<FieldPtr> parts) : parts_(std::move(parts))
        {
            if (parts_.empty())
                throw FieldError("union field needs at least one part");
        }

    protected:
        void evaluate(std::span<const Vec3> points, std::span<double> distances, std::span<Vec3> gradients) const override
        {
            std::vector<double> d(points.size());
            std::vector<Vec3> g(points.size());
            for (std::size_t k = 0; k < parts_.size(); ++k)
            {
                parts_[k]->eval_into(points, d, g);
                for (std::size_t i = 0; i < points.size(); ++i)
                {
                    if (k == 0 || d[i] < distances[i])
                    {
                        distances[i] = d[i];
                        gradients[i] = g[i];
                    }
                }
            }
        }

    private:
        std::vector<FieldPtr> parts_;
    };

    struct NoiseParams
    {
        double near_surface_bias = 0.001; // floor the output approaches at the surface
        double smoothing_radius = 0.004;  // axis offsets averaged around each query
        double amplitude = 0.001;         // peak magnitude of the seeded perturbation
        double falloff = 0.002;           // perturbation decays as exp(-d / falloff)
        double noise_spacing = 0.01;      // lattice spacing of the value noise
        std::uint64_t seed = 0;
    };

    /**
     * Imitates the error profile of an MLP-encoded UDF around a base field:
     * blurred near the zero-level set, lifted to a positive floor so it never
     * reaches zero, and perturbed by seeded value noise that fades with distance.
     *
     *   s(p) = mean of base(p +- r e_k) over the 6 axis offsets
     *   u(p) = max(s(p) + a exp(-s(p)/lambda) noise(p), 0)
     *   F(p) = sqrt(u(p)^2 + b^2)
     *
     * Deterministic for a given seed; gradients are exact for this formula.
     */
    class NoisyFieldWrapper final : public ScalarField
    {
    public:
        NoisyFieldWrapper(FieldPtr base, NoiseParams params) : base_(std::move(base)), params_(params)
        {
            if (!base_)
                throw FieldError("noisy wrapper needs a base field");
            if (!(params_.near_surface_bias > 0.0) || params_.smoothing_radius < 0.0 || params_.amplitude < 0.0 ||
                !(params_.falloff > 0.0) || !(params_.noise_spacing > 0.0))
                throw FieldError("invalid noise parameters");
        }

        const NoiseParams& params() const { return params_; }

    protected:
        void evaluate(std::span<const Vec3> points, std::span<double> distances, std::span<Vec3> gradients) const override
        {
            const double r = params_.smoothing_radius;
            std::vector<Vec3> offsets;
            offsets.reserve(points.size() * 6);
            for (const Vec3& p : points)
                for (int k = 0; k < 3; ++k)
                {
                    Vec3 e = Vec3::Zero();
                    e[k] = r;
                    offsets.push_back(p + e);
                    offsets.push_back(p - e);
                }
            std::vector<double> bd(offsets.size());
            std::vector<Vec3> bg(offsets.size());
            base_->eval_into(offsets, bd, bg);

            for (std::size_t i = 0; i < points.size(); ++i)
            {
                double s = 0.0;
                Vec3 gs = Vec3::Zero();
                for (int j = 0; j < 6; ++j)
                {
                    s += bd[6 * i + j];
                    gs += bg[6 * i + j];
                }
                s /= 6.0;
                gs /= 6.0;

                auto [n, gn] = value_noise(points[i]);
                const double decay = params_.amplitude * std::exp(-s / params_.falloff);
                const double u = s + decay * n;
                const double b = params_.near_surface_bias;
                if (u <= 0.0)
                {
                    distances[i] = b;
                    gradients[i] = Vec3::Zero();
                    continue;
                }
                const double out = std::sqrt(u * u + b * b);
                const Vec3 gu = gs + decay * (gn - (n / params_.falloff) * gs);
                distances[i] = out;
                gradients[i] = (u / out) * gu;
            }
        }

    private:
        static std::uint64_t mix(std::uint64_t x)
        {
            x += 0x9e3779b97f4a7c15ULL;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            return x ^ (x >> 31);
        }

        double lattice_value(std::int64_t x, std::int64_t y, std::int64_t z) const
        {
            std::uint64_t h = mix(params_.seed);
            h = mix(h ^ static_cast<std::uint64_t>(x));
            h = mix(h ^ static_cast<std::uint64_t>(y));
            h = mix(h ^ static_cast<std::uint64_t>(z));
            return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
        }

        // Quintic-faded trilinear value noise in [-1, 1] and its gradient.
        std::pair<double, Vec3> value_noise(const Vec3& p) const
        {
            const Vec3 x = p / params_.noise_spacing;
            std::int64_t base[3];
            double t[3], w[3], dw[3];
            for (int k = 0; k < 3; ++k)
            {
                const double fl = std::floor(x[k]);
                base[k] = static_cast<std::int64_t>(fl);
                t[k] = x[k] - fl;
                w[k] = t[k] * t[k] * t[k] * (t[k] * (t[k] * 6.0 - 15.0) + 10.0);
                dw[k] = 30.0 * t[k] * t[k] * (t[k] - 1.0) * (t[k] - 1.0);
            }
            double value = 0.0;
            Vec3 grad = Vec3::Zero();
            for (int c = 0; c < 8; ++c)
            {
                const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
                const double v = lattice_value(base[0] + ox, base[1] + oy, base[2] + oz);
                const double wx = ox ? w[0] : 1.0 - w[0];
                const double wy = oy ? w[1] : 1.0 - w[1];
                const double wz = oz ? w[2] : 1.0 - w[2];
                const double dx = ox ? dw[0] : -dw[0];
                const double dy = oy ? dw[1] : -dw[1];
                const double dz = oz ? dw[2] : -dw[2];
                value += v * wx * wy * wz;
                grad += v * Vec3(dx * wy * wz, wx * dy * wz, wx * wy * dz);
            }
            return {value, grad / params_.noise_spacing};
        }

        FieldPtr base_;
        NoiseParams params_;
    };
}
