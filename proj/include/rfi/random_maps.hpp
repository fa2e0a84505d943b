#pragma once

#include "rfi/operators.hpp"
#include "rfi/rng.hpp"

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

namespace rfi {

/// Law of the random index xi driving one step of the iteration.
class IndexDistribution {
public:
    struct Deterministic {};
    struct Categorical {
        std::vector<double> weights;
    };
    /// xi ~ N(0, sigma_dir^2 I_dim), zeta ~ N(0, sigma_off^2), both truncated at 6 sigma.
    struct GaussianNoise {
        Index dim;
        double sigma_dir;
        double sigma_off;
    };
    /// Independent components, drawn in order.
    struct Product {
        std::vector<IndexDistribution> components;
    };
    using Variant = std::variant<Deterministic, Categorical, GaussianNoise, Product>;

    static IndexDistribution deterministic();
    /// Throws DomainError unless weights are nonnegative and sum to 1 within 1e-12.
    static IndexDistribution categorical(std::vector<double> weights);
    static IndexDistribution gaussian_noise(Index dim, double sigma_dir, double sigma_off);
    static IndexDistribution product(std::vector<IndexDistribution> components);

    const Variant& variant() const noexcept { return v_; }

private:
    explicit IndexDistribution(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

inline constexpr double kNoiseTruncation = 6.0;

/// One realized draw of the index. Unused fields stay empty: a zero-length
/// `xi` means no direction perturbation.
struct IndexSample {
    std::size_t index = 0;
    Point xi;
    double zeta = 0.0;
    std::vector<IndexSample> parts;
    std::uint64_t draw_id = 0;

    friend bool operator==(const IndexSample&, const IndexSample&) = default;
};

IndexSample sample_index(const IndexDistribution& dist, RngStream& rng);

/// Update function Phi(x, i) = T_i x: an index law plus a rule that evaluates
/// the realized map at a point.
class RandomMap {
public:
    using Builder = std::function<Point(const IndexSample&, const Point&)>;

    RandomMap(Index dim, IndexDistribution dist, Builder builder);

    Index dim() const noexcept { return dim_; }
    const IndexDistribution& distribution() const noexcept { return dist_; }

    IndexSample sample(RngStream& rng) const { return sample_index(dist_, rng); }
    Point apply(const IndexSample& i, const Point& x) const;
    /// The deterministic map T_i for a fixed draw.
    ops::Map realize(IndexSample i) const;

private:
    Index dim_;
    IndexDistribution dist_;
    Builder builder_;
};

inline Point apply(const RandomMap& map, const IndexSample& i, const Point& x) {
    return map.apply(i, x);
}

namespace random_maps {

RandomMap deterministic(ops::Map map);
RandomMap categorical(std::vector<double> weights, std::vector<ops::Map> maps);

/// A hyperplane {y : <a, y> = b} with a point x_bar on it; the random map is
/// the exact projector onto {y : <a + xi, y - x_bar> = zeta}.
struct NoisyHyperplane {
    Point normal;
    double offset;
    Point anchor;
};

/// Builds the anchored hyperplane with anchor b a / |a|^2.
NoisyHyperplane anchored_hyperplane(Point normal, double offset);

/// Exact projection onto the perturbed hyperplane.
Point perturbed_projection(const NoisyHyperplane& h, const Point& xi, double zeta, const Point& x);

RandomMap noisy_hyperplane(NoisyHyperplane h, double sigma_dir, double sigma_off);
/// P^m o ... o P^1 with independent noise on every hyperplane.
RandomMap noisy_cyclic_projections(std::vector<NoisyHyperplane> planes, double sigma_dir,
                                   double sigma_off);

/// x -> J_{g_j}(x - t grad f_i(x)), (i, j) drawn independently.
RandomMap stochastic_forward_backward(std::vector<ops::QuadraticFn> fs, std::vector<double> f_weights,
                                      std::vector<ops::Prox> gs, std::vector<double> g_weights,
                                      double t);

/// x -> 1/2 (R_{f_i} R_{g_j} + Id) x, (i, j) drawn independently.
RandomMap stochastic_douglas_rachford(std::vector<ops::Prox> fs, std::vector<double> f_weights,
                                      std::vector<ops::Prox> gs, std::vector<double> g_weights);

/// Monte Carlo estimates of the noise constants
///   c = inf_{|z|=1} E[<a+xi, z>^2 / |a+xi|^2],  d = E[(b+zeta)^2 / |a+xi|^2].
struct NoiseConstants {
    double c_hat;
    double c_std_error;
    double d_hat;
    double d_std_error;
    std::size_t n_mc;
    /// c_hat <= max(3 standard errors, 1e-12): no contraction from the noise.
    bool flagged;
};

NoiseConstants noise_constants(const NoisyHyperplane& h, double sigma_dir, double sigma_off,
                               std::size_t n_mc, std::uint64_t seed);

} // namespace random_maps
} // namespace rfi
