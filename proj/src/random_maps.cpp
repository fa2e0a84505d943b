#include "rfi/random_maps.hpp"

#include "rfi/error.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

namespace rfi {

IndexDistribution IndexDistribution::deterministic() { return IndexDistribution(Deterministic{}); }

IndexDistribution IndexDistribution::categorical(std::vector<double> weights) {
    if (weights.empty()) throw DomainError("categorical: no weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("categorical: weights must be >= 0");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw DomainError("categorical: weights must sum to 1 (sum is " + std::to_string(total) + ")");
    return IndexDistribution(Categorical{std::move(weights)});
}

IndexDistribution IndexDistribution::gaussian_noise(Index dim, double sigma_dir, double sigma_off) {
    if (dim < 1) throw DomainError("gaussian noise: dimension must be positive");
    if (!(sigma_dir >= 0.0) || !std::isfinite(sigma_dir))
        throw DomainError("gaussian noise: sigma_dir must be >= 0");
    if (!(sigma_off >= 0.0) || !std::isfinite(sigma_off))
        throw DomainError("gaussian noise: sigma_off must be >= 0");
    return IndexDistribution(GaussianNoise{dim, sigma_dir, sigma_off});
}

IndexDistribution IndexDistribution::product(std::vector<IndexDistribution> components) {
    if (components.empty()) throw DomainError("product: no components");
    return IndexDistribution(Product{std::move(components)});
}

IndexSample sample_index(const IndexDistribution& dist, RngStream& rng) {
    IndexSample s;
    s.draw_id = rng.position();
    const auto& v = dist.variant();
    if (std::holds_alternative<IndexDistribution::Deterministic>(v)) {
        return s;
    }
    if (const auto* cat = std::get_if<IndexDistribution::Categorical>(&v)) {
        const double u = rng.uniform();
        double cumulative = 0.0;
        s.index = cat->weights.size() - 1;
        for (std::size_t i = 0; i < cat->weights.size(); ++i) {
            cumulative += cat->weights[i];
            if (u < cumulative) {
                s.index = i;
                break;
            }
        }
        // Rounding in the cumulative sum must never select a zero-weight tail entry.
        while (s.index > 0 && cat->weights[s.index] == 0.0) --s.index;
        return s;
    }
    if (const auto* g = std::get_if<IndexDistribution::GaussianNoise>(&v)) {
        if (g->sigma_dir > 0.0) {
            s.xi.resize(g->dim);
            for (Index k = 0; k < g->dim; ++k)
                s.xi[k] = g->sigma_dir * rng.truncated_normal(kNoiseTruncation);
        }
        if (g->sigma_off > 0.0) s.zeta = g->sigma_off * rng.truncated_normal(kNoiseTruncation);
        return s;
    }
    const auto& prod = std::get<IndexDistribution::Product>(v);
    s.parts.reserve(prod.components.size());
    for (const auto& c : prod.components) s.parts.push_back(sample_index(c, rng));
    return s;
}

RandomMap::RandomMap(Index dim, IndexDistribution dist, Builder builder)
    : dim_(dim), dist_(std::move(dist)), builder_(std::move(builder)) {
    if (dim_ < 1) throw DomainError("random map: dimension must be positive");
    if (!builder_) throw DomainError("random map: empty builder");
}

Point RandomMap::apply(const IndexSample& i, const Point& x) const {
    require_dim(dim_, x, "random map argument");
    return builder_(i, x);
}

ops::Map RandomMap::realize(IndexSample i) const {
    return ops::Map(dim_, [b = builder_, i = std::move(i)](const Point& x) { return b(i, x); });
}

namespace random_maps {

RandomMap deterministic(ops::Map map) {
    const Index n = map.dim();
    return RandomMap(n, IndexDistribution::deterministic(),
                     [m = std::move(map)](const IndexSample&, const Point& x) { return m(x); });
}

RandomMap categorical(std::vector<double> weights, std::vector<ops::Map> maps) {
    if (weights.size() != maps.size()) throw DomainError("categorical map: one weight per map");
    if (maps.empty()) throw DomainError("categorical map: no maps");
    const Index n = maps.front().dim();
    for (const auto& m : maps)
        if (m.dim() != n) throw DimensionError("categorical map operand", n, m.dim());
    return RandomMap(n, IndexDistribution::categorical(std::move(weights)),
                     [maps = std::move(maps)](const IndexSample& i, const Point& x) {
                         return maps[i.index](x);
                     });
}

NoisyHyperplane anchored_hyperplane(Point normal, double offset) {
    const double nn = normal.squaredNorm();
    if (!(nn > 0.0) || !std::isfinite(nn)) throw DomainError("hyperplane: normal vector must be nonzero");
    Point anchor = (offset / nn) * normal;
    return NoisyHyperplane{std::move(normal), offset, std::move(anchor)};
}

Point perturbed_projection(const NoisyHyperplane& h, const Point& xi, double zeta, const Point& x) {
    if (xi.size() == 0) {
        const double step = (h.normal.dot(x - h.anchor) - zeta) / h.normal.squaredNorm();
        return x - step * h.normal;
    }
    const Point dir = h.normal + xi;
    const double nn = dir.squaredNorm();
    const double step = (dir.dot(x - h.anchor) - zeta) / nn;
    return x - step * dir;
}

namespace {

void check_plane(const NoisyHyperplane& h) {
    if (!(h.normal.norm() > 0.0)) throw DomainError("noisy hyperplane: normal vector must be nonzero");
    require_dim(h.normal.size(), h.anchor, "noisy hyperplane anchor");
    if (std::abs(h.normal.dot(h.anchor) - h.offset) > 1e-9 * (1.0 + std::abs(h.offset)))
        throw DomainError("noisy hyperplane: anchor must lie on the hyperplane");
}

} // namespace

RandomMap noisy_hyperplane(NoisyHyperplane h, double sigma_dir, double sigma_off) {
    check_plane(h);
    const Index n = h.normal.size();
    return RandomMap(n, IndexDistribution::gaussian_noise(n, sigma_dir, sigma_off),
                     [h = std::move(h)](const IndexSample& i, const Point& x) {
                         return perturbed_projection(h, i.xi, i.zeta, x);
                     });
}

RandomMap noisy_cyclic_projections(std::vector<NoisyHyperplane> planes, double sigma_dir,
                                   double sigma_off) {
    if (planes.empty()) throw DomainError("cyclic projections: no hyperplanes");
    const Index n = planes.front().normal.size();
    std::vector<IndexDistribution> parts;
    parts.reserve(planes.size());
    for (const auto& h : planes) {
        check_plane(h);
        if (h.normal.size() != n) throw DimensionError("cyclic projections hyperplane", n, h.normal.size());
        parts.push_back(IndexDistribution::gaussian_noise(n, sigma_dir, sigma_off));
    }
    return RandomMap(n, IndexDistribution::product(std::move(parts)),
                     [planes = std::move(planes)](const IndexSample& i, const Point& x) {
                         Point y = x;
                         for (std::size_t j = 0; j < planes.size(); ++j)
                             y = perturbed_projection(planes[j], i.parts[j].xi, i.parts[j].zeta, y);
                         return y;
                     });
}

RandomMap stochastic_forward_backward(std::vector<ops::QuadraticFn> fs, std::vector<double> f_weights,
                                      std::vector<ops::Prox> gs, std::vector<double> g_weights,
                                      double t) {
    if (fs.empty() || gs.empty()) throw DomainError("forward-backward: need at least one f and one g");
    if (fs.size() != f_weights.size() || gs.size() != g_weights.size())
        throw DomainError("forward-backward: one weight per function");
    if (!(t > 0.0)) throw DomainError("forward-backward: step size must be positive");
    const Index n = fs.front().dim();
    for (const auto& f : fs)
        if (f.dim() != n) throw DimensionError("forward-backward f", n, f.dim());
    for (const auto& g : gs)
        if (g.dim() != n) throw DimensionError("forward-backward g", n, g.dim());
    auto dist = IndexDistribution::product({IndexDistribution::categorical(std::move(f_weights)),
                                            IndexDistribution::categorical(std::move(g_weights))});
    return RandomMap(n, std::move(dist),
                     [fs = std::move(fs), gs = std::move(gs), t](const IndexSample& i, const Point& x) {
                         return gs[i.parts[1].index](ops::grad_step(fs[i.parts[0].index], t, x));
                     });
}

RandomMap stochastic_douglas_rachford(std::vector<ops::Prox> fs, std::vector<double> f_weights,
                                      std::vector<ops::Prox> gs, std::vector<double> g_weights) {
    if (fs.empty() || gs.empty()) throw DomainError("Douglas-Rachford: need at least one f and one g");
    if (fs.size() != f_weights.size() || gs.size() != g_weights.size())
        throw DomainError("Douglas-Rachford: one weight per function");
    const Index n = fs.front().dim();
    for (const auto& f : fs)
        if (f.dim() != n) throw DimensionError("Douglas-Rachford f", n, f.dim());
    for (const auto& g : gs)
        if (g.dim() != n) throw DimensionError("Douglas-Rachford g", n, g.dim());
    auto dist = IndexDistribution::product({IndexDistribution::categorical(std::move(f_weights)),
                                            IndexDistribution::categorical(std::move(g_weights))});
    return RandomMap(n, std::move(dist),
                     [fs = std::move(fs), gs = std::move(gs)](const IndexSample& i, const Point& x) -> Point {
                         const auto& f = fs[i.parts[0].index];
                         const auto& g = gs[i.parts[1].index];
                         return 0.5 * (ops::reflect(f, ops::reflect(g, x)) + x);
                     });
}

NoiseConstants noise_constants(const NoisyHyperplane& h, double sigma_dir, double sigma_off,
                               std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < 1000) throw DomainError("noise constants: need at least 1000 Monte Carlo draws");
    const Index n = h.normal.size();
    const auto dist = IndexDistribution::gaussian_noise(n, sigma_dir, sigma_off);

    std::vector<Point> dirs(n_mc);
    Eigen::VectorXd d_terms(static_cast<Index>(n_mc));
    Matrix moment = Matrix::Zero(n, n);
    for (std::size_t s = 0; s < n_mc; ++s) {
        RngStream rng(seed, static_cast<std::uint32_t>(s), 0, stream::kNoiseMc);
        const IndexSample draw = sample_index(dist, rng);
        Point dir = draw.xi.size() ? Point(h.normal + draw.xi) : h.normal;
        const double nn = dir.squaredNorm();
        d_terms[static_cast<Index>(s)] = (h.offset + draw.zeta) * (h.offset + draw.zeta) / nn;
        dir /= std::sqrt(nn);
        moment.noalias() += dir * dir.transpose();
        dirs[s] = std::move(dir);
    }
    moment /= static_cast<double>(n_mc);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(moment);
    const double c_hat = eig.eigenvalues()[0];
    const Point v = eig.eigenvectors().col(0);
    Eigen::VectorXd c_terms(static_cast<Index>(n_mc));
    for (std::size_t s = 0; s < n_mc; ++s) {
        const double p = v.dot(dirs[s]);
        c_terms[static_cast<Index>(s)] = p * p;
    }

    auto std_error = [](const Eigen::VectorXd& x) {
        const double mean = x.mean();
        const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
        return std::sqrt(var / static_cast<double>(x.size()));
    };

    NoiseConstants out;
    out.c_hat = c_hat;
    out.c_std_error = std_error(c_terms);
    out.d_hat = d_terms.mean();
    out.d_std_error = std_error(d_terms);
    out.n_mc = n_mc;
    out.flagged = !(c_hat > std::max(3.0 * out.c_std_error, 1e-12));
    return out;
}

} // namespace random_maps
} // namespace rfi
