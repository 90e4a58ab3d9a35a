#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netspice/netmodel.hpp"

namespace netspice {

using Rng = std::mt19937_64;

// Rational filter in the delay operator: num(q^-1) / den(q^-1), coefficient k multiplies q^-k.
// den[0] == 1.
struct TransferFunction {
    std::vector<double> numerator{0.0};
    std::vector<double> denominator{1.0};

    std::size_t order() const {
        return std::max(numerator.size(), denominator.size()) - 1;
    }
    bool strictly_proper() const { return numerator.empty() || numerator.front() == 0.0; }
    bool is_zero() const {
        return std::all_of(numerator.begin(), numerator.end(), [](double c) { return c == 0.0; });
    }
};

enum class NetworkMode { Fir, FirNoise, Rational };

inline std::string to_string(NetworkMode mode) {
    switch (mode) {
        case NetworkMode::Fir: return "fir";
        case NetworkMode::FirNoise: return "fir_noise";
        case NetworkMode::Rational: return "rational";
    }
    return "unknown";
}

inline NetworkMode parse_mode(const std::string& name) {
    if (name == "fir") return NetworkMode::Fir;
    if (name == "fir_noise") return NetworkMode::FirNoise;
    if (name == "rational") return NetworkMode::Rational;
    throw std::invalid_argument("unknown network mode '" + name + "' (expected fir, fir_noise or rational)");
}

struct GroundTruthNetwork {
    std::size_t J = 0;
    BoolMatrix adjacency;
    std::vector<std::vector<std::optional<TransferFunction>>> G;  // [i][j]: edge j -> i
    std::vector<TransferFunction> H;                             // monic noise filters
    std::vector<double> sigma2;
    NetworkMode mode = NetworkMode::Fir;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Polynomial helpers

inline std::vector<double> poly_multiply(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k) out[i + k] += a[i] * b[k];
    return out;
}

// Roots in z of c0 z^n + c1 z^(n-1) + ... + cn, i.e. the poles/zeros of a polynomial in q^-1.
inline std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
    std::size_t n = coeffs.size();
    while (n > 1 && coeffs[n - 1] == 0.0) --n;  // trailing zeros are roots at z = 0
    std::vector<std::complex<double>> roots(coeffs.size() - n, {0.0, 0.0});
    if (n <= 1) return roots;
    if (coeffs[0] == 0.0) throw std::invalid_argument("poly_roots: leading coefficient is zero");
    const auto deg = static_cast<Eigen::Index>(n - 1);
    Matrix companion = Matrix::Zero(deg, deg);
    for (Eigen::Index k = 0; k < deg; ++k) companion(0, k) = -coeffs[static_cast<std::size_t>(k) + 1] / coeffs[0];
    for (Eigen::Index k = 1; k < deg; ++k) companion(k, k - 1) = 1.0;
    const Eigen::VectorXcd eig = companion.eigenvalues();
    for (Eigen::Index k = 0; k < eig.size(); ++k) roots.push_back(eig(k));
    return roots;
}

inline double max_root_modulus(const std::vector<double>& coeffs) {
    double out = 0.0;
    for (const auto& r : poly_roots(coeffs)) out = std::max(out, std::abs(r));
    return out;
}

// h[0..length-1] of num/den excited by a unit impulse.
inline std::vector<double> impulse_response(const std::vector<double>& num, const std::vector<double>& den,
                                            std::size_t length) {
    if (den.empty() || den[0] == 0.0) throw std::invalid_argument("impulse_response: den[0] must be nonzero");
    std::vector<double> h(length, 0.0);
    for (std::size_t t = 0; t < length; ++t) {
        double acc = t < num.size() ? num[t] : 0.0;
        for (std::size_t k = 1; k < den.size() && k <= t; ++k) acc -= den[k] * h[t - k];
        h[t] = acc / den[0];
    }
    return h;
}

inline std::vector<double> impulse_response(const TransferFunction& tf, std::size_t length) {
    return impulse_response(tf.numerator, tf.denominator, length);
}

// ---------------------------------------------------------------------------
// Random generation

inline BoolMatrix random_topology(std::size_t J, double rho, Rng& rng) {
    if (J < 2) throw std::invalid_argument("random_topology: J must be >= 2");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("random_topology: rho must lie in (0, 1]");
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            if (i != j) slots.emplace_back(i, j);
    const auto edges = static_cast<std::size_t>(std::llround(rho * static_cast<double>(slots.size())));
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < edges; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, slots.size() - 1);
        std::swap(slots[k], slots[pick(rng)]);
    }
    BoolMatrix adj = BoolMatrix::Constant(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J), false);
    for (std::size_t k = 0; k < edges; ++k)
        adj(static_cast<Eigen::Index>(slots[k].first), static_cast<Eigen::Index>(slots[k].second)) = true;
    return adj;
}

inline BoolMatrix random_topology(std::size_t J, double rho, std::uint64_t seed) {
    Rng rng(seed);
    return random_topology(J, rho, rng);
}

// Taps at delays 1..K, each uniform on [0, 1].
inline TransferFunction random_fir(std::size_t K, Rng& rng) {
    if (K < 1) throw std::invalid_argument("random_fir: K must be >= 1");
    std::uniform_real_distribution<double> tap(0.0, 1.0);
    TransferFunction tf;
    tf.numerator.assign(K + 1, 0.0);
    for (std::size_t k = 1; k <= K; ++k) tf.numerator[k] = tap(rng);
    tf.denominator = {1.0};
    return tf;
}

inline TransferFunction random_fir(std::size_t K, std::uint64_t seed) {
    Rng rng(seed);
    return random_fir(K, rng);
}

namespace detail {

constexpr double max_pole_modulus = 0.95;

// Monic polynomial of the given degree with roots drawn as real values or conjugate pairs of
// modulus uniform on [0, max_pole_modulus].
inline std::vector<double> random_stable_monic(std::size_t degree, Rng& rng) {
    std::uniform_real_distribution<double> modulus(0.0, max_pole_modulus);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> poly{1.0};
    std::size_t remaining = degree;
    while (remaining > 0) {
        if (remaining >= 2 && coin(rng)) {
            const double r = modulus(rng);
            const double phi = angle(rng);
            poly = poly_multiply(poly, {1.0, -2.0 * r * std::cos(phi), r * r});
            remaining -= 2;
        } else {
            const double r = modulus(rng);
            poly = poly_multiply(poly, {1.0, coin(rng) ? r : -r});
            remaining -= 1;
        }
    }
    return poly;
}

inline double impulse_norm(const TransferFunction& tf) {
    const auto h = impulse_response(tf, 2000);
    double acc = 0.0;
    for (double x : h) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace detail

// Strictly proper stable rational filter of random order in [min_order, max_order].
// Numerator taps at delays 1..n are uniform on [-1, 1], then rescaled so the impulse-response
// l2 norm is uniform on [0.1, 1].
inline TransferFunction random_rational(std::size_t min_order, std::size_t max_order, Rng& rng) {
    if (min_order < 1 || min_order > max_order) {
        throw std::invalid_argument("random_rational: need 1 <= min_order <= max_order");
    }
    std::uniform_int_distribution<std::size_t> order_dist(min_order, max_order);
    const std::size_t n = order_dist(rng);
    TransferFunction tf;
    tf.denominator = detail::random_stable_monic(n, rng);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    tf.numerator.assign(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) tf.numerator[k] = coef(rng);
    std::uniform_real_distribution<double> target(0.1, 1.0);
    const double goal = target(rng);
    const double norm = detail::impulse_norm(tf);
    if (norm > 0.0)
        for (double& c : tf.numerator) c *= goal / norm;
    return tf;
}

inline TransferFunction random_rational(std::size_t min_order, std::size_t max_order, std::uint64_t seed) {
    Rng rng(seed);
    return random_rational(min_order, max_order, rng);
}

// Monic, stable and stably invertible noise filter H = C/D.
// FIR flavour: D = 1, C of degree `fir_taps - 1`. Rational flavour: C, D of random order.
inline TransferFunction random_noise_fir(std::size_t length, Rng& rng) {
    TransferFunction tf;
    tf.numerator = detail::random_stable_monic(length - 1, rng);
    tf.denominator = {1.0};
    return tf;
}

inline TransferFunction random_noise_rational(std::size_t min_order, std::size_t max_order, Rng& rng) {
    std::uniform_int_distribution<std::size_t> order_dist(min_order, max_order);
    const std::size_t n = order_dist(rng);
    TransferFunction tf;
    tf.numerator = detail::random_stable_monic(n, rng);
    tf.denominator = detail::random_stable_monic(n, rng);
    return tf;
}

// ---------------------------------------------------------------------------
// Interconnection

// State matrix of the loop w = G(q) w + u, stacking one controllable-canonical realization
// per edge.
inline Matrix closed_loop_matrix(const GroundTruthNetwork& net) {
    struct Block {
        std::size_t from, to, offset, order;
        const TransferFunction* tf;
    };
    std::vector<Block> blocks;
    std::size_t states = 0;
    for (std::size_t i = 0; i < net.J; ++i) {
        for (std::size_t j = 0; j < net.J; ++j) {
            const auto& g = net.G[i][j];
            if (!g || g->is_zero()) continue;
            if (!g->strictly_proper()) {
                throw std::invalid_argument("closed_loop_matrix: edge filter has direct feedthrough");
            }
            const std::size_t n = g->order();
            blocks.push_back({j, i, states, n, &*g});
            states += n;
        }
    }
    const auto S = static_cast<Eigen::Index>(states);
    Matrix Acl = Matrix::Zero(S, S);
    for (const auto& b : blocks) {
        const auto off = static_cast<Eigen::Index>(b.offset);
        const auto& den = b.tf->denominator;
        for (std::size_t k = 1; k <= b.order; ++k) {
            if (k < den.size()) Acl(off, off + static_cast<Eigen::Index>(k) - 1) = -den[k] / den[0];
            if (k >= 2) Acl(off + static_cast<Eigen::Index>(k) - 1, off + static_cast<Eigen::Index>(k) - 2) = 1.0;
        }
        // Input of this block is w_from = sum of outputs of blocks feeding node `from`.
        for (const auto& feeder : blocks) {
            if (feeder.to != b.from) continue;
            const auto foff = static_cast<Eigen::Index>(feeder.offset);
            const auto& num = feeder.tf->numerator;
            for (std::size_t k = 1; k <= feeder.order; ++k)
                if (k < num.size()) Acl(off, foff + static_cast<Eigen::Index>(k) - 1) += num[k] / feeder.tf->denominator[0];
        }
    }
    return Acl;
}

inline double closed_loop_spectral_radius(const GroundTruthNetwork& net) {
    const Matrix Acl = closed_loop_matrix(net);
    if (Acl.size() == 0) return 0.0;
    return Acl.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool network_stable(const GroundTruthNetwork& net, double margin = 1e-6) {
    return closed_loop_spectral_radius(net) < 1.0 - margin;
}

namespace detail {

inline void filter_in_place(const TransferFunction& tf, const std::vector<double>& in, std::vector<double>& out) {
    const auto& b = tf.numerator;
    const auto& a = tf.denominator;
    out.assign(in.size(), 0.0);
    for (std::size_t t = 0; t < in.size(); ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < b.size() && k <= t; ++k) acc += b[k] * in[t - k];
        for (std::size_t k = 1; k < a.size() && k <= t; ++k) acc -= a[k] * out[t - k];
        out[t] = acc / a[0];
    }
}

}  // namespace detail

// Noise-driven simulation of w = G(q) w + H(q) e from zero initial conditions.
// Discards `burn_in` samples and returns the following T.
inline TimeSeries simulate(const GroundTruthNetwork& net, std::size_t T, std::size_t burn_in, std::uint64_t seed) {
    if (T < 1) throw std::invalid_argument("simulate: T must be >= 1");
    if (!network_stable(net)) throw std::invalid_argument("simulate: network is not stable");
    const std::size_t J = net.J;
    const std::size_t L = T + burn_in;

    Rng rng(seed);
    std::normal_distribution<double> standard(0.0, 1.0);
    std::vector<std::vector<double>> v(J);
    for (std::size_t i = 0; i < J; ++i) {
        std::vector<double> e(L);
        const double sd = std::sqrt(net.sigma2[i]);
        for (auto& x : e) x = sd * standard(rng);
        detail::filter_in_place(net.H[i], e, v[i]);
    }

    struct Edge {
        std::size_t from, to;
        const TransferFunction* tf;
        std::vector<double> out;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            if (net.G[i][j] && !net.G[i][j]->is_zero()) edges.push_back({j, i, &*net.G[i][j], std::vector<double>(L, 0.0)});

    std::vector<std::vector<double>> w(J, std::vector<double>(L, 0.0));
    constexpr double overflow_limit = 1e9;
    for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t i = 0; i < J; ++i) w[i][t] = v[i][t];
        for (auto& e : edges) {
            const auto& b = e.tf->numerator;
            const auto& a = e.tf->denominator;
            const auto& src = w[e.from];
            double acc = 0.0;
            for (std::size_t k = 1; k < b.size() && k <= t; ++k) acc += b[k] * src[t - k];
            for (std::size_t k = 1; k < a.size() && k <= t; ++k) acc -= a[k] * e.out[t - k];
            e.out[t] = acc / a[0];
            w[e.to][t] += e.out[t];
        }
        for (std::size_t i = 0; i < J; ++i) {
            if (!(std::abs(w[i][t]) <= overflow_limit)) {
                throw std::runtime_error("simulate: signal magnitude exceeded 1e9, network is unstable");
            }
        }
    }

    Matrix data(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(T));
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t t = 0; t < T; ++t)
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = w[i][burn_in + t];
    return TimeSeries(std::move(data));
}

// Ground-truth one-step predictor: block (i, j) holds delays 1..K of G_ij/H_i, block (i, i)
// holds delays 1..K of 1 - 1/H_i.
inline std::vector<Vector> true_predictor_taps(const GroundTruthNetwork& net, std::size_t K) {
    if (K < 1) throw std::invalid_argument("true_predictor_taps: K must be >= 1");
    const std::size_t J = net.J;
    std::vector<Vector> thetas(J, Vector::Zero(static_cast<Eigen::Index>(J * K)));
    for (std::size_t i = 0; i < J; ++i) {
        const auto& H = net.H[i];
        if (H.numerator.empty() || H.numerator[0] != 1.0 || H.denominator[0] != 1.0) {
            throw std::invalid_argument("true_predictor_taps: noise filter of node " + std::to_string(i) +
                                        " is not monic");
        }
        if (max_root_modulus(H.numerator) >= 1.0) {
            throw std::invalid_argument("true_predictor_taps: noise filter of node " + std::to_string(i) +
                                        " is not stably invertible");
        }
        // 1 - D/C = (C - D)/C
        std::vector<double> diff(std::max(H.numerator.size(), H.denominator.size()), 0.0);
        for (std::size_t k = 0; k < H.numerator.size(); ++k) diff[k] += H.numerator[k];
        for (std::size_t k = 0; k < H.denominator.size(); ++k) diff[k] -= H.denominator[k];
        const auto self = impulse_response(diff, H.numerator, K + 1);
        for (std::size_t k = 0; k < K; ++k) thetas[i](static_cast<Eigen::Index>(i * K + k)) = self[k + 1];

        for (std::size_t j = 0; j < J; ++j) {
            const auto& g = net.G[i][j];
            if (i == j || !g) continue;
            const auto h = impulse_response(poly_multiply(g->numerator, H.denominator),
                                            poly_multiply(g->denominator, H.numerator), K + 1);
            for (std::size_t k = 0; k < K; ++k) thetas[i](static_cast<Eigen::Index>(j * K + k)) = h[k + 1];
        }
    }
    return thetas;
}

// ---------------------------------------------------------------------------
// Network generation with stability rejection

struct NetworkSpec {
    std::size_t J = 8;
    std::size_t K = 3;
    double rho = 0.25;
    NetworkMode mode = NetworkMode::Fir;
    std::size_t min_order = 1;
    std::size_t max_order = 5;
    std::size_t filter_attempts = 100;
    std::size_t topology_attempts = 100;
};

inline GroundTruthNetwork generate_network(const NetworkSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> variance(0.0, 1.0);
    constexpr std::size_t noise_fir_length = 3;
    GroundTruthNetwork net;
    net.J = spec.J;
    net.mode = spec.mode;
    net.seed = seed;
    for (std::size_t topo = 0; topo < spec.topology_attempts; ++topo) {
        net.adjacency = random_topology(spec.J, spec.rho, rng);
        for (std::size_t attempt = 0; attempt < spec.filter_attempts; ++attempt) {
            net.G.assign(spec.J, std::vector<std::optional<TransferFunction>>(spec.J));
            net.H.assign(spec.J, TransferFunction{{1.0}, {1.0}});
            net.sigma2.assign(spec.J, 0.0);
            for (std::size_t i = 0; i < spec.J; ++i) {
                for (std::size_t j = 0; j < spec.J; ++j) {
                    if (!net.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) continue;
                    net.G[i][j] = spec.mode == NetworkMode::Rational
                                      ? random_rational(spec.min_order, spec.max_order, rng)
                                      : random_fir(spec.K, rng);
                }
            }
            for (std::size_t i = 0; i < spec.J; ++i) {
                if (spec.mode == NetworkMode::FirNoise) net.H[i] = random_noise_fir(noise_fir_length, rng);
                if (spec.mode == NetworkMode::Rational)
                    net.H[i] = random_noise_rational(spec.min_order, spec.max_order, rng);
                net.sigma2[i] = variance(rng);
            }
            if (network_stable(net)) return net;
        }
    }
    throw std::runtime_error("generate_network: no stable realization after " +
                             std::to_string(spec.topology_attempts) + " topologies");
}

}  // namespace netspice
