#pragma once

// Shared fixtures and helpers for the test suites.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "translqr/lti_core.hpp"
#include "translqr/linalg.hpp"

namespace translqr::testsupport {

// Benchmark systems with one input and one output, order 3 (all entries are
// two-decimal values; their eigenvalues are therefore only approximately the
// round numbers quoted alongside them).
inline StateSpaceModel bench_source_1() {
    Eigen::MatrixXd A(3, 3), B(3, 1), C(1, 3);
    A << 0.41, 1.56, -1.59,
         0.06, 1.34, -1.25,
        -0.30, 1.24, -1.14;
    B << -0.47, -0.81, 1.00;
    C << 1.80, -2.75, 0.76;
    return StateSpaceModel::create(A, B, C);
}

inline StateSpaceModel bench_source_2() {
    Eigen::MatrixXd A(3, 3), B(3, 1), C(1, 3);
    A << 1.42, -2.91, 3.58,
         1.24, -3.57, 5.12,
         0.55, -2.37, 3.74;
    B << 1.17, 1.37, 0.75;
    C << -0.46, 0.03, 1.36;
    return StateSpaceModel::create(A, B, C);
}

inline StateSpaceModel bench_target() {
    Eigen::MatrixXd A(3, 3), B(3, 1), C(1, 3);
    A << 1.93, -0.87, -0.27,
         1.11, -0.07, -0.36,
        -1.17, 2.30, -0.89;
    B << -0.07, 0.32, -0.01;
    C << -0.04, -0.32, 2.33;
    return StateSpaceModel::create(A, B, C);
}

// Deterministic single-input single-output system with exactly the given real
// eigenvalues (A = V diag(modes) V^{-1} with a well-conditioned random V).
// When pass a closed-loop radius bound, B and C are resampled until the
// infinite-horizon loop under (Q, R) is at least that fast.
inline StateSpaceModel system_with_real_modes(const std::vector<double>& modes,
                                              std::uint64_t seed,
                                              const Eigen::MatrixXd* Q = nullptr,
                                              const Eigen::MatrixXd* R = nullptr,
                                              double max_closed_loop_radius = 1.0,
                                              double min_closed_loop_radius = 0.0) {
    const int n = static_cast<int>(modes.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        d(i) = modes[static_cast<std::size_t>(i)];
    }
    for (int attempt = 0; attempt < 20000; ++attempt) {
        Eigen::MatrixXd V(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) V(i, j) = gauss(rng);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
        if (svd.singularValues()(0) > 15.0 * svd.singularValues()(n - 1)) {
            continue;
        }
        const Eigen::MatrixXd A = V * d.asDiagonal() * V.inverse();
        Eigen::MatrixXd B(n, 1), C(1, n);
        for (int i = 0; i < n; ++i) {
            B(i, 0) = gauss(rng);
            C(0, i) = gauss(rng);
        }
        StateSpaceModel model = StateSpaceModel::create(A, B, C);
        if (!is_validated(model)) {
            continue;
        }
        if (Q != nullptr) {
            const RiccatiSolution sol = solve_riccati(model, CostSpec{*Q, *R, std::nullopt});
            const Eigen::MatrixXd A_cl = model.A - model.B * (*sol.K_star);
            const double rho = linalg::spectral_radius(A_cl);
            if (rho > max_closed_loop_radius || rho < min_closed_loop_radius) {
                continue;
            }
        }
        return model;
    }
    throw std::runtime_error("system_with_real_modes: no acceptable sample");
}

// Source/target trio whose mode sets are exactly {0.11,-0.52,1.02},
// {0.21,0.36,1.02} and {0.36,-0.52,1.02}: the target modes are contained in
// the pooled dictionary by construction, and the target's closed loop under
// Q=4, R=1 is fast enough for decay experiments.
struct ExactModeFixture {
    StateSpaceModel source1;
    StateSpaceModel source2;
    StateSpaceModel target;
    Eigen::MatrixXd Q{Eigen::MatrixXd::Constant(1, 1, 4.0)};
    Eigen::MatrixXd R{Eigen::MatrixXd::Constant(1, 1, 1.0)};
};

inline ExactModeFixture exact_mode_fixture() {
    ExactModeFixture f;
    f.source1 = system_with_real_modes({0.11, -0.52, 1.02}, 101);
    f.source2 = system_with_real_modes({0.21, 0.36, 1.02}, 202);
    // A moderately damped loop keeps the gain-error sweeps informative over
    // tens of horizons before they reach the float floor.
    f.target = system_with_real_modes({0.36, -0.52, 1.02}, 303, &f.Q, &f.R, 0.75, 0.55);
    return f;
}

// Symmetric PD cost weights for randomized tests.
inline Eigen::MatrixXd random_pd_matrix(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd G(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) G(i, j) = gauss(rng);
    return G.transpose() * G + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return v[a] < v[b];
        });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            r[order[i]] = static_cast<double>(i);
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mean = (static_cast<double>(x.size()) - 1.0) / 2.0;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (rx[i] - mean) * (ry[i] - mean);
        vx += (rx[i] - mean) * (rx[i] - mean);
        vy += (ry[i] - mean) * (ry[i] - mean);
    }
    return cov / std::sqrt(vx * vy);
}

} // namespace translqr::testsupport
