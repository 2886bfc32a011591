#include "translqr/data_driven_lqr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "translqr/linalg.hpp"

namespace translqr {

HistoryWindow HistoryWindow::from_trajectory(const Trajectory& traj, int t, int n) {
    if (t < n || t > static_cast<int>(traj.inputs.size())) {
        throw DimensionError("HistoryWindow: need n steps of history before t");
    }
    const int m = static_cast<int>(traj.inputs.front().size());
    const int l = static_cast<int>(traj.outputs.front().size());
    HistoryWindow w;
    w.U.resize(n * m);
    w.Y.resize(n * l);
    for (int i = 0; i < n; ++i) {
        w.U.segment(i * m, m) = traj.inputs[static_cast<std::size_t>(t - n + i)];
        w.Y.segment(i * l, l) = traj.outputs[static_cast<std::size_t>(t - n + i)];
    }
    return w;
}

Eigen::MatrixXd PredictorBlocks::stacked() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(blocks.size()) * block_rows, block_cols);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        out.middleRows(static_cast<Eigen::Index>(i) * block_rows, block_rows) = blocks[i];
    }
    return out;
}

namespace {

// Hankel over one input column: row block i holds M^j(i+1 .. i+n).
Eigen::MatrixXd column_hankel(const ImpulseTrajectory& data, int n, int column,
                              Eigen::VectorXd* rhs) {
    const int l = data.output_dim();
    Eigen::MatrixXd H(n * l, n);
    if (rhs) {
        rhs->resize(n * l);
    }
    for (int i = 0; i < n; ++i) {
        for (int p = 0; p < n; ++p) {
            H.block(i * l, p, l, 1) = data.at(i + p + 1).col(column - 1);
        }
        if (rhs) {
            rhs->segment(i * l, l) = data.at(n + i + 1).col(column - 1);
        }
    }
    return H;
}

} // namespace

CharPoly estimate_char_poly(const ImpulseTrajectory& data, int n, int column) {
    if (n < 1) {
        throw DimensionError("estimate_char_poly: n must be >= 1");
    }
    if (column < 1 || column > data.input_dim()) {
        throw DimensionError("estimate_char_poly: column out of range");
    }
    if (data.length() < 2 * n) {
        throw DataLengthError("estimate_char_poly: needs M(1:" + std::to_string(2 * n) +
                              "), trajectory has length " + std::to_string(data.length()));
    }

    Eigen::VectorXd rhs;
    Eigen::MatrixXd H = column_hankel(data, n, column, &rhs);
    if (linalg::rank(H) < n) {
        // A single column of B can miss modes; stack every column instead.
        const int m = data.input_dim(), l = data.output_dim();
        Eigen::MatrixXd Hs(n * l * m, n);
        Eigen::VectorXd rs(n * l * m);
        for (int j = 1; j <= m; ++j) {
            Eigen::VectorXd rj;
            Hs.middleRows((j - 1) * n * l, n * l) = column_hankel(data, n, j, &rj);
            rs.segment((j - 1) * n * l, n * l) = rj;
        }
        if (linalg::rank(Hs) < n) {
            throw RankError("estimate_char_poly: data Hankel has rank < n "
                            "(non-minimal realization or wrong order)");
        }
        H = std::move(Hs);
        rhs = std::move(rs);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CharPoly poly;
    poly.coeffs = svd.solve(-rhs);
    return poly;
}

namespace {

// Shared forward recursion F_i = -sum_p coeffs[p] F_{i-n+p}, i >= 0, given
// seed blocks for i = -n..-1.
std::vector<Eigen::MatrixXd> extend_blocks(std::vector<Eigen::MatrixXd> seeds,
                                           const Eigen::VectorXd& coeffs, int count) {
    const int n = static_cast<int>(coeffs.size());
    std::vector<Eigen::MatrixXd> all = std::move(seeds); // index i+n
    for (int i = 0; i <= count; ++i) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(all.front().rows(), all.front().cols());
        for (int p = 0; p < n; ++p) {
            acc += coeffs(p) * all[static_cast<std::size_t>(i + p)];
        }
        all.push_back(-acc);
    }
    // Keep F_1..F_count.
    return {all.begin() + n + 1, all.end()};
}

} // namespace

PredictorBlocks predictor_blocks_single_output(const CharPoly& poly, int count, int n) {
    if (poly.order() != n || n < 1 || count < 1) {
        throw DimensionError("predictor_blocks_single_output: bad n/count");
    }
    std::vector<Eigen::MatrixXd> seeds;
    seeds.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        seeds.push_back(Eigen::MatrixXd::Identity(n, n).row(i)); // F_{i-n}
    }
    PredictorBlocks out;
    out.block_rows = 1;
    out.block_cols = n;
    out.blocks = extend_blocks(std::move(seeds), poly.coeffs, count);
    return out;
}

PredictorBlocks predictor_blocks_multi_output(const ImpulseTrajectory& data, const CharPoly& poly,
                                              int count, int n, int k) {
    const int l = data.output_dim(), m = data.input_dim();
    if (poly.order() != n || n < 1 || count < 1) {
        throw DimensionError("predictor_blocks_multi_output: bad n/count");
    }
    if (m * k < n) {
        throw RankError("predictor_blocks_multi_output: mk >= n required");
    }
    const Eigen::MatrixXd D = hankel(data, n, k, 1); // nl x mk
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    qr.setThreshold(linalg::kRankRelTol);
    if (qr.rank() < n) {
        throw RankError("predictor_blocks_multi_output: data matrix has rank " +
                        std::to_string(qr.rank()) + " < n");
    }
    // First n columns of the orthogonal factor span the observability range;
    // the induced projector equals Obs Obs^+ of the generating model.
    const Eigen::MatrixXd Obasis =
        qr.householderQ() * Eigen::MatrixXd::Identity(n * l, n);
    const Eigen::MatrixXd projector = Obasis * Obasis.transpose(); // nl x nl

    std::vector<Eigen::MatrixXd> seeds;
    seeds.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        seeds.push_back(projector.middleRows(i * l, l)); // F_{i-n}, l x nl
    }
    PredictorBlocks out;
    out.block_rows = l;
    out.block_cols = n * l;
    out.blocks = extend_blocks(std::move(seeds), poly.coeffs, count);
    return out;
}

OutputFeedbackGain data_driven_gain(const ImpulseTrajectory& data, const CostSpec& cost,
                                    int t, int n) {
    const int l = data.output_dim(), m = data.input_dim();
    if (!cost.horizon.has_value()) {
        throw DimensionError("data_driven_gain: finite horizon required");
    }
    if (cost.Q.rows() != l || cost.Q.cols() != l || cost.R.rows() != m || cost.R.cols() != m) {
        throw DimensionError("data_driven_gain: Q must be l x l and R m x m");
    }
    check_weights(cost);
    const int T = *cost.horizon;
    if (t < 0 || t > T - 1) {
        throw DimensionError("data_driven_gain: t must lie in [0, T-1]");
    }
    if (n < 1) {
        throw DimensionError("data_driven_gain: n must be >= 1");
    }

    // nu = number of future outputs entering the cost-to-go past step t.
    // Every stack below is built with nu row blocks so the products conform;
    // this is the one place the block counts are fixed.
    const int nu = T - t;
    const int k = (l > 1) ? (n + m - 1) / m + 2 : 0; // Hankel width, multi-output path
    const int needed = std::max({nu + n, 2 * n, (l > 1) ? k + n - 1 : 0});
    if (data.length() < needed) {
        throw DataLengthError("data_driven_gain: needs M(1:" + std::to_string(needed) +
                              ") for t=" + std::to_string(t) + ", T=" + std::to_string(T) +
                              ", trajectory has length " + std::to_string(data.length()));
    }

    const Eigen::MatrixXd Mst = markov_stack(data, T - nu + 2, T);         // nu blocks
    const Eigen::MatrixXd S = convolution_toeplitz(data, T - nu + 1, T);   // nu x nu blocks
    const Eigen::MatrixXd E = shifted_toeplitz(data, T - nu + 2, T, n);    // nu x n blocks
    const Eigen::MatrixXd Qb = linalg::block_diag_repeat(cost.Q, nu);
    const Eigen::MatrixXd Rb = linalg::block_diag_repeat(cost.R, nu);

    // Batch cost middle factor in factored form, valid for singular PSD Q:
    // Phi = Qb - Qb S (Rb + S'Qb S)^{-1} S'Qb  ( = (Qb^{-1} + S Rb^{-1} S')^{-1}
    // whenever Q is invertible).
    const Eigen::MatrixXd StQ = S.transpose() * Qb;
    Eigen::LLT<Eigen::MatrixXd> inner(Rb + StQ * S);
    if (inner.info() != Eigen::Success) {
        throw NumericalError("data_driven_gain: inner factorization failed");
    }
    const Eigen::MatrixXd Phi = Qb - StQ.transpose() * inner.solve(StQ);

    const CharPoly poly = estimate_char_poly(data, n);
    const PredictorBlocks fb = (l == 1)
        ? predictor_blocks_single_output(poly, nu, n)
        : predictor_blocks_multi_output(data, poly, nu, n, k);
    const Eigen::MatrixXd F = fb.stacked();

    const Eigen::MatrixXd Sh = convolution_toeplitz(data, T - n + 1, T); // n x n blocks

    Eigen::MatrixXd rhs(nu * l, n * (m + l));
    rhs << E - F * Sh, F;

    const Eigen::MatrixXd PhiM = Phi * Mst;
    Eigen::LDLT<Eigen::MatrixXd> bracket(cost.R + Mst.transpose() * PhiM);
    if (bracket.info() != Eigen::Success) {
        throw NumericalError("data_driven_gain: bracket factorization failed");
    }

    OutputFeedbackGain gain;
    gain.n = n;
    gain.l = l;
    gain.m = m;
    gain.gain = -bracket.solve(PhiM.transpose() * rhs);
    gain.check_partition();
    return gain;
}

Eigen::VectorXd control_step(const OutputFeedbackGain& gain, const HistoryWindow& window) {
    gain.check_partition();
    if (window.U.size() != static_cast<Eigen::Index>(gain.n) * gain.m ||
        window.Y.size() != static_cast<Eigen::Index>(gain.n) * gain.l) {
        throw DimensionError("control_step: window does not match gain partition");
    }
    Eigen::VectorXd z(window.U.size() + window.Y.size());
    z << window.U, window.Y;
    return gain.gain * z;
}

ConvergenceDiagnostics convergence_curve(const ImpulseTrajectory& data, const CostSpec& cost,
                                         int n, const std::vector<int>& t_range) {
    if (t_range.size() < 3) {
        throw DataLengthError("convergence_curve: need at least 3 horizons");
    }
    const int T_ref = data.length() - n;
    const int t_max = *std::max_element(t_range.begin(), t_range.end());
    if (t_max > T_ref) {
        throw DataLengthError("convergence_curve: largest horizon " + std::to_string(t_max) +
                              " exceeds the data limit " + std::to_string(T_ref));
    }

    CostSpec ref_cost = cost;
    ref_cost.horizon = T_ref;
    const OutputFeedbackGain K_ref = data_driven_gain(data, ref_cost, 0, n);
    const double scale = 1.0 + K_ref.gain.norm();
    const double floor = 1e-12 * scale;

    ConvergenceDiagnostics diag;
    for (int t : t_range) {
        CostSpec c = cost;
        c.horizon = t;
        const OutputFeedbackGain K = data_driven_gain(data, c, 0, n);
        diag.errors.emplace_back(t, (K.gain - K_ref.gain).norm());
    }

    std::vector<std::pair<int, double>> above;
    for (const auto& [t, e] : diag.errors) {
        if (e > floor) {
            above.emplace_back(t, e);
        }
    }
    if (above.size() < 3) {
        diag.floor_reached = true;
        return diag;
    }

    for (std::size_t i = 0; i + 1 < above.size(); ++i) {
        const int dt = above[i + 1].first - above[i].first;
        if (dt > 0) {
            diag.worst_ratio = std::max(
                diag.worst_ratio, std::pow(above[i + 1].second / above[i].second, 1.0 / dt));
        }
    }

    // log e = log c + t log mu, least squares over the above-floor points.
    const auto N = static_cast<Eigen::Index>(above.size());
    Eigen::MatrixXd X(N, 2);
    Eigen::VectorXd y(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = above[static_cast<std::size_t>(i)].first;
        y(i) = std::log(above[static_cast<std::size_t>(i)].second);
    }
    const Eigen::Vector2d beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    diag.c_hat = std::exp(beta(0));
    diag.mu_hat = std::exp(beta(1));
    const double ss_res = (y - X * beta).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    diag.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return diag;
}

Trajectory closed_loop_rollout(const StateSpaceModel& plant, const Eigen::VectorXd& x0, int T,
                               int n, const std::function<OutputFeedbackGain(int)>& gain_at) {
    if (T < 1 || n < 1) {
        throw DimensionError("closed_loop_rollout: T and n must be >= 1");
    }
    Trajectory traj;
    traj.states.push_back(x0);
    traj.outputs.push_back(plant.C * x0);
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(plant.m());
        if (t >= n) {
            u = control_step(gain_at(t), HistoryWindow::from_trajectory(traj, t, n));
        }
        traj.inputs.push_back(u);
        traj.states.push_back(plant.A * traj.states.back() + plant.B * u);
        traj.outputs.push_back(plant.C * traj.states.back());
    }
    return traj;
}

Trajectory state_feedback_rollout(const StateSpaceModel& plant, const Eigen::VectorXd& x0, int T,
                                  int n, const RiccatiSolution& riccati) {
    if (T < 1 || n < 1) {
        throw DimensionError("state_feedback_rollout: T and n must be >= 1");
    }
    Trajectory traj;
    traj.states.push_back(x0);
    traj.outputs.push_back(plant.C * x0);
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(plant.m());
        if (t >= n) {
            u = -riccati.K(t) * traj.states.back();
        }
        traj.inputs.push_back(u);
        traj.states.push_back(plant.A * traj.states.back() + plant.B * u);
        traj.outputs.push_back(plant.C * traj.states.back());
    }
    return traj;
}

} // namespace translqr
