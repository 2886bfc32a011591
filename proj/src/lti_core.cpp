#include "translqr/lti_core.hpp"

#include <string>

#include "translqr/linalg.hpp"

namespace translqr {

StateSpaceModel StateSpaceModel::create(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C) {
    if (A.rows() == 0 || A.rows() != A.cols()) {
        throw DimensionError("StateSpaceModel: A must be square and non-empty");
    }
    if (B.rows() != A.rows() || B.cols() < 1) {
        throw DimensionError("StateSpaceModel: B must have n rows");
    }
    if (C.cols() != A.rows() || C.rows() < 1) {
        throw DimensionError("StateSpaceModel: C must have n columns");
    }
    return StateSpaceModel{std::move(A), std::move(B), std::move(C)};
}

Eigen::MatrixXd controllability_matrix(const StateSpaceModel& model) {
    const int n = model.n(), m = model.m();
    Eigen::MatrixXd R(n, n * m);
    R.leftCols(m) = model.B;
    for (int i = 1; i < n; ++i) {
        R.middleCols(i * m, m) = model.A * R.middleCols((i - 1) * m, m);
    }
    return R;
}

Eigen::MatrixXd observability_matrix(const StateSpaceModel& model) {
    const int n = model.n(), l = model.l();
    Eigen::MatrixXd O(n * l, n);
    O.topRows(l) = model.C;
    for (int i = 1; i < n; ++i) {
        O.middleRows(i * l, l) = O.middleRows((i - 1) * l, l) * model.A;
    }
    return O;
}

bool is_validated(const StateSpaceModel& model) {
    const int n = model.n();
    return linalg::rank(controllability_matrix(model)) == n &&
           linalg::rank(observability_matrix(model)) == n;
}

void validate(const StateSpaceModel& model) {
    const int n = model.n();
    const auto rc = linalg::rank(controllability_matrix(model));
    if (rc != n) {
        throw ValidationError("controllability matrix has rank " + std::to_string(rc) +
                              " < n = " + std::to_string(n));
    }
    const auto ro = linalg::rank(observability_matrix(model));
    if (ro != n) {
        throw ValidationError("observability matrix has rank " + std::to_string(ro) +
                              " < n = " + std::to_string(n));
    }
}

void check_weights(const CostSpec& cost) {
    if (!linalg::is_symmetric(cost.Q)) {
        throw WeightError("Q must be symmetric");
    }
    if (!linalg::is_symmetric(cost.R)) {
        throw WeightError("R must be symmetric");
    }
    const double q_min = linalg::min_symmetric_eigenvalue(cost.Q);
    if (q_min < -1e-9 * (1.0 + cost.Q.norm())) {
        throw WeightError("Q must be positive semidefinite (min eigenvalue " +
                          std::to_string(q_min) + ")");
    }
    const double r_min = linalg::min_symmetric_eigenvalue(cost.R);
    if (r_min <= 1e-12 * (1.0 + cost.R.norm())) {
        throw WeightError("R must be positive definite (min eigenvalue " +
                          std::to_string(r_min) + ")");
    }
}

const Eigen::MatrixXd& RiccatiSolution::P(int t) const {
    const int T = horizon();
    if (t < 0 || t > T) {
        throw DimensionError("RiccatiSolution::P: t out of range");
    }
    return P_seq[static_cast<std::size_t>(T - t)];
}

const Eigen::MatrixXd& RiccatiSolution::K(int t) const {
    if (t < 0 || t >= horizon()) {
        throw DimensionError("RiccatiSolution::K: t out of range");
    }
    return K_seq[static_cast<std::size_t>(t)];
}

Trajectory simulate(const StateSpaceModel& model, const Eigen::VectorXd& x0,
                    const std::vector<Eigen::VectorXd>& inputs) {
    if (inputs.empty()) {
        throw DimensionError("simulate: at least one input required");
    }
    if (x0.size() != model.n()) {
        throw DimensionError("simulate: x0 must have length n");
    }
    Trajectory traj;
    traj.states.push_back(x0);
    traj.outputs.push_back(model.C * x0);
    for (const auto& u : inputs) {
        if (u.size() != model.m()) {
            throw DimensionError("simulate: input must have length m");
        }
        const Eigen::VectorXd x_next = model.A * traj.states.back() + model.B * u;
        traj.inputs.push_back(u);
        traj.states.push_back(x_next);
        traj.outputs.push_back(model.C * x_next);
    }
    return traj;
}

ImpulseTrajectory impulse_response(const StateSpaceModel& model, int T) {
    if (T < 1) {
        throw DimensionError("impulse_response: T must be >= 1");
    }
    std::vector<Eigen::MatrixXd> entries;
    entries.reserve(static_cast<std::size_t>(T));
    Eigen::MatrixXd P = model.B; // A^{t-1} B
    for (int t = 1; t <= T; ++t) {
        entries.push_back(model.C * P);
        P = model.A * P;
    }
    return ImpulseTrajectory(std::move(entries));
}

namespace {

// One backward step: K = (R + B'PB)^{-1} B'PA, P <- A'PA - A'PB K + C'QC.
struct RiccatiStep {
    Eigen::MatrixXd K;
    Eigen::MatrixXd P;
};

RiccatiStep riccati_step(const StateSpaceModel& model, const CostSpec& cost,
                         const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd BtP = model.B.transpose() * P;
    const Eigen::MatrixXd G = cost.R + BtP * model.B;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success) {
        throw NumericalError("solve_riccati: R + B'PB factorization failed");
    }
    RiccatiStep step;
    step.K = ldlt.solve(BtP * model.A);
    Eigen::MatrixXd Pn = model.A.transpose() * P * model.A -
                         (BtP * model.A).transpose() * step.K +
                         model.C.transpose() * cost.Q * model.C;
    step.P = 0.5 * (Pn + Pn.transpose()); // keep symmetric against drift
    return step;
}

} // namespace

RiccatiSolution solve_riccati(const StateSpaceModel& model, const CostSpec& cost,
                              double rtol, int max_iterations) {
    if (cost.Q.rows() != model.l() || cost.R.rows() != model.m()) {
        throw DimensionError("solve_riccati: Q must be l x l and R m x m");
    }
    check_weights(cost);

    RiccatiSolution sol;
    Eigen::MatrixXd P = model.C.transpose() * cost.Q * model.C; // terminal P_T

    if (cost.horizon.has_value()) {
        const int T = *cost.horizon;
        if (T < 1) {
            throw DimensionError("solve_riccati: horizon must be >= 1");
        }
        sol.P_seq.push_back(P);
        std::vector<Eigen::MatrixXd> gains; // K_{T-1} ... K_0
        for (int t = T - 1; t >= 0; --t) {
            auto step = riccati_step(model, cost, P);
            gains.push_back(std::move(step.K));
            P = std::move(step.P);
            sol.P_seq.push_back(P);
        }
        sol.K_seq.assign(gains.rbegin(), gains.rend());
        return sol;
    }

    for (int it = 0; it < max_iterations; ++it) {
        auto step = riccati_step(model, cost, P);
        const double delta = (step.P - P).norm();
        const double scale = P.norm();
        P = std::move(step.P);
        sol.iterations = it + 1;
        if (delta <= rtol * scale) {
            sol.P_star = P;
            sol.K_star = riccati_step(model, cost, P).K;
            return sol;
        }
    }
    throw ConvergenceError("solve_riccati: no fixed point within " +
                           std::to_string(max_iterations) + " iterations");
}

ModelBlockMatrices model_block_matrices(const StateSpaceModel& model) {
    const int n = model.n(), m = model.m();
    ModelBlockMatrices blocks;
    blocks.Fu.resize(n, n * m);
    for (int j = 0; j < n; ++j) {
        blocks.Fu.middleCols(j * m, m) = linalg::matrix_power(model.A, n - 1 - j) * model.B;
    }
    blocks.Obs = observability_matrix(model);
    if (linalg::rank(blocks.Obs) != n) {
        throw RankError("model_block_matrices: observability matrix is rank deficient");
    }
    blocks.ObsPinv = linalg::pseudo_inverse(blocks.Obs);
    return blocks;
}

OutputFeedbackGain output_feedback_gain(const StateSpaceModel& model,
                                        const RiccatiSolution& riccati,
                                        std::optional<int> t) {
    const int n = model.n(), m = model.m(), l = model.l();
    Eigen::MatrixXd K;
    if (t.has_value()) {
        K = riccati.K(*t);
    } else if (riccati.K_star.has_value()) {
        K = *riccati.K_star;
    } else {
        throw DimensionError("output_feedback_gain: no static gain in this solution");
    }

    const ModelBlockMatrices blocks = model_block_matrices(model);
    const Eigen::MatrixXd An = linalg::matrix_power(model.A, n);

    // Forced-response Toeplitz over the n-step window, built from the model.
    Eigen::MatrixXd Sh = Eigen::MatrixXd::Zero(n * l, n * m);
    Eigen::MatrixXd Ap = model.B; // A^{k} B
    for (int k = 1; k < n; ++k) {
        const Eigen::MatrixXd Mk = model.C * Ap; // M(k)
        for (int i = k; i < n; ++i) {
            Sh.block(i * l, (i - k) * m, l, m) = Mk;
        }
        Ap = model.A * Ap;
    }

    const Eigen::MatrixXd AnOp = An * blocks.ObsPinv;
    OutputFeedbackGain gain;
    gain.n = n;
    gain.l = l;
    gain.m = m;
    gain.gain.resize(m, n * (m + l));
    gain.gain << -K * (blocks.Fu - AnOp * Sh), -K * AnOp;
    gain.check_partition();
    return gain;
}

double evaluate_cost(const Trajectory& traj, const CostSpec& cost) {
    if (!cost.horizon.has_value()) {
        throw DimensionError("evaluate_cost: finite horizon required");
    }
    const int T = *cost.horizon;
    if (static_cast<int>(traj.outputs.size()) != T + 1 ||
        static_cast<int>(traj.inputs.size()) != T) {
        throw DimensionError("evaluate_cost: trajectory length must equal horizon T+1");
    }
    double J = traj.outputs[static_cast<std::size_t>(T)].dot(
        cost.Q * traj.outputs[static_cast<std::size_t>(T)]);
    for (int t = 0; t < T; ++t) {
        J += traj.outputs[static_cast<std::size_t>(t)].dot(cost.Q * traj.outputs[static_cast<std::size_t>(t)]);
        J += traj.inputs[static_cast<std::size_t>(t)].dot(cost.R * traj.inputs[static_cast<std::size_t>(t)]);
    }
    return J;
}

StateSpaceModel random_validated_model(std::mt19937_64& rng, int n, int m, int l,
                                       double rho_lo, double rho_hi) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> radius(rho_lo, rho_hi);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Eigen::MatrixXd A(n, n), B(n, m), C(l, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) B(i, j) = gauss(rng);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < n; ++j) C(i, j) = gauss(rng);
        const double rho = linalg::spectral_radius(A);
        if (rho < 1e-12) {
            continue;
        }
        A *= radius(rng) / rho;
        StateSpaceModel model = StateSpaceModel::create(std::move(A), std::move(B), std::move(C));
        if (is_validated(model)) {
            return model;
        }
    }
    throw ConvergenceError("random_validated_model: rejection sampling failed");
}

} // namespace translqr
