#pragma once

#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "translqr/errors.hpp"
#include "translqr/gain.hpp"
#include "translqr/markov_blocks.hpp"

namespace translqr {

// Discrete-time LTI system x(t+1) = A x(t) + B u(t), y(t) = C x(t).
struct StateSpaceModel {
    Eigen::MatrixXd A; // n x n
    Eigen::MatrixXd B; // n x m
    Eigen::MatrixXd C; // l x n

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int l() const { return static_cast<int>(C.rows()); }

    // Shape-checked constructor.
    static StateSpaceModel create(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C);
};

Eigen::MatrixXd controllability_matrix(const StateSpaceModel& model); // [B, AB, ..., A^{n-1}B]
Eigen::MatrixXd observability_matrix(const StateSpaceModel& model);   // [C; CA; ...; CA^{n-1}]

// True when both the controllability and observability matrices have rank n.
bool is_validated(const StateSpaceModel& model);
// Throws ValidationError naming the failing rank condition.
void validate(const StateSpaceModel& model);

// Quadratic cost weights and horizon; horizon == nullopt means infinite.
struct CostSpec {
    Eigen::MatrixXd Q; // l x l, symmetric PSD
    Eigen::MatrixXd R; // m x m, symmetric PD
    std::optional<int> horizon;
};

// Throws WeightError unless Q is symmetric PSD and R symmetric PD.
void check_weights(const CostSpec& cost);

struct Trajectory {
    std::vector<Eigen::VectorXd> states;  // x(0..T)
    std::vector<Eigen::VectorXd> inputs;  // u(0..T-1)
    std::vector<Eigen::VectorXd> outputs; // y(0..T)
};

// Backward Riccati recursion results.  P_seq is stored in generation order
// P_T, ..., P_0; use P(t)/K(t) for time-indexed access.
struct RiccatiSolution {
    std::vector<Eigen::MatrixXd> P_seq; // P_T ... P_0 (finite horizon)
    std::vector<Eigen::MatrixXd> K_seq; // K_0 ... K_{T-1} (finite horizon)
    std::optional<Eigen::MatrixXd> P_star;
    std::optional<Eigen::MatrixXd> K_star;
    int iterations = 0;

    int horizon() const { return static_cast<int>(K_seq.size()); }
    const Eigen::MatrixXd& P(int t) const;
    const Eigen::MatrixXd& K(int t) const;
};

// Noise-free rollout of the recursion from x0 under the given inputs.
Trajectory simulate(const StateSpaceModel& model, const Eigen::VectorXd& x0,
                    const std::vector<Eigen::VectorXd>& inputs);

// M(t) = C A^{t-1} B for t = 1..T.
ImpulseTrajectory impulse_response(const StateSpaceModel& model, int T);

// Finite horizon: exact backward recursion with terminal P_T = C'QC.
// Infinite horizon: fixed-point iteration of the same recursion until
// ||P_{k+1} - P_k||_F <= rtol ||P_k||_F.
RiccatiSolution solve_riccati(const StateSpaceModel& model, const CostSpec& cost,
                              double rtol = 1e-12, int max_iterations = 100000);

// Model-derived blocks for state reconstruction from an n-step window.
struct ModelBlockMatrices {
    Eigen::MatrixXd Fu;       // [A^{n-1}B ... AB B], n x nm
    Eigen::MatrixXd Obs;      // observability matrix, nl x n
    Eigen::MatrixXd ObsPinv;  // SVD pseudoinverse, n x nl
};

ModelBlockMatrices model_block_matrices(const StateSpaceModel& model); // RankError if Obs deficient

// Ground-truth output-feedback LQR gain: u(t) = gain [U_n(t); Y_n(t)] equals
// the state feedback u(t) = -K_t x(t) once n steps of history exist.
// Pass t = nullopt for the static (infinite-horizon) gain.
OutputFeedbackGain output_feedback_gain(const StateSpaceModel& model,
                                        const RiccatiSolution& riccati,
                                        std::optional<int> t);

// y(T)'Qy(T) + sum_{t<T} y(t)'Qy(t) + u(t)'Ru(t); requires a finite horizon
// equal to the trajectory length.
double evaluate_cost(const Trajectory& traj, const CostSpec& cost);

// Rejection sampler for test systems: Gaussian (A, B, C) with the spectral
// radius of A rescaled into [rho_lo, rho_hi], resampled until controllable
// and observable.  Unstable systems are allowed on purpose.
StateSpaceModel random_validated_model(std::mt19937_64& rng, int n, int m, int l,
                                       double rho_lo = 0.3, double rho_hi = 1.1);

} // namespace translqr
