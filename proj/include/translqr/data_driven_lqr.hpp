#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "translqr/gain.hpp"
#include "translqr/lti_core.hpp"
#include "translqr/markov_blocks.hpp"

namespace translqr {

// Coefficients of the characteristic polynomial of the (unknown) state
// matrix: lambda^n + coeffs[n-1] lambda^{n-1} + ... + coeffs[1] lambda + coeffs[0],
// i.e. coeffs[i] multiplies lambda^i (and A^i in the matrix identity
// A^n + sum_i coeffs[i] A^i = 0).
struct CharPoly {
    Eigen::VectorXd coeffs;

    int order() const { return static_cast<int>(coeffs.size()); }
};

// Stacked input/output history window, oldest first:
// U = [u(t-n); ...; u(t-1)], Y = [y(t-n); ...; y(t-1)].
struct HistoryWindow {
    Eigen::VectorXd U;
    Eigen::VectorXd Y;

    static HistoryWindow from_trajectory(const Trajectory& traj, int t, int n);
};

// Blocks F_1..F_count, each l x nl, predicting future outputs from the
// length-n output history; F_i equals C A^{n+i} O^+ of the generating model.
struct PredictorBlocks {
    std::vector<Eigen::MatrixXd> blocks;
    int block_rows = 0; // l
    int block_cols = 0; // n*l

    Eigen::MatrixXd stacked() const;
};

struct ConvergenceDiagnostics {
    double mu_hat = 0.0;     // fitted per-step decay rate
    double c_hat = 0.0;      // fitted constant
    double r_squared = 0.0;  // fit quality on log(error)
    double worst_ratio = 0.0;// largest per-step ratio between consecutive points
    bool floor_reached = false;
    std::vector<std::pair<int, double>> errors; // (horizon, ||gain - reference||_F)
};

// Least-squares estimate of the characteristic polynomial from 2n impulse
// samples, using input column `column` (1-indexed).  Falls back to stacking
// all columns when the single-column Hankel is rank deficient.
CharPoly estimate_char_poly(const ImpulseTrajectory& data, int n, int column = 1);

// Single-output path: seed blocks are rows of I_n, then the polynomial
// recursion extends them forward.
PredictorBlocks predictor_blocks_single_output(const CharPoly& poly, int count, int n);

// Multi-output path: an orthonormal basis of the observability range is
// recovered from a rank-revealing QR of the n x k block Hankel; the seed
// blocks are the row blocks of the induced projector.
PredictorBlocks predictor_blocks_multi_output(const ImpulseTrajectory& data, const CharPoly& poly,
                                              int count, int n, int k);

// Output-feedback LQR gain at step t of horizon cost.horizon, assembled
// purely from impulse-response data.  Matches output_feedback_gain of the
// generating model exactly (up to rounding) on noise-free data.
OutputFeedbackGain data_driven_gain(const ImpulseTrajectory& data, const CostSpec& cost,
                                    int t, int n);

// u(t) = gain [U; Y].
Eigen::VectorXd control_step(const OutputFeedbackGain& gain, const HistoryWindow& window);

// Error curve ||K^0(horizon=t) - K_ref||_F over t_range, with K_ref the gain
// at the largest horizon the data supports, plus a log-linear decay fit over
// the points above the numerical floor.
ConvergenceDiagnostics convergence_curve(const ImpulseTrajectory& data, const CostSpec& cost,
                                         int n, const std::vector<int>& t_range);

// Closed-loop rollout under output feedback.  The window needs n steps to
// fill, so u = 0 for t < n; afterwards u(t) = gain_at(t) [U_n(t); Y_n(t)].
Trajectory closed_loop_rollout(const StateSpaceModel& plant, const Eigen::VectorXd& x0, int T,
                               int n, const std::function<OutputFeedbackGain(int)>& gain_at);

// Reference rollout with the same zero warm-up but state feedback
// u(t) = -K_t x(t) for t >= n.
Trajectory state_feedback_rollout(const StateSpaceModel& plant, const Eigen::VectorXd& x0, int T,
                                  int n, const RiccatiSolution& riccati);

} // namespace translqr
