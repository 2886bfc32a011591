#pragma once

#include <Eigen/Dense>

#include "translqr/errors.hpp"

namespace translqr {

// m x (nm + nl) gain mapping a stacked length-n input/output history window
// to the next control input: u(t) = gain * [U_n(t); Y_n(t)].
struct OutputFeedbackGain {
    Eigen::MatrixXd gain;
    int n = 0; // window length (= system order)
    int l = 0; // output dimension
    int m = 0; // input dimension

    // Left block: acts on the stacked inputs u(t-n..t-1).
    Eigen::MatrixXd input_part() const { return gain.leftCols(static_cast<Eigen::Index>(n) * m); }
    // Right block: acts on the stacked outputs y(t-n..t-1).
    Eigen::MatrixXd output_part() const { return gain.rightCols(static_cast<Eigen::Index>(n) * l); }

    void check_partition() const {
        if (gain.cols() != static_cast<Eigen::Index>(n) * (l + m) || gain.rows() != m) {
            throw DimensionError("OutputFeedbackGain: gain must be m x (nm + nl)");
        }
    }
};

} // namespace translqr
