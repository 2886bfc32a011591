#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "translqr/errors.hpp"

namespace translqr {

// Ordered impulse-response (Markov parameter) sequence M(1), ..., M(T).
// Each entry is an l x m matrix; M(t) of a state-space model equals
// C A^{t-1} B.  Indexing is 1-based throughout to keep the construction
// formulas below free of silent shifts.
class ImpulseTrajectory {
public:
    ImpulseTrajectory() = default;
    explicit ImpulseTrajectory(std::vector<Eigen::MatrixXd> entries);

    int length() const { return static_cast<int>(entries_.size()); }
    int output_dim() const { return l_; } // l
    int input_dim() const { return m_; }  // m

    // M(t), 1-indexed; throws DataLengthError past the end.
    const Eigen::MatrixXd& at(int t) const;

    const std::vector<Eigen::MatrixXd>& entries() const { return entries_; }

private:
    std::vector<Eigen::MatrixXd> entries_;
    int l_ = 0;
    int m_ = 0;
};

// Vertical stack [M(1); ...; M(T-t+2)].
Eigen::MatrixXd markov_stack(const ImpulseTrajectory& data, int t, int T);

// Square lower block-Toeplitz with zero diagonal blocks,
// (T-t+1) x (T-t+1) blocks of size l x m, block (i,j) = M(i-j) for i > j.
// Acting on a stacked input sequence it produces the forced response.
Eigen::MatrixXd convolution_toeplitz(const ImpulseTrajectory& data, int t, int T);

// Block (i,j) = M(n+1+i-j) for i = 1..T-t+2, j = 1..n: the response of the
// outputs after step t to the length-n input history window.
Eigen::MatrixXd shifted_toeplitz(const ImpulseTrajectory& data, int t, int T, int n);

// Block Hankel: block (i,j) = M(start+i+j-2), i = 1..rows, j = 1..cols.
Eigen::MatrixXd hankel(const ImpulseTrajectory& data, int rows, int cols, int start);

// lm x m block-diagonal arrangement of the m columns of a single Markov
// parameter: block i on the diagonal is the i-th column of M (an l-vector).
Eigen::MatrixXd blkdiag_columns(const Eigen::MatrixXd& M);

// The full set of data blocks entering the batch gain expression at step t.
struct DataBlocks {
    Eigen::MatrixXd M_stack; // (T-t+2) row blocks
    Eigen::MatrixXd E;       // (T-t+2) x n blocks
    Eigen::MatrixXd S;       // (T-t+1) x (T-t+1) blocks
    Eigen::MatrixXd Qb;      // T-t+1 diagonal blocks of Q
    Eigen::MatrixXd Rb;      // T-t+1 diagonal blocks of R

    static DataBlocks build(const ImpulseTrajectory& data, int t, int T, int n,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);
};

// CSV exchange format: header `t,entry_00,...,entry_{l-1}{m-1}` (row-major
// l x m flattening), one row per t starting at t = 1.
void write_impulse_csv(const ImpulseTrajectory& data, const std::filesystem::path& path);
ImpulseTrajectory read_impulse_csv(const std::filesystem::path& path);

} // namespace translqr
