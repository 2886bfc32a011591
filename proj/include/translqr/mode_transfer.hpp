#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "translqr/data_driven_lqr.hpp"
#include "translqr/markov_blocks.hpp"

namespace translqr {

using Mode = std::complex<double>;

// Multiset of n system modes (eigenvalues of the state matrix).  A mode set
// describing a real system is closed under complex conjugation.
struct ModeSet {
    std::vector<Mode> modes;

    int size() const { return static_cast<int>(modes.size()); }
};

bool is_conjugate_closed(const std::vector<Mode>& modes, double tol = 1e-9);

// Sort by (real, imag); the canonical order used for deterministic output
// and tie-breaking.
std::vector<Mode> sorted_modes(std::vector<Mode> modes);

// Distinct modes pooled from several source systems, with the index of the
// first source that contributed each entry.
struct ModeDictionary {
    std::vector<Mode> entries;
    std::vector<int> provenance;

    int size() const { return static_cast<int>(entries.size()); }
};

// Roots of lambda^n + coeffs[n-1] lambda^{n-1} + ... + coeffs[0], via the
// companion matrix.
ModeSet modes_from_char_poly(const CharPoly& poly);

// Real monic expansion prod_i (lambda - sigma_i); throws ConjugacyError when
// the set is not conjugate closed.
CharPoly char_poly_from_modes(const ModeSet& modes);

// Pool the per-source mode estimates, deduplicated within dedup_tol
// (relative).  Each source trajectory must be at least 2n long.
ModeDictionary build_dictionary(const std::vector<ImpulseTrajectory>& sources, int n,
                                double dedup_tol = 1e-6);

// Norm of the Cayley-Hamilton consistency residual
// M(n+1) + sum_i coeffs[i-1] M(i) evaluated on the first n+1 target samples;
// zero exactly when the polynomial is consistent with the data.
double consistency_residual(const CharPoly& poly, const ImpulseTrajectory& target_head);

struct ModeSelection {
    ModeSet modes;
    CharPoly poly;
    double score = 0.0;          // consistency residual of the winner
    long long subsets_scored = 0;
};

// Enumerate every conjugate-closed n-subset of the dictionary and return the
// one whose consistency residual is smallest (ties broken on the sorted mode
// sequence, so the result does not depend on evaluation order).
ModeSelection select_modes(const ModeDictionary& dictionary,
                           const ImpulseTrajectory& target_head, int n);

// Row operator: block-diagonal with l*m copies of [p_1^t ... p_n^t].
Eigen::MatrixXcd mode_power_row(const std::vector<Mode>& modes, int t, int l, int m);
// Stack of mode_power_row for t = 1..T0.
Eigen::MatrixXcd mode_power_stack(const std::vector<Mode>& modes, int T0, int l, int m);

// Block-diagonal weights solved from the first T0+1 target samples so that
// blkdiag_columns(M(t)) = mode_power_row(modes, t-1) * W.
struct ModeWeights {
    Eigen::MatrixXcd W; // lmn x m
    double fit_residual = 0.0;
    int l = 0;
    int m = 0;
};

ModeWeights solve_mode_weights(const ModeSet& modes, const ImpulseTrajectory& target_head, int T0);

// Predicted Markov parameter M(T) = [I_l ... I_l] mode_power_row(modes, T-1) W,
// with the imaginary residue checked against the conjugacy guard.
Eigen::MatrixXd reconstruct_markov(const ModeSet& modes, const ModeWeights& weights, int T);

// Convenience: reconstructed trajectory M(1:T).
ImpulseTrajectory reconstruct_markov_range(const ModeSet& modes, const ModeWeights& weights, int T);

struct TransferReport {
    ModeDictionary dictionary;
    ModeSet selected_modes;
    CharPoly selected_poly;
    double Z = 0.0;             // consistency residual of the selected subset
    double fit_residual = 0.0;  // weight-solve residual
    ModeWeights weights;
    int target_samples = 0;     // length of the target head used
    int source_samples = 0;     // length of each source trajectory used
    int horizon = 0;
};

// Full chain: dictionary -> subset selection -> weight solve ->
// reconstruction of M(1:horizon+n) -> data-driven gain at t = 0.
std::pair<OutputFeedbackGain, TransferReport>
transfer_pipeline(const std::vector<ImpulseTrajectory>& sources,
                  const ImpulseTrajectory& target_head, int n, const CostSpec& cost,
                  int horizon);

// Dictionary exchange format: CSV with columns re,im,source_index.
void write_dictionary_csv(const ModeDictionary& dictionary, const std::filesystem::path& path);
ModeDictionary read_dictionary_csv(const std::filesystem::path& path);

} // namespace translqr
