#include "translqr/mode_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "translqr/io_util.hpp"
#include "translqr/linalg.hpp"

namespace translqr {

namespace {

constexpr long long kMaxSubsets = 1000000;

bool mode_less(const Mode& a, const Mode& b) {
    if (a.real() != b.real()) {
        return a.real() < b.real();
    }
    return a.imag() < b.imag();
}

bool lexicographic_less(const std::vector<Mode>& a, const std::vector<Mode>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), mode_less);
}

long long binomial(int k, int n) {
    if (n < 0 || n > k) {
        return 0;
    }
    long long out = 1;
    for (int i = 1; i <= n; ++i) {
        out = out * (k - n + i) / i;
        if (out > 100 * kMaxSubsets) {
            return out; // enough to trip the guard, avoid overflow
        }
    }
    return out;
}

} // namespace

bool is_conjugate_closed(const std::vector<Mode>& modes, double tol) {
    std::vector<bool> used(modes.size(), false);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (used[i] || std::abs(modes[i].imag()) <= tol) {
            continue;
        }
        bool paired = false;
        for (std::size_t j = i + 1; j < modes.size(); ++j) {
            if (!used[j] && std::abs(modes[j] - std::conj(modes[i])) <= tol * (1.0 + std::abs(modes[i]))) {
                used[i] = used[j] = true;
                paired = true;
                break;
            }
        }
        if (!paired) {
            return false;
        }
    }
    return true;
}

std::vector<Mode> sorted_modes(std::vector<Mode> modes) {
    std::sort(modes.begin(), modes.end(), mode_less);
    return modes;
}

ModeSet modes_from_char_poly(const CharPoly& poly) {
    const int n = poly.order();
    if (n < 1) {
        throw DimensionError("modes_from_char_poly: empty polynomial");
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        companion(i, i - 1) = 1.0;
    }
    companion.col(n - 1) = -poly.coeffs;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion);
    ModeSet set;
    set.modes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        set.modes.push_back(es.eigenvalues()(i));
    }
    set.modes = sorted_modes(std::move(set.modes));
    return set;
}

CharPoly char_poly_from_modes(const ModeSet& modes) {
    const int n = modes.size();
    if (n < 1) {
        throw DimensionError("char_poly_from_modes: empty mode set");
    }
    if (!is_conjugate_closed(modes.modes)) {
        throw ConjugacyError("char_poly_from_modes: mode set is not closed under conjugation");
    }
    // Incremental monic expansion; coeffs[i] multiplies lambda^i.
    std::vector<Mode> c{1.0};
    for (const Mode& sigma : modes.modes) {
        std::vector<Mode> next(c.size() + 1, Mode(0.0, 0.0));
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] -= sigma * c[i];
        }
        c = std::move(next);
    }
    CharPoly poly;
    poly.coeffs.resize(n);
    for (int i = 0; i < n; ++i) {
        if (std::abs(c[static_cast<std::size_t>(i)].imag()) >
            1e-9 * (1.0 + std::abs(c[static_cast<std::size_t>(i)]))) {
            throw ConjugacyError("char_poly_from_modes: expansion left an imaginary residue");
        }
        poly.coeffs(i) = c[static_cast<std::size_t>(i)].real();
    }
    return poly;
}

ModeDictionary build_dictionary(const std::vector<ImpulseTrajectory>& sources, int n,
                                double dedup_tol) {
    if (sources.empty()) {
        throw DimensionError("build_dictionary: at least one source required");
    }
    ModeDictionary dict;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        if (sources[s].length() < 2 * n) {
            throw DataLengthError("build_dictionary: source " + std::to_string(s + 1) +
                                  " has length " + std::to_string(sources[s].length()) +
                                  ", needs 2n = " + std::to_string(2 * n));
        }
        const ModeSet modes = modes_from_char_poly(estimate_char_poly(sources[s], n));
        for (const Mode& mode : modes.modes) {
            bool duplicate = false;
            for (const Mode& existing : dict.entries) {
                if (std::abs(mode - existing) <= dedup_tol * std::max(1.0, std::abs(existing))) {
                    duplicate = true;
                    break;
                }
            }
            if (!duplicate) {
                dict.entries.push_back(mode);
                dict.provenance.push_back(static_cast<int>(s));
            }
        }
    }
    // Canonical order, provenance permuted alongside.
    std::vector<std::size_t> idx(dict.entries.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return mode_less(dict.entries[a], dict.entries[b]);
    });
    ModeDictionary out;
    for (std::size_t i : idx) {
        out.entries.push_back(dict.entries[i]);
        out.provenance.push_back(dict.provenance[i]);
    }
    return out;
}

double consistency_residual(const CharPoly& poly, const ImpulseTrajectory& target_head) {
    const int n = poly.order();
    if (target_head.length() < n + 1) {
        throw DataLengthError("consistency_residual: needs M(1:" + std::to_string(n + 1) +
                              "), trajectory has length " + std::to_string(target_head.length()));
    }
    Eigen::MatrixXd acc = target_head.at(n + 1);
    for (int i = 1; i <= n; ++i) {
        acc += poly.coeffs(i - 1) * target_head.at(i);
    }
    return acc.norm();
}

ModeSelection select_modes(const ModeDictionary& dictionary,
                           const ImpulseTrajectory& target_head, int n) {
    const int k = dictionary.size();
    if (k < n) {
        throw DictionaryTooSmallError("select_modes: dictionary holds " + std::to_string(k) +
                                      " modes, need at least n = " + std::to_string(n));
    }
    if (target_head.length() < n + 1) {
        throw DataLengthError("select_modes: target head must be at least n+1 long");
    }
    const long long total = binomial(k, n);
    if (total > kMaxSubsets) {
        throw Error("select_modes: C(" + std::to_string(k) + "," + std::to_string(n) + ") = " +
                    std::to_string(total) + " subsets exceeds the 1e6 budget; prune the sources");
    }

    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        idx[static_cast<std::size_t>(i)] = i;
    }
    bool found = false;
    ModeSelection best;
    long long scored = 0;
    while (true) {
        std::vector<Mode> subset;
        subset.reserve(static_cast<std::size_t>(n));
        for (int i : idx) {
            subset.push_back(dictionary.entries[static_cast<std::size_t>(i)]);
        }
        if (is_conjugate_closed(subset)) {
            ModeSet candidate{sorted_modes(std::move(subset))};
            const CharPoly poly = char_poly_from_modes(candidate);
            const double z = consistency_residual(poly, target_head);
            ++scored;
            const bool better =
                !found || z < best.score ||
                (z == best.score && lexicographic_less(candidate.modes, best.modes.modes));
            if (better) {
                best.modes = std::move(candidate);
                best.poly = poly;
                best.score = z;
                found = true;
            }
        }
        // next combination in lexicographic index order
        int pos = n - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == k - n + pos) {
            --pos;
        }
        if (pos < 0) {
            break;
        }
        ++idx[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < n; ++i) {
            idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
        }
    }
    if (!found) {
        throw ConjugacyError("select_modes: no conjugate-closed subset of size n exists");
    }
    best.subsets_scored = scored;
    return best;
}

Eigen::MatrixXcd mode_power_row(const std::vector<Mode>& modes, int t, int l, int m) {
    const int n = static_cast<int>(modes.size());
    Eigen::RowVectorXcd powers(n);
    for (int i = 0; i < n; ++i) {
        powers(i) = std::pow(modes[static_cast<std::size_t>(i)], t);
    }
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(l * m, static_cast<Eigen::Index>(l) * m * n);
    for (int d = 0; d < l * m; ++d) {
        out.block(d, static_cast<Eigen::Index>(d) * n, 1, n) = powers;
    }
    return out;
}

Eigen::MatrixXcd mode_power_stack(const std::vector<Mode>& modes, int T0, int l, int m) {
    const int n = static_cast<int>(modes.size());
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(T0) * l * m, static_cast<Eigen::Index>(l) * m * n);
    for (int t = 1; t <= T0; ++t) {
        out.middleRows(static_cast<Eigen::Index>(t - 1) * l * m, l * m) =
            mode_power_row(modes, t, l, m);
    }
    return out;
}

ModeWeights solve_mode_weights(const ModeSet& modes, const ImpulseTrajectory& target_head, int T0) {
    const int n = modes.size();
    if (T0 < n) {
        throw SampleComplexityError("solve_mode_weights: T0 = " + std::to_string(T0) +
                                    " violates the bound T0 >= n = " + std::to_string(n) +
                                    " (reconstruction needs n+1 target samples)");
    }
    if (target_head.length() < T0 + 1) {
        throw DataLengthError("solve_mode_weights: needs M(1:" + std::to_string(T0 + 1) +
                              "), trajectory has length " + std::to_string(target_head.length()));
    }
    const int l = target_head.output_dim(), m = target_head.input_dim();

    Eigen::MatrixXcd rhs(static_cast<Eigen::Index>(T0) * l * m, m);
    for (int t = 2; t <= T0 + 1; ++t) {
        rhs.middleRows(static_cast<Eigen::Index>(t - 2) * l * m, l * m) =
            blkdiag_columns(target_head.at(t)).cast<Mode>();
    }
    const Eigen::MatrixXcd H = mode_power_stack(modes.modes, T0, l, m);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > linalg::kRankRelTol * sv(0)) {
            ++rank;
        }
    }
    if (rank < static_cast<Eigen::Index>(l) * m * n) {
        throw RankError("solve_mode_weights: mode basis is rank deficient "
                        "(repeated or zero modes)");
    }

    ModeWeights weights;
    weights.l = l;
    weights.m = m;
    weights.W = svd.solve(rhs);
    weights.fit_residual = (H * weights.W - rhs).norm();
    return weights;
}

Eigen::MatrixXd reconstruct_markov(const ModeSet& modes, const ModeWeights& weights, int T) {
    if (T < 1) {
        throw DimensionError("reconstruct_markov: T must be >= 1");
    }
    const int l = weights.l, m = weights.m;
    const Eigen::MatrixXcd diag = mode_power_row(modes.modes, T - 1, l, m) * weights.W; // lm x m
    // Re-assemble the block-diagonal columns: [I_l ... I_l] * diag.
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(l, m);
    for (int i = 0; i < m; ++i) {
        M.col(i) = diag.block(static_cast<Eigen::Index>(i) * l, i, l, 1);
    }
    const double imag_norm = M.imag().norm();
    if (imag_norm > 1e-6 * (1.0 + M.norm())) {
        throw ConjugacyError("reconstruct_markov: imaginary residue " + std::to_string(imag_norm) +
                             " exceeds tolerance; mode set is not conjugate consistent");
    }
    return M.real();
}

ImpulseTrajectory reconstruct_markov_range(const ModeSet& modes, const ModeWeights& weights, int T) {
    std::vector<Eigen::MatrixXd> entries;
    entries.reserve(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        entries.push_back(reconstruct_markov(modes, weights, t));
    }
    return ImpulseTrajectory(std::move(entries));
}

std::pair<OutputFeedbackGain, TransferReport>
transfer_pipeline(const std::vector<ImpulseTrajectory>& sources,
                  const ImpulseTrajectory& target_head, int n, const CostSpec& cost,
                  int horizon) {
    if (horizon < n + 1) {
        throw DimensionError("transfer_pipeline: horizon must exceed n");
    }
    if (target_head.length() < n + 1) {
        throw SampleComplexityError("transfer_pipeline: target head has " +
                                    std::to_string(target_head.length()) +
                                    " samples, the transfer bound requires n+1 = " +
                                    std::to_string(n + 1));
    }

    TransferReport report;
    report.dictionary = build_dictionary(sources, n);
    ModeSelection selection = select_modes(report.dictionary, target_head, n);

    const int T0 = target_head.length() - 1; // use every available sample
    report.weights = solve_mode_weights(selection.modes, target_head, T0);
    report.selected_modes = selection.modes;
    report.selected_poly = selection.poly;
    report.Z = selection.score;
    report.fit_residual = report.weights.fit_residual;
    report.target_samples = target_head.length();
    report.source_samples = sources.front().length();
    report.horizon = horizon;

    const ImpulseTrajectory reconstructed =
        reconstruct_markov_range(selection.modes, report.weights, horizon + n);
    CostSpec c = cost;
    c.horizon = horizon;
    OutputFeedbackGain gain = data_driven_gain(reconstructed, c, 0, n);
    return {std::move(gain), std::move(report)};
}

void write_dictionary_csv(const ModeDictionary& dictionary, const std::filesystem::path& path) {
    std::string out = "re,im,source_index\n";
    char buf[96];
    for (int i = 0; i < dictionary.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n",
                      dictionary.entries[static_cast<std::size_t>(i)].real(),
                      dictionary.entries[static_cast<std::size_t>(i)].imag(),
                      dictionary.provenance[static_cast<std::size_t>(i)]);
        out += buf;
    }
    io::write_file_atomic(path, out);
}

ModeDictionary read_dictionary_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dictionary file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || io::split_csv_line(line) !=
        std::vector<std::string>{"re", "im", "source_index"}) {
        throw IoError("bad dictionary CSV header in " + path.string());
    }
    ModeDictionary dict;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto tokens = io::split_csv_line(line);
        if (tokens.size() != 3) {
            throw IoError("malformed dictionary row in " + path.string());
        }
        dict.entries.emplace_back(io::parse_double(tokens[0], path), io::parse_double(tokens[1], path));
        dict.provenance.push_back(std::stoi(tokens[2]));
    }
    return dict;
}

} // namespace translqr
