#include "translqr/markov_blocks.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "translqr/io_util.hpp"
#include "translqr/linalg.hpp"

namespace translqr {

ImpulseTrajectory::ImpulseTrajectory(std::vector<Eigen::MatrixXd> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty()) {
        throw DimensionError("ImpulseTrajectory: at least one entry required");
    }
    l_ = static_cast<int>(entries_.front().rows());
    m_ = static_cast<int>(entries_.front().cols());
    if (l_ < 1 || m_ < 1) {
        throw DimensionError("ImpulseTrajectory: entries must be non-empty matrices");
    }
    for (const auto& e : entries_) {
        if (e.rows() != l_ || e.cols() != m_) {
            throw DimensionError("ImpulseTrajectory: all entries must share dimensions");
        }
    }
}

const Eigen::MatrixXd& ImpulseTrajectory::at(int t) const {
    if (t < 1) {
        throw DataLengthError("ImpulseTrajectory: index t must be >= 1, got " + std::to_string(t));
    }
    if (t > length()) {
        throw DataLengthError("ImpulseTrajectory: need M(" + std::to_string(t) +
                              ") but only " + std::to_string(length()) + " samples are available");
    }
    return entries_[static_cast<std::size_t>(t - 1)];
}

namespace {

void require_length(const ImpulseTrajectory& data, int needed, const char* who) {
    if (data.length() < needed) {
        throw DataLengthError(std::string(who) + ": needs M(1:" + std::to_string(needed) +
                              ") but trajectory has length " + std::to_string(data.length()));
    }
}

} // namespace

Eigen::MatrixXd markov_stack(const ImpulseTrajectory& data, int t, int T) {
    const int count = T - t + 2;
    if (count < 1) {
        throw DimensionError("markov_stack: T - t + 2 must be >= 1");
    }
    require_length(data, count, "markov_stack");
    const int l = data.output_dim(), m = data.input_dim();
    Eigen::MatrixXd out(count * l, m);
    for (int i = 0; i < count; ++i) {
        out.middleRows(i * l, l) = data.at(i + 1);
    }
    return out;
}

Eigen::MatrixXd convolution_toeplitz(const ImpulseTrajectory& data, int t, int T) {
    const int count = T - t + 1;
    if (count < 1) {
        throw DimensionError("convolution_toeplitz: T - t + 1 must be >= 1");
    }
    require_length(data, count - 1, "convolution_toeplitz");
    const int l = data.output_dim(), m = data.input_dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(count * l, count * m);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < i; ++j) {
            out.block(i * l, j * m, l, m) = data.at(i - j);
        }
    }
    return out;
}

Eigen::MatrixXd shifted_toeplitz(const ImpulseTrajectory& data, int t, int T, int n) {
    const int rows = T - t + 2;
    if (rows < 1 || n < 1) {
        throw DimensionError("shifted_toeplitz: need T - t + 2 >= 1 and n >= 1");
    }
    require_length(data, n + rows, "shifted_toeplitz");
    const int l = data.output_dim(), m = data.input_dim();
    Eigen::MatrixXd out(rows * l, n * m);
    for (int i = 1; i <= rows; ++i) {
        for (int j = 1; j <= n; ++j) {
            out.block((i - 1) * l, (j - 1) * m, l, m) = data.at(n + 1 + i - j);
        }
    }
    return out;
}

Eigen::MatrixXd hankel(const ImpulseTrajectory& data, int rows, int cols, int start) {
    if (rows < 1 || cols < 1 || start < 1) {
        throw DimensionError("hankel: rows, cols and start must be >= 1");
    }
    require_length(data, start + rows + cols - 2, "hankel");
    const int l = data.output_dim(), m = data.input_dim();
    Eigen::MatrixXd out(rows * l, cols * m);
    for (int i = 1; i <= rows; ++i) {
        for (int j = 1; j <= cols; ++j) {
            out.block((i - 1) * l, (j - 1) * m, l, m) = data.at(start + i + j - 2);
        }
    }
    return out;
}

Eigen::MatrixXd blkdiag_columns(const Eigen::MatrixXd& M) {
    const int l = static_cast<int>(M.rows());
    const int m = static_cast<int>(M.cols());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(l * m, m);
    for (int i = 0; i < m; ++i) {
        out.block(i * l, i, l, 1) = M.col(i);
    }
    return out;
}

DataBlocks DataBlocks::build(const ImpulseTrajectory& data, int t, int T, int n,
                             const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
    DataBlocks b;
    b.M_stack = markov_stack(data, t, T);
    b.E = shifted_toeplitz(data, t, T, n);
    b.S = convolution_toeplitz(data, t, T);
    const int count = T - t + 1;
    b.Qb = linalg::block_diag_repeat(Q, count);
    b.Rb = linalg::block_diag_repeat(R, count);
    return b;
}

void write_impulse_csv(const ImpulseTrajectory& data, const std::filesystem::path& path) {
    const int l = data.output_dim(), m = data.input_dim();
    if (l > 10 || m > 10) {
        throw IoError("write_impulse_csv: entry_<row><col> header supports dims up to 10");
    }
    std::string out = "t";
    for (int r = 0; r < l; ++r) {
        for (int c = 0; c < m; ++c) {
            out += ",entry_" + std::to_string(r) + std::to_string(c);
        }
    }
    out += "\n";
    char buf[64];
    for (int t = 1; t <= data.length(); ++t) {
        out += std::to_string(t);
        const Eigen::MatrixXd& M = data.at(t);
        for (int r = 0; r < l; ++r) {
            for (int c = 0; c < m; ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g", M(r, c));
                out += ",";
                out += buf;
            }
        }
        out += "\n";
    }
    io::write_file_atomic(path, out);
}

ImpulseTrajectory read_impulse_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open impulse-response file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("empty impulse-response file: " + path.string());
    }
    const auto header = io::split_csv_line(line);
    if (header.size() < 2 || header[0] != "t") {
        throw IoError("bad impulse CSV header in " + path.string());
    }
    // Dims come from the last header token, entry_{l-1}{m-1}.
    const std::string& last = header.back();
    if (last.size() < 8 || last.substr(0, 6) != "entry_") {
        throw IoError("bad impulse CSV header token '" + last + "' in " + path.string());
    }
    const std::string digits = last.substr(6);
    if (digits.size() != 2 || !std::isdigit(digits[0]) || !std::isdigit(digits[1])) {
        throw IoError("bad impulse CSV header token '" + last + "' in " + path.string());
    }
    const int l = digits[0] - '0' + 1;
    const int m = digits[1] - '0' + 1;
    if (static_cast<int>(header.size()) != 1 + l * m) {
        throw IoError("impulse CSV header of " + path.string() + " does not match inferred dims");
    }

    std::vector<Eigen::MatrixXd> entries;
    int expected_t = 1;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto tokens = io::split_csv_line(line);
        if (static_cast<int>(tokens.size()) != 1 + l * m) {
            throw IoError("malformed row in " + path.string());
        }
        if (std::stoi(tokens[0]) != expected_t) {
            throw IoError("non-contiguous t index in " + path.string());
        }
        Eigen::MatrixXd M(l, m);
        for (int r = 0; r < l; ++r) {
            for (int c = 0; c < m; ++c) {
                M(r, c) = io::parse_double(tokens[1 + r * m + c], path);
            }
        }
        entries.push_back(std::move(M));
        ++expected_t;
    }
    if (entries.empty()) {
        throw IoError("impulse CSV has no data rows: " + path.string());
    }
    return ImpulseTrajectory(std::move(entries));
}

} // namespace translqr
