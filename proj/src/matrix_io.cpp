#include "midlab/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace midl {
namespace {

constexpr char kMagic[4] = {'M', 'I', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

bool ends_with_csv(const std::string& path) {
    if (path.size() < 4) return false;
    std::string ext = path.substr(path.size() - 4);
    return ext == ".csv" || ext == ".CSV";
}

// The container targets are little-endian; the byte swap below keeps the file
// format fixed if that ever changes.
template <typename T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        T out;
        auto* src = reinterpret_cast<const unsigned char*>(&v);
        auto* dst = reinterpret_cast<unsigned char*>(&out);
        for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
        return out;
    }
    return v;
}

template <typename T>
T from_le(T v) {
    return to_le(v);
}

void save_binary(const Matrix& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_matrix: cannot open " + path + " for writing");
    f.write(kMagic, 4);
    std::uint32_t ver = to_le(kVersion);
    std::uint64_t rows = to_le(static_cast<std::uint64_t>(m.rows()));
    std::uint64_t cols = to_le(static_cast<std::uint64_t>(m.cols()));
    f.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    if constexpr (std::endian::native == std::endian::little) {
        f.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
        for (double v : m.raw()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            bits = to_le(bits);
            f.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
        }
    }
    if (!f) throw IoError("save_matrix: write failed for " + path);
}

Matrix load_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_matrix: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("load_matrix: " + path + " is not a MIDL matrix file");
    std::uint32_t ver = 0;
    std::uint64_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&ver), sizeof(ver));
    f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!f) throw IoError("load_matrix: truncated header in " + path);
    ver = from_le(ver);
    rows = from_le(rows);
    cols = from_le(cols);
    if (ver != kVersion)
        throw IoError("load_matrix: unsupported version " + std::to_string(ver) + " in " + path);
    if (rows > (std::uint64_t(1) << 32) || cols > (std::uint64_t(1) << 32) ||
        (cols != 0 && rows * cols / cols != rows))
        throw IoError("load_matrix: implausible dimensions in " + path);
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    if constexpr (std::endian::native == std::endian::little) {
        f.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!f) throw IoError("load_matrix: truncated payload in " + path);
    } else {
        for (double& v : m.raw()) {
            std::uint64_t bits;
            f.read(reinterpret_cast<char*>(&bits), sizeof(bits));
            if (!f) throw IoError("load_matrix: truncated payload in " + path);
            bits = from_le(bits);
            std::memcpy(&v, &bits, sizeof(v));
        }
    }
    return m;
}

void save_csv(const Matrix& m, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("save_matrix: cannot open " + path + " for writing");
    f << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            f << m(i, j);
        }
        f << '\n';
    }
    if (!f) throw IoError("save_matrix: write failed for " + path);
}

bool parse_cell(const std::string& cell, double& out) {
    const auto b = cell.find_first_not_of(" \t\r");
    if (b == std::string::npos) return false;
    const auto e = cell.find_last_not_of(" \t\r");
    const std::string body = cell.substr(b, e - b + 1);
    try {
        std::size_t pos = 0;
        out = std::stod(body, &pos);
        return pos == body.size();
    } catch (const std::exception&) {
        return false;
    }
}

Matrix load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_matrix: cannot open " + path);
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    bool first_line = true;
    while (std::getline(f, line)) {
        if (line.empty() && f.eof()) break;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell, bad_cell;
        bool ok = true;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            if (!parse_cell(cell, v) && ok) {
                ok = false;
                bad_cell = cell;
            }
            row.push_back(v);
        }
        if (!ok) {
            // a single leading header row is allowed; bad cells anywhere else
            // are data corruption
            if (first_line) {
                first_line = false;
                continue;
            }
            throw IoError("load_matrix: bad numeric cell '" + bad_cell + "' in " + path);
        }
        first_line = false;
        if (rows == 0)
            cols = row.size();
        else if (row.size() != cols)
            throw IoError("load_matrix: ragged CSV row in " + path);
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    return Matrix(rows, cols, std::move(values));
}

} // namespace

void save_matrix(const Matrix& m, const std::string& path) {
    if (ends_with_csv(path))
        save_csv(m, path);
    else
        save_binary(m, path);
}

Matrix load_matrix(const std::string& path) {
    if (ends_with_csv(path)) return load_csv(path);
    return load_binary(path);
}

} // namespace midl
