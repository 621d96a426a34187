#pragma once
#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>
#include "errors.hpp"
#include "lasso.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "theory.hpp"
#include "tuned.hpp"

namespace varlasso {

using json = nlohmann::json;

// ---- CSV: one row per line, comma separated, row-major ------------------

inline void write_matrix_csv(std::ostream& os, const Matrix& m)
{
    os.precision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

inline Matrix read_matrix_csv(std::istream& is)
{
    std::vector<double> vals;
    Index rows = 0;
    Index cols = -1;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        Index c = 0;
        while (std::getline(ss, cell, ',')) {
            // from_chars, unlike stod, accepts subnormals
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            const char* first = cell.data() + (b == std::string::npos ? cell.size() : b);
            const char* last = cell.data() + (e == std::string::npos ? cell.size() : e + 1);
            if (first != last && *first == '+') ++first;
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (first == last || ptr != last || ec != std::errc())
                throw IoError("csv: bad number '" + cell + "' on row " + std::to_string(rows + 1));
            vals.push_back(v);
            ++c;
        }
        if (cols < 0) cols = c;
        if (c != cols)
            throw IoError("csv: row " + std::to_string(rows + 1) + " has " + std::to_string(c) + " fields, expected "
                          + std::to_string(cols));
        ++rows;
    }
    if (rows == 0) throw IoError("csv: no data");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = vals[static_cast<std::size_t>(i * cols + j)];
    return m;
}

/// A vector is a single column, or a single row.
inline Vector read_vector_csv(std::istream& is)
{
    const Matrix m = read_matrix_csv(is);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw IoError("csv: expected a single row or column, got " + std::to_string(m.rows()) + "x"
                  + std::to_string(m.cols()));
}

// ---- Binary: "VLAS1", u64 rows, u64 cols, f64 row-major, little-endian ----

inline constexpr std::array<char, 5> binary_magic{'V', 'L', 'A', 'S', '1'};

namespace detail {

template <class T>
void put_le(std::ostream& os, T v)
{
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    std::array<char, sizeof(T)> buf;
    std::memcpy(buf.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    os.write(buf.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
    std::array<char, sizeof(T)> buf;
    if (!is.read(buf.data(), sizeof(T))) throw IoError("binary: truncated input");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

} // namespace detail

inline void write_matrix_binary(std::ostream& os, const Matrix& m)
{
    os.write(binary_magic.data(), binary_magic.size());
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) detail::put_le<double>(os, m(i, j));
}

inline Matrix read_matrix_binary(std::istream& is)
{
    std::array<char, 5> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != binary_magic) throw IoError("binary: bad magic");
    const auto rows = detail::get_le<std::uint64_t>(is);
    const auto cols = detail::get_le<std::uint64_t>(is);
    if (rows > (1ULL << 31) || cols > (1ULL << 31)) throw IoError("binary: implausible dimensions");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = detail::get_le<double>(is);
    return m;
}

/// Reads a VLAS1 file or, failing the magic check, CSV.
inline Matrix load_matrix(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::array<char, 5> magic{};
    f.read(magic.data(), magic.size());
    const bool binary = f.gcount() == 5 && magic == binary_magic;
    f.clear();
    f.seekg(0);
    return binary ? read_matrix_binary(f) : read_matrix_csv(f);
}

inline void save_matrix(const std::string& path, const Matrix& m, bool binary)
{
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw IoError("cannot write " + path);
    if (binary) write_matrix_binary(f, m);
    else write_matrix_csv(f, m);
    if (!f) throw IoError("write failed: " + path);
}

// ---- JSON ----------------------------------------------------------------

inline json to_json_array(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const json& j)
{
    const auto vals = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

inline json signs_to_json(const SignVector& s)
{
    json out = json::array();
    for (Index i = 0; i < s.size(); ++i) out.push_back(static_cast<int>(s(i)));
    return out;
}

inline void to_json(json& j, const GroundTruth& t)
{
    j = json{{"support", t.support},     {"signs", signs_to_json(t.signs)}, {"beta", to_json_array(t.beta)},
             {"sigma", t.sigma},         {"level", t.level},                {"seed", t.seed},
             {"resampled", t.resampled}};
}

inline void from_json(const json& j, GroundTruth& t)
{
    t.support = j.at("support").get<IndexList>();
    t.signs = vector_from_json(j.at("signs"));
    t.beta = vector_from_json(j.at("beta"));
    t.sigma = j.at("sigma").get<double>();
    t.level = j.value("level", 0.0);
    t.seed = j.value("seed", Seed{0});
    t.resampled = j.value("resampled", std::size_t{0});
    t.validate();
}

inline void to_json(json& j, const Observation& o)
{
    j = json{{"y", to_json_array(o.y)}, {"noise", to_json_array(o.noise)}, {"seed", o.seed}};
}

inline void from_json(const json& j, Observation& o)
{
    o.y = vector_from_json(j.at("y"));
    o.noise = j.contains("noise") ? vector_from_json(j.at("noise")) : Vector();
    o.seed = j.value("seed", Seed{0});
}

inline void to_json(json& j, const OptimalityCertificate& c)
{
    j = json{{"lambda", c.lambda},
             {"max_active_violation", c.max_active_violation},
             {"max_inactive_correlation", c.max_inactive_correlation},
             {"tol", c.tol},
             {"strict", c.strict},
             {"valid", c.valid()}};
}

inline void to_json(json& j, const LassoSolution& s)
{
    j = json{{"lambda", s.lambda},         {"beta", to_json_array(s.beta)}, {"active_set", s.active_set},
             {"signs", signs_to_json(s.signs)}, {"objective", s.objective},  {"residual_sq", s.residual_sq()},
             {"l1_norm", s.l1_norm()},     {"sweeps", s.sweeps},            {"certificate", s.kkt}};
}

inline void to_json(json& j, const TunedEstimate& e)
{
    json hist = json::array();
    for (const auto& [it, lam] : e.history) hist.push_back({it, lam});
    j = json{{"method", to_string(e.method)},
             {"lambda_hat", e.lambda_hat},
             {"sigma_hat", e.sigma_hat},
             {"beta", to_json_array(e.beta)},
             {"active_set", e.active_set},
             {"signs", signs_to_json(e.signs)},
             {"residual_sq", e.residual_sq},
             {"l1_norm", e.l1_norm},
             {"iterations", e.iterations},
             {"converged", e.converged},
             {"roots_found", e.roots_found},
             {"history", hist},
             {"certificate", e.kkt},
             {"note", e.note}};
}

inline void to_json(json& j, const Check& c)
{
    j = json{{"ok", c.ok}, {"margin", c.margin}, {"evaluated", c.evaluated}};
}

inline void to_json(json& j, const AssumptionReport& r)
{
    j = json{{"strategy", to_string(r.strategy)},
             {"coherence_ok", r.coherence_ok},
             {"sparsity_ok", r.sparsity_ok},
             {"sample_size_ok", r.sample_size_ok},
             {"beta_lower_ok", r.beta_lower_ok},
             {"beta_upper_ok", r.beta_upper_ok},
             {"cvar_in_interval", r.cvar_in_interval},
             {"all_ok", r.all_ok()},
             {"constants", r.constants}};
}

inline void to_json(json& j, const CpConditions& c)
{
    j = json{{"noise_on_support", c.noise_on_support},
             {"inverse_signs", c.inverse_signs},
             {"irrepresentable", c.irrepresentable},
             {"noise_off_support", c.noise_off_support},
             {"near_isometry", c.near_isometry},
             {"all", c.all()}};
}

inline json read_json_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
}

/// Observation from JSON ({"y": [...]}) or a single CSV column.
inline Observation load_observation(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    char first = 0;
    f >> std::ws;
    first = static_cast<char>(f.peek());
    f.seekg(0);
    if (first == '{') return read_json_file(path).get<Observation>();
    Observation o;
    o.y = read_vector_csv(f);
    return o;
}

} // namespace varlasso
