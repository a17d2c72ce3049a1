// io.hpp: JSON schedule documents, reports, geometry files and target input.

#pragma once

#include "rydqudit/compiler.hpp"
#include "rydqudit/core.hpp"
#include "rydqudit/fullspace.hpp"
#include "rydqudit/propagator.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unistd.h>

namespace rydqudit {

using json = nlohmann::ordered_json;

inline constexpr int kScheduleFormatVersion = 1;
inline constexpr const char* kUnitNote = "omega_1r = 1";

// ------------------------------- schedules -----------------------------------

inline json schedule_to_json(const PulseSchedule& s) {
    json pulses = json::array();
    for (const auto& p : s.pulses) {
        pulses.push_back({{"label", p.label},
                          {"T", p.params.duration},
                          {"omega_1r", p.params.omega_1r},
                          {"phi_1r", p.params.phi_1r},
                          {"omega_01", p.params.omega_01},
                          {"phi_01", p.params.phi_01},
                          {"delta_01", p.params.delta_01}});
    }
    return {{"format_version", kScheduleFormatVersion},
            {"N", s.params.N},
            {"unit_note", kUnitNote},
            {"pulses", std::move(pulses)}};
}

namespace detail {

template <typename T>
T require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw std::invalid_argument(std::string("schedule: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("schedule: field '") + key + "' has the wrong type");
    }
}

}  // namespace detail

inline PulseSchedule schedule_from_json(const json& j) {
    const int version = detail::require<int>(j, "format_version");
    if (version != kScheduleFormatVersion)
        throw std::invalid_argument("schedule: unsupported format_version " + std::to_string(version));
    if (detail::require<std::string>(j, "unit_note") != kUnitNote)
        throw std::invalid_argument("schedule: unexpected unit_note");
    PulseSchedule s{ModelParams(detail::require<int>(j, "N")), {}};
    const json& pulses = j.at("pulses");
    if (!pulses.is_array()) throw std::invalid_argument("schedule: 'pulses' must be an array");
    for (const auto& p : pulses) {
        Pulse pulse;
        pulse.label = detail::require<std::string>(p, "label");
        pulse.params.duration = detail::require<double>(p, "T");
        pulse.params.omega_1r = detail::require<double>(p, "omega_1r");
        pulse.params.phi_1r = detail::require<double>(p, "phi_1r");
        pulse.params.omega_01 = detail::require<double>(p, "omega_01");
        pulse.params.phi_01 = detail::require<double>(p, "phi_01");
        pulse.params.delta_01 = detail::require<double>(p, "delta_01");
        if (!pulse.params.finite()) throw std::invalid_argument("schedule: non-finite pulse value");
        s.pulses.push_back(std::move(pulse));
    }
    return s;
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline PulseSchedule parse_schedule(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("schedule: ") + e.what());
    }
    return schedule_from_json(j);
}

// -------------------------------- reports ------------------------------------

inline json report_to_json(const GateReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"infidelity", opt(r.infidelity)},
            {"leakage", r.leakage},
            {"T_tot", r.total_duration},
            {"pulse_count", r.pulse_count},
            {"survival", opt(r.survival)},
            {"decay_probability", opt(r.decay_probability)}};
}

// ------------------------------- geometry ------------------------------------

inline Geometry geometry_from_json(const json& j) {
    Geometry g;
    try {
        for (const auto& p : j.at("positions")) {
            if (!p.is_array() || p.size() != 3)
                throw std::invalid_argument("geometry: each position must be [x, y, z]");
            g.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
        g.a = j.at("a").get<double>();
        g.lambda = j.at("lambda").get<double>();
        g.C6 = j.at("C6").get<double>();
        g.d = j.at("d").get<int>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("geometry: ") + e.what());
    }
    g.validate();
    return g;
}

// ------------------------------- file I/O ------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::filesystem::create_directories(dir);
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::invalid_argument("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// -------------------------------- targets ------------------------------------

/// "re im" per line; blank lines and lines starting with '#' are skipped.
inline Vector parse_complex_vector(const std::string& text) {
    std::vector<cplx> values;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        double re = 0.0, im = 0.0;
        std::string extra;
        if (!(ls >> re >> im) || (ls >> extra))
            throw std::invalid_argument("target file: expected 're im' per line, got '" + line + "'");
        values.emplace_back(re, im);
    }
    Vector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
    return v;
}

/// Presets "uniform", "minus1", "basis:+,3" / "basis:-,2", "g0", or a path
/// to a file of 2N (H') or 2N+1 amplitudes.
inline QuditState resolve_target(const std::string& spec, const ModelParams& p) {
    if (spec == "uniform") return uniform_state(p);
    if (spec == "minus1") return basis_state(p, DressedIndex::branch(Sign::Minus, 1));
    if (spec == "g0") return basis_state(p, DressedIndex::g0());
    if (spec.rfind("basis:", 0) == 0) {
        const std::string rest = spec.substr(6);
        if (rest.size() < 3 || (rest[0] != '+' && rest[0] != '-') || rest[1] != ',')
            throw std::invalid_argument("target: expected basis:<+|->,<q>");
        int q = 0;
        try {
            std::size_t used = 0;
            q = std::stoi(rest.substr(2), &used);
            if (used != rest.size() - 2) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::invalid_argument("target: bad level in '" + spec + "'");
        }
        if (q < 1 || q > p.N) throw std::invalid_argument("target: q outside 1..N");
        return basis_state(p, DressedIndex::branch(rest[0] == '+' ? Sign::Plus : Sign::Minus, q));
    }
    const Vector v = parse_complex_vector(read_file(spec));
    if (v.size() == static_cast<Eigen::Index>(p.qudit_dim())) return embed_qudit(v);
    if (v.size() == static_cast<Eigen::Index>(p.dim())) return v;
    throw std::invalid_argument("target file: expected 2N or 2N+1 amplitudes");
}

/// Rows of "re im re im ..." giving a 2N x 2N matrix.
inline Matrix parse_complex_matrix(const std::string& text) {
    std::vector<std::vector<cplx>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        std::vector<cplx> row;
        double re = 0.0, im = 0.0;
        while (ls >> re) {
            if (!(ls >> im)) throw std::invalid_argument("unitary file: odd number of values in a row");
            row.emplace_back(re, im);
        }
        if (!ls.eof()) throw std::invalid_argument("unitary file: non-numeric value");
        rows.push_back(std::move(row));
    }
    const auto d = static_cast<Eigen::Index>(rows.size());
    Matrix U(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != d)
            throw std::invalid_argument("unitary file: matrix is not square");
        for (Eigen::Index j = 0; j < d; ++j) U(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return U;
}

}  // namespace rydqudit
