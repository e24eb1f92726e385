#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "splinefusion/errors.hpp"

namespace splinefusion::io {

// One fusion scenario: beam, excitation, sampling, sensors, basis, filter
// and query settings. Defaults reproduce the tapered-cantilever study;
// empty vectors mean "derive the documented default at run time".
struct ScenarioConfig {
    // [geometry]
    double length = 1.65;
    double width = 0.02;
    double depth_root = 0.01;
    double depth_tip = 0.001;
    double youngs_modulus = 2.1e11;
    double density = 7850.0;
    int n_elements = 110;
    // [damping]
    double zeta1_percent = 3.0;
    double zeta2_percent = 4.0;
    // [excitation]
    std::string excitation_type = "chirp";
    double f0 = 3.0;
    double f1 = 15.0;
    double amplitude = 0.1;
    double position = -1.0;  // negative: free end
    double duration = 40.0;
    // [sampling]
    double dt = 0.005;
    std::uint64_t seed = 12345;
    double noise_accel_percent = 5.0;
    double noise_strain_percent = 5.0;
    // [sensors] (empty: collocated default stations 4iL/39, depths h(x)/2)
    std::vector<double> accel_positions;
    std::vector<double> strain_positions;
    std::vector<double> strain_depths;
    // [boundary] (cantilever fixed end)
    std::vector<double> bc_displacement_positions{0.0};
    std::vector<double> bc_displacement_values{0.0};
    std::vector<double> bc_slope_positions{0.0};
    std::vector<double> bc_slope_values{0.0};
    // [basis]
    int degree = 3;
    int n_internal_knots = 5;
    // [filter] (empty noise vectors: derived from the data, see pipeline)
    std::vector<double> q_acc;
    std::vector<double> r_strain;
    double theta0_scale = 1e-2;
    double bc_variance_floor = 1e-12;
    double q_acc_model_percent = 50.0;
    double r_strain_model_percent = 0.2;
    // [query] (empty positions: grid_count equally spaced nodes over [0, L])
    std::vector<double> query_positions;
    int query_grid_count = 111;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& text, const std::string& where) {
    try {
        size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(where + ": expected a number, got '" + text + "'");
    }
}

inline std::vector<double> parse_list(const std::string& text, const std::string& where) {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(item, where));
    }
    return out;
}

}  // namespace detail

// Flat INI-style text: [section] headers, key = value lines, '#' comments.
// Lists are comma separated. Unknown sections or keys are rejected with the
// offending line number.
inline ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream stream(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + line + "'");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string field = where + ": " + section + "." + key;

        auto num = [&] { return detail::parse_double(value, field); };
        auto list = [&] { return detail::parse_list(value, field); };
        auto integer = [&] {
            const double v = num();
            const int i = static_cast<int>(v);
            if (static_cast<double>(i) != v) throw ConfigError(field + ": expected an integer");
            return i;
        };

        if (section == "geometry") {
            if (key == "length") cfg.length = num();
            else if (key == "width") cfg.width = num();
            else if (key == "depth_root") cfg.depth_root = num();
            else if (key == "depth_tip") cfg.depth_tip = num();
            else if (key == "youngs_modulus") cfg.youngs_modulus = num();
            else if (key == "density") cfg.density = num();
            else if (key == "n_elements") cfg.n_elements = integer();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "damping") {
            if (key == "zeta1_percent") cfg.zeta1_percent = num();
            else if (key == "zeta2_percent") cfg.zeta2_percent = num();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "excitation") {
            if (key == "type") cfg.excitation_type = value;
            else if (key == "f0") cfg.f0 = num();
            else if (key == "f1") cfg.f1 = num();
            else if (key == "amplitude") cfg.amplitude = num();
            else if (key == "position") cfg.position = num();
            else if (key == "duration") cfg.duration = num();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "sampling") {
            if (key == "dt") cfg.dt = num();
            else if (key == "seed") {
                try {
                    if (value.empty() || value[0] == '-') throw std::invalid_argument("");
                    size_t pos = 0;
                    cfg.seed = std::stoull(value, &pos);
                    if (pos != value.size()) throw std::invalid_argument("");
                } catch (...) {
                    throw ConfigError(field + ": expected a non-negative integer seed");
                }
            } else if (key == "noise_accel_percent") cfg.noise_accel_percent = num();
            else if (key == "noise_strain_percent") cfg.noise_strain_percent = num();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "sensors") {
            if (key == "accel_positions") cfg.accel_positions = list();
            else if (key == "strain_positions") cfg.strain_positions = list();
            else if (key == "strain_depths") cfg.strain_depths = list();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "boundary") {
            if (key == "displacement_positions") cfg.bc_displacement_positions = list();
            else if (key == "displacement_values") cfg.bc_displacement_values = list();
            else if (key == "slope_positions") cfg.bc_slope_positions = list();
            else if (key == "slope_values") cfg.bc_slope_values = list();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "basis") {
            if (key == "degree") cfg.degree = integer();
            else if (key == "n_internal_knots") cfg.n_internal_knots = integer();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "filter") {
            if (key == "q_acc") cfg.q_acc = list();
            else if (key == "r_strain") cfg.r_strain = list();
            else if (key == "theta0_scale") cfg.theta0_scale = num();
            else if (key == "bc_variance_floor") cfg.bc_variance_floor = num();
            else if (key == "q_acc_model_percent") cfg.q_acc_model_percent = num();
            else if (key == "r_strain_model_percent") cfg.r_strain_model_percent = num();
            else throw ConfigError(field + ": unknown key");
        } else if (section == "query") {
            if (key == "positions") cfg.query_positions = list();
            else if (key == "grid_count") cfg.query_grid_count = integer();
            else throw ConfigError(field + ": unknown key");
        } else {
            throw ConfigError(where + ": unknown section [" + section + "]");
        }
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

// Canonical text form; parse(serialize(cfg)) reproduces cfg exactly
// (doubles are written with 17 significant digits).
inline std::string serialize_config(const ScenarioConfig& c) {
    using detail::format_double;
    using detail::format_list;
    std::ostringstream out;
    out << "[geometry]\n"
        << "length = " << format_double(c.length) << "\n"
        << "width = " << format_double(c.width) << "\n"
        << "depth_root = " << format_double(c.depth_root) << "\n"
        << "depth_tip = " << format_double(c.depth_tip) << "\n"
        << "youngs_modulus = " << format_double(c.youngs_modulus) << "\n"
        << "density = " << format_double(c.density) << "\n"
        << "n_elements = " << c.n_elements << "\n\n"
        << "[damping]\n"
        << "zeta1_percent = " << format_double(c.zeta1_percent) << "\n"
        << "zeta2_percent = " << format_double(c.zeta2_percent) << "\n\n"
        << "[excitation]\n"
        << "type = " << c.excitation_type << "\n"
        << "f0 = " << format_double(c.f0) << "\n"
        << "f1 = " << format_double(c.f1) << "\n"
        << "amplitude = " << format_double(c.amplitude) << "\n"
        << "position = " << format_double(c.position) << "\n"
        << "duration = " << format_double(c.duration) << "\n\n"
        << "[sampling]\n"
        << "dt = " << format_double(c.dt) << "\n"
        << "seed = " << c.seed << "\n"
        << "noise_accel_percent = " << format_double(c.noise_accel_percent) << "\n"
        << "noise_strain_percent = " << format_double(c.noise_strain_percent) << "\n\n"
        << "[sensors]\n"
        << "accel_positions = " << format_list(c.accel_positions) << "\n"
        << "strain_positions = " << format_list(c.strain_positions) << "\n"
        << "strain_depths = " << format_list(c.strain_depths) << "\n\n"
        << "[boundary]\n"
        << "displacement_positions = " << format_list(c.bc_displacement_positions) << "\n"
        << "displacement_values = " << format_list(c.bc_displacement_values) << "\n"
        << "slope_positions = " << format_list(c.bc_slope_positions) << "\n"
        << "slope_values = " << format_list(c.bc_slope_values) << "\n\n"
        << "[basis]\n"
        << "degree = " << c.degree << "\n"
        << "n_internal_knots = " << c.n_internal_knots << "\n\n"
        << "[filter]\n"
        << "q_acc = " << format_list(c.q_acc) << "\n"
        << "r_strain = " << format_list(c.r_strain) << "\n"
        << "theta0_scale = " << format_double(c.theta0_scale) << "\n"
        << "bc_variance_floor = " << format_double(c.bc_variance_floor) << "\n"
        << "q_acc_model_percent = " << format_double(c.q_acc_model_percent) << "\n"
        << "r_strain_model_percent = " << format_double(c.r_strain_model_percent) << "\n\n"
        << "[query]\n"
        << "positions = " << format_list(c.query_positions) << "\n"
        << "grid_count = " << c.query_grid_count << "\n";
    return out.str();
}

// FNV-1a 64 over the canonical serialization; recorded in output metadata
// for tamper detection.
inline std::uint64_t config_hash(const ScenarioConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline void validate_config(const ScenarioConfig& c) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(c.length > 0, "geometry.length must be positive");
    require(c.width > 0, "geometry.width must be positive");
    require(c.depth_root > 0, "geometry.depth_root must be positive");
    require(c.depth_tip > 0, "geometry.depth_tip must be positive");
    require(c.youngs_modulus > 0, "geometry.youngs_modulus must be positive");
    require(c.density > 0, "geometry.density must be positive");
    require(c.n_elements >= 2, "geometry.n_elements must be at least 2");
    require(c.zeta1_percent >= 0 && c.zeta2_percent >= 0, "damping ratios must be non-negative");
    require(c.excitation_type == "chirp", "excitation.type: only 'chirp' is supported");
    require(c.f0 > 0 && c.f1 >= c.f0, "excitation: need f1 >= f0 > 0");
    require(c.amplitude != 0, "excitation.amplitude must be nonzero");
    require(c.position <= c.length, "excitation.position must lie on the beam");
    require(c.duration > 0, "excitation.duration must be positive");
    require(c.dt > 0, "sampling.dt must be positive");
    require(c.noise_accel_percent >= 0, "sampling.noise_accel_percent must be non-negative");
    require(c.noise_strain_percent >= 0, "sampling.noise_strain_percent must be non-negative");
    require(c.degree >= 2, "basis.degree must be at least 2 (strain needs second derivatives)");
    require(c.n_internal_knots >= 2, "basis.n_internal_knots must be at least 2");
    require(c.theta0_scale > 0, "filter.theta0_scale must be positive");
    require(c.bc_variance_floor > 0, "filter.bc_variance_floor must be positive");
    require(c.q_acc_model_percent >= 0, "filter.q_acc_model_percent must be non-negative");
    require(c.r_strain_model_percent >= 0, "filter.r_strain_model_percent must be non-negative");
    require(c.query_grid_count >= 2 || !c.query_positions.empty(),
            "query.grid_count must be at least 2");
    for (double x : c.accel_positions)
        require(x >= 0 && x <= c.length, "sensors.accel_positions must lie within [0, length]");
    for (double x : c.strain_positions)
        require(x >= 0 && x <= c.length, "sensors.strain_positions must lie within [0, length]");
    require(c.bc_displacement_positions.size() == c.bc_displacement_values.size(),
            "boundary.displacement_values must align with displacement_positions");
    require(c.bc_slope_positions.size() == c.bc_slope_values.size(),
            "boundary.slope_values must align with slope_positions");
}

}  // namespace splinefusion::io
