#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "splinefusion/errors.hpp"
#include "splinefusion/timeseries.hpp"

namespace splinefusion::io {

namespace detail {

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(line);
    while (std::getline(ss, item, ',')) {
        size_t b = item.find_first_not_of(" \t\r");
        size_t e = item.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace detail

// Header `t, <kind>@<pos>, ...`; doubles serialized with 17 significant
// digits so a write-read round trip is value exact.
inline void write_signal_csv(const std::string& path, const TimeSeriesMatrix& ts) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "t";
    for (Eigen::Index c = 0; c < ts.channels(); ++c)
        out << "," << ts.quantity << "@" << detail::csv_double(ts.positions(c));
    out << "\n";
    for (Eigen::Index k = 0; k < ts.samples(); ++k) {
        out << detail::csv_double(ts.times(k));
        for (Eigen::Index c = 0; c < ts.channels(); ++c) out << "," << detail::csv_double(ts.values(k, c));
        out << "\n";
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline TimeSeriesMatrix read_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");

    const auto header = detail::split_line(line);
    if (header.empty() || header[0] != "t")
        throw DataError("'" + path + "': first column must be 't'");
    TimeSeriesMatrix ts;
    std::vector<double> positions;
    for (size_t c = 1; c < header.size(); ++c) {
        const size_t at = header[c].find('@');
        if (at == std::string::npos)
            throw DataError("'" + path + "': channel header '" + header[c] + "' is not '<kind>@<position>'");
        const std::string kind = header[c].substr(0, at);
        if (c == 1) ts.quantity = kind;
        else if (kind != ts.quantity)
            throw DataError("'" + path + "': mixed channel kinds in one file");
        char* end = nullptr;
        const double pos = std::strtod(header[c].c_str() + at + 1, &end);
        if (end == header[c].c_str() + at + 1)
            throw DataError("'" + path + "': bad channel position in '" + header[c] + "'");
        positions.push_back(pos);
    }
    const size_t channels = positions.size();
    if (channels == 0) throw DataError("'" + path + "': no data channels");

    std::vector<double> times;
    std::vector<double> data;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_line(line);
        if (cells.size() != channels + 1)
            throw DataError("'" + path + "' line " + std::to_string(lineno) + ": expected " +
                            std::to_string(channels + 1) + " cells, got " + std::to_string(cells.size()));
        for (size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].empty())
                throw DataError("'" + path + "' line " + std::to_string(lineno) + ": missing cell");
            char* end = nullptr;
            const double v = std::strtod(cells[i].c_str(), &end);
            if (end != cells[i].c_str() + cells[i].size())
                throw DataError("'" + path + "' line " + std::to_string(lineno) + ": bad number '" +
                                cells[i] + "'");
            if (i == 0) times.push_back(v);
            else data.push_back(v);
        }
    }
    if (times.size() < 2) throw DataError("'" + path + "': need at least two samples");

    const auto rows = static_cast<Eigen::Index>(times.size());
    ts.times = Eigen::Map<Eigen::VectorXd>(times.data(), rows);
    ts.positions = Eigen::Map<Eigen::VectorXd>(positions.data(), static_cast<Eigen::Index>(channels));
    ts.values.resize(rows, static_cast<Eigen::Index>(channels));
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(channels); ++c)
            ts.values(r, c) = data[static_cast<size_t>(r) * channels + static_cast<size_t>(c)];
    ts.dt();  // validates uniform spacing
    return ts;
}

}  // namespace splinefusion::io
