#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "splinefusion/errors.hpp"

namespace splinefusion {

inline double rms(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() == 0) return 0.0;
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

// Uniformly sampled multi-channel signal with channel positions along the
// beam axis. `quantity` is the channel kind used in CSV headers ("acc",
// "eps", "u").
struct TimeSeriesMatrix {
    std::string quantity;
    Eigen::VectorXd times;      // T, strictly increasing, uniformly spaced
    Eigen::VectorXd positions;  // one per channel, meters
    Eigen::MatrixXd values;     // T x channels

    Eigen::Index samples() const { return values.rows(); }
    Eigen::Index channels() const { return values.cols(); }

    // Sampling interval; rejects non-uniform time grids (jitter > 1e-9 * dt).
    double dt() const {
        if (times.size() < 2) throw DataError("time series needs at least two samples");
        const double step = times(1) - times(0);
        if (!(step > 0)) throw DataError("time column must be strictly increasing");
        for (Eigen::Index i = 1; i < times.size(); ++i) {
            if (std::abs((times(i) - times(i - 1)) - step) > 1e-9 * step)
                throw DataError("time column is not uniformly spaced");
        }
        return step;
    }

    double channel_rms(Eigen::Index c) const { return rms(values.col(c)); }
};

}  // namespace splinefusion
