#pragma once

#include <cmath>

namespace lilee::detail {

/// Poisson log-likelihood of one cell with log rate eta: D(ln E + eta) - E e^eta - ln D!.
/// Cells without exposure contribute nothing.
inline double cell_log_likelihood(double d, double e, double eta) {
    if (e <= 0.0) return 0.0;
    const double fitted = e * std::exp(eta);
    if (d == 0.0) return -fitted;
    return d * (std::log(e) + eta) - fitted - std::lgamma(d + 1.0);
}

struct Cell {
    double d, e, eta, w;
};

/// Newton step for a scalar parameter p that enters each cell's eta as p * w.
/// The step is halved until the log-likelihood of the cells does not drop,
/// and zero is returned if no such step is found. `cells(i)` yields a Cell.
template <typename Cells>
double newton_step(const Cells &cells, int count) {
    double gradient = 0.0;
    double curvature = 0.0;
    double current = 0.0;
    for (int c = 0; c < count; ++c) {
        const Cell cell = cells(c);
        if (cell.e <= 0.0) continue;
        const double fitted = cell.e * std::exp(cell.eta);
        gradient += (cell.d - fitted) * cell.w;
        curvature += fitted * cell.w * cell.w;
        current += cell_log_likelihood(cell.d, cell.e, cell.eta);
    }
    if (!(curvature > 0.0) || gradient == 0.0) return 0.0;
    double step = gradient / curvature;
    for (int halving = 0; halving < 40; ++halving) {
        double trial = 0.0;
        for (int c = 0; c < count; ++c) {
            const Cell cell = cells(c);
            trial += cell_log_likelihood(cell.d, cell.e, cell.eta + step * cell.w);
        }
        if (std::isfinite(trial) && trial >= current) return step;
        step *= 0.5;
    }
    return 0.0;
}

} // namespace lilee::detail
