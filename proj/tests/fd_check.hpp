#pragma once

// Central finite-difference gradient checking shared by the optimization
// test suites and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace alignet::testsupport {

// max over entries of |analytic - fd| / max(|analytic|, |fd|, floor)
inline double max_relative_gradient_error(const std::vector<double>& analytic,
                                          std::function<double(const std::vector<double>&)> f,
                                          std::vector<double> params, double h = 1e-5,
                                          double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        params[i] = orig + h;
        const double up = f(params);
        params[i] = orig - h;
        const double down = f(params);
        params[i] = orig;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(fd), floor});
        worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
    }
    return worst;
}

} // namespace alignet::testsupport
