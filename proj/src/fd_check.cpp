#include "eemax/fd_check.hpp"

#include <cmath>
#include <stdexcept>

namespace eemax {

FdReport fd_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x,
                  const std::vector<double>& analytic_grad,
                  double step, double rtol, double atol) {
    if (x.size() != analytic_grad.size())
        throw std::invalid_argument("fd_check: point and gradient sizes differ");

    const double f0 = f(x);
    if (atol < 0.0) atol = 1e-7 * std::max(1.0, std::fabs(f0));

    FdReport rep;
    std::vector<double> xp = x;
    for (size_t i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::fabs(x[i]));
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];

        const double slope_fwd = (fp - f0) / h;
        const double slope_bwd = (f0 - fm) / h;
        if (std::fabs(slope_fwd - slope_bwd) >
            0.05 * (1.0 + std::max(std::fabs(slope_fwd), std::fabs(slope_bwd)))) {
            rep.skipped.push_back(static_cast<int64_t>(i));
            continue;
        }

        const double fd = (fp - fm) / (2.0 * h);
        const double an = analytic_grad[i];
        const double err = std::fabs(fd - an) / (std::max(std::fabs(fd), std::fabs(an)) + atol / rtol);
        ++rep.checked;
        if (err > rep.max_err) {
            rep.max_err = err;
            rep.worst_index = static_cast<int64_t>(i);
            rep.worst_fd = fd;
            rep.worst_analytic = an;
        }
        if (std::fabs(fd - an) > atol + rtol * std::max(std::fabs(fd), std::fabs(an)))
            rep.pass = false;
    }
    return rep;
}

} // namespace eemax
