#ifndef EEMAX_FD_CHECK_HPP
#define EEMAX_FD_CHECK_HPP

#include <cstdint>
#include <functional>
#include <vector>

namespace eemax {

struct FdReport {
    bool pass = true;
    double max_err = 0.0;       // worst |fd - analytic| / (max(|fd|,|analytic|) + atol/rtol)
    int64_t worst_index = -1;
    double worst_fd = 0.0;
    double worst_analytic = 0.0;
    int64_t checked = 0;
    std::vector<int64_t> skipped;  // kink coordinates excluded from the check
};

/// Central-difference verification of an analytic gradient.
///
/// f must be deterministic (fix all random draws before calling). Step per
/// coordinate is step * max(1, |x_i|). A coordinate whose one-sided slopes
/// disagree by more than 5% of their magnitude brackets a kink (e.g. a ReLU
/// input crossing 0 inside the stencil) and is skipped rather than compared.
///
/// Pass criterion per coordinate: |fd - analytic| <= atol + rtol * max(|fd|, |analytic|).
/// atol guards coordinates whose true gradient is below the cancellation
/// noise floor of the difference quotient; a pure relative comparison is not
/// measurable there. If atol < 0 it defaults to 1e-7 * max(1, |f(x)|).
FdReport fd_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x,
                  const std::vector<double>& analytic_grad,
                  double step = 1e-6,
                  double rtol = 1e-5,
                  double atol = -1.0);

} // namespace eemax

#endif
