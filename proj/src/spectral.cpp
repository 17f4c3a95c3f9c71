#include "tlsspec/spectral.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace tlsspec::spectral {

namespace {
// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<cplx> real_forward(const std::vector<double>& x, std::size_t n) {
    if (n == 0 || x.size() > n) throw NumericError("real_forward: transform length too small");
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < n; ++i) in[i] = i < x.size() ? x[i] : 0.0;
    fftw_execute(plan);
    std::vector<cplx> result(n / 2 + 1);
    for (std::size_t k = 0; k < result.size(); ++k) result[k] = cplx(out[k][0], out[k][1]);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return result;
}

std::vector<double> hann(std::size_t length) {
    std::vector<double> w(length, 1.0);
    if (length < 2) return w;
    const double denom = static_cast<double>(length - 1);
    for (std::size_t i = 0; i < length; ++i) {
        const double s = std::sin(kPi * static_cast<double>(i) / denom);
        w[i] = s * s;
    }
    return w;
}

}  // namespace tlsspec::spectral
