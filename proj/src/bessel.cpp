#include <cmath>
#include <cstdlib>

#include "tlsspec/floquet.hpp"

namespace tlsspec {

namespace {

// Power series; used only for small arguments where it cannot cancel.
double bessel_series(int n, double x) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int k = 1; k <= n; ++k) term *= half / k;  // (x/2)^n / n!
    double sum = term;
    const double q = -half * half;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k + n));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

// Miller's algorithm: downward recurrence from a start index well beyond
// max(n, x), normalized with J0 + 2 sum_k J_2k = 1.
double bessel_miller(int n, double x) {
    const double reach = std::max(static_cast<double>(n), x);
    int start = static_cast<int>(reach + 20.0 + 10.0 * std::sqrt(reach));
    if (start % 2 != 0) ++start;

    double next = 0.0;     // J_{k+1}
    double current = 1e-300;  // J_k, arbitrary seed
    double wanted = 0.0;
    double norm = 0.0;
    const double two_over_x = 2.0 / x;
    for (int k = start; k > 0; --k) {
        const double prev = k * two_over_x * current - next;  // J_{k-1}
        next = current;
        current = prev;
        if (std::abs(current) > 1e250) {
            current *= 1e-250;
            next *= 1e-250;
            wanted *= 1e-250;
            norm *= 1e-250;
        }
        if (k - 1 == n) wanted = current;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * current;
    }
    norm += current;  // J_0
    return wanted / norm;
}

}  // namespace

double bessel_j(int n, double x) {
    double sign = 1.0;
    if (n < 0) {
        n = -n;
        if (n % 2 != 0) sign = -sign;
    }
    if (x < 0.0) {
        x = -x;
        if (n % 2 != 0) sign = -sign;
    }
    if (x == 0.0) return n == 0 ? sign : 0.0;
    if (x <= 1.0) return sign * bessel_series(n, x);
    return sign * bessel_miller(n, x);
}

double n_photon_coupling(double amplitude, double drive_freq, int n) {
    if (!(drive_freq > 0.0)) throw ConfigError("n_photon_coupling: drive frequency must be > 0");
    if (n < 1) throw ConfigError("n_photon_coupling: photon number must be >= 1");
    return 2.0 * amplitude * bessel_j(n, 2.0 * amplitude / drive_freq);
}

}  // namespace tlsspec
