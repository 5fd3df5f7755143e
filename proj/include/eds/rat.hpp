#pragma once
// Exact rationals backed by GMP. mpq_class keeps every arithmetic result
// in lowest terms with a positive denominator.

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eds {

using Rat = mpq_class;
using Int = mpz_class;

inline Rat rat(long n, long d = 1) {
    if (d == 0) throw std::domain_error("zero denominator");
    Rat r(n, d);
    r.canonicalize();
    return r;
}

// Accepts "n", "-n", "p/q".
inline Rat rat_from_string(const std::string& s) {
    Rat r;
    if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal '" + s + "'");
    if (r.get_den() == 0) throw std::domain_error("zero denominator in '" + s + "'");
    r.canonicalize();
    return r;
}

inline std::string to_string(const Rat& r) { return r.get_str(10); }

inline bool is_integer(const Rat& r) { return r.get_den() == 1; }

// Size measure used to prefer small pivots.
inline std::size_t bit_size(const Rat& r) {
    return mpz_sizeinbase(r.get_num_mpz_t(), 2) + mpz_sizeinbase(r.get_den_mpz_t(), 2);
}

inline Int binomial(long n, long k) {
    if (k < 0 || n < 0 || k > n) return 0;
    Int r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

}  // namespace eds
