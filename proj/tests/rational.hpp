#pragma once

// Exact rational scalar for Eigen, used to check the rank law and selection
// arithmetic without rounding.

#include <Eigen/Core>
#include <boost/rational.hpp>

using Rational = boost::rational<long long>;

namespace Eigen {
template <>
struct NumTraits<Rational> : GenericNumTraits<Rational> {
    using Real = Rational;
    using NonInteger = Rational;
    using Nested = Rational;
    enum {
        IsInteger = 0,
        IsSigned = 1,
        IsComplex = 0,
        RequireInitialization = 1,
        ReadCost = 1,
        AddCost = 3,
        MulCost = 3,
    };
    static Rational epsilon() { return Rational(0); }
    static Rational dummy_precision() { return Rational(0); }
    static int digits10() { return 0; }
};
}  // namespace Eigen

// Fraction of the C(M,d) d-subsets of ranks {1..M} whose smallest rank is `rank`.
inline Rational enumerated_rank_probability(int servers, int rank, int choices)
{
    long long hits = 0;
    long long total = 0;
    for (unsigned mask = 0; mask < (1u << servers); ++mask) {
        if (__builtin_popcount(mask) != choices) {
            continue;
        }
        ++total;
        if (__builtin_ctz(mask) + 1 == rank) {
            ++hits;
        }
    }
    return Rational(hits, total);
}
