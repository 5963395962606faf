#pragma once

#include <random>
#include <vector>

#include "entform/dyadic.hpp"
#include "entform/rational.hpp"
#include "entform/stepfn.hpp"

namespace entform::testing {

// Deterministic generator; raw mt19937_64 draws only, so sequences are portable.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    long uniform(long lo, long hi) {  // inclusive bounds
        return lo + static_cast<long>(next() % static_cast<uint64_t>(hi - lo + 1));
    }

    // Rational with numerator in [-num_mag, num_mag] and denominator in [1, den_max].
    Rational rational(long num_mag, long den_max) {
        Rational q(uniform(-num_mag, num_mag), uniform(1, den_max));
        q.canonicalize();
        return q;
    }

    Rational nonneg_rational(long num_mag, long den_max) {
        Rational q(uniform(0, num_mag), uniform(1, den_max));
        q.canonicalize();
        return q;
    }

    bool chance(unsigned denom) { return next() % denom == 0; }

  private:
    std::mt19937_64 eng_;
};

inline StepFunction random_step_function(Rng& rng, const GridModel& m, int dims, bool nonneg,
                                         long num_mag = 4, long den_max = 3) {
    StepFunction f(m, dims);
    for (size_t i = 0; i < f.cell_count(); ++i) {
        f.set_flat(i, nonneg ? rng.nonneg_rational(num_mag, den_max) : rng.rational(num_mag, den_max));
    }
    return f;
}

inline DyadicCube random_model_cube(Rng& rng, const GridModel& m) {
    const int k = static_cast<int>(rng.uniform(m.finest_scale(), m.top_scale()));
    const long half = 1L << (m.L - k);
    DyadicCube q{k, std::vector<long>(static_cast<size_t>(m.r))};
    for (int a = 0; a < m.r; ++a) q.pos[static_cast<size_t>(a)] = rng.uniform(-half, half - 1);
    return q;
}

}  // namespace entform::testing
