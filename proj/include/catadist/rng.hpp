#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "catadist/matrix.hpp"

namespace catadist {

/// Seeded generator for reproducible test fixtures.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return unif_(gen_); }
    double normal() { return norm_(gen_); }
    cplx cnormal() { return {norm_(gen_), norm_(gen_)}; }
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }

  private:
    std::mt19937_64 gen_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> norm_{0.0, 1.0};
};

/// Ginibre matrix with iid standard complex Gaussian entries.
Mat random_ginibre(Rng& rng, int rows, int cols);
/// Haar-ish unitary via QR of a Ginibre matrix with phase fixing.
Mat random_unitary(Rng& rng, int d);
CVec random_pure(Rng& rng, int d);
/// Full-rank random density matrix GG^dag / tr.
Mat random_density(Rng& rng, int d);
/// Kraus operators of a random CPTP map via a Stinespring isometry.
std::vector<Mat> random_cptp_kraus(Rng& rng, int d_in, int d_out, int env_dim);

}  // namespace catadist
