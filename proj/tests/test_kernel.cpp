#include "doctest.h"

#include <cmath>
#include <vector>

#include "effgrow/counter_rng.hpp"
#include "effgrow/errors.hpp"
#include "effgrow/kernel.hpp"

using namespace effgrow;

namespace {

SquareMatrix matrix(std::size_t M, std::vector<double> e) { return SquareMatrix{M, std::move(e)}; }

}  // namespace

TEST_CASE("validation flags each failure mode") {
  auto ok = validate_kernel(matrix(2, {0.7, 0.3, 0.5, 0.5}));
  CHECK(ok.valid());
  CHECK(ok.message.empty());

  auto neg = validate_kernel(matrix(2, {1.2, -0.2, 0.5, 0.5}));
  CHECK_FALSE(neg.nonnegative);

  auto sums = validate_kernel(matrix(2, {0.7, 0.4, 0.5, 0.5}));
  CHECK_FALSE(sums.stochastic);
  CHECK(sums.max_row_sum_error == doctest::Approx(0.1));

  // Second trait never produces the first: reducible.
  auto red = validate_kernel(matrix(2, {0.5, 0.5, 0.0, 1.0}));
  CHECK_FALSE(red.irreducible);
  CHECK_FALSE(red.message.empty());

  // Block diagonal.
  auto blocks = validate_kernel(matrix(4, {0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0.5}));
  CHECK_FALSE(blocks.irreducible);

  // A 3-cycle is irreducible even though no row is positive.
  auto cycle = validate_kernel(matrix(3, {0, 1, 0, 0, 0, 1, 1, 0, 0}));
  CHECK(cycle.irreducible);

  CHECK_THROWS_AS(HeredityKernel(matrix(2, {0.5, 0.5, 0.0, 1.0})), DomainError);
}

TEST_CASE("row sums within tolerance are accepted") {
  CHECK(validate_kernel(matrix(2, {0.5 + 5e-13, 0.5, 0.5, 0.5})).valid());
  CHECK_FALSE(validate_kernel(matrix(2, {0.5 + 5e-12, 0.5, 0.5, 0.5})).valid());
}

TEST_CASE("constructors") {
  auto b = make_kernel_bimodal(0.3, 0.5);
  CHECK(b(0, 0) == doctest::Approx(0.7));
  CHECK(b(0, 1) == 0.3);
  CHECK(b(1, 0) == 0.5);
  CHECK_THROWS_AS(make_kernel_bimodal(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(make_kernel_bimodal(0.5, 1.0), DomainError);

  auto a = make_kernel_alpha(4, 0.25);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(a(i, j) == 0.25);
  CHECK(a == make_kernel_uniform(4));
  CHECK_THROWS_AS(make_kernel_alpha(1, 0.5), DomainError);
  CHECK_THROWS_AS(make_kernel_alpha(3, 1.0), DomainError);
  CHECK(neutral_alpha(10) == 0.55);

  std::vector<double> w{0.2, 0.3, 0.5};
  auto n = make_kernel_noheredity(w);
  CHECK(is_noheredity(n));
  CHECK_FALSE(is_noheredity(b));
  std::vector<double> bad{0.2, 0.0, 0.8};
  CHECK_THROWS_AS(make_kernel_noheredity(bad), DomainError);
}

TEST_CASE("counter generator matches the reference SplitMix64 stream") {
  // Reference values of SplitMix64 seeded with 0: the generator state after k+1
  // increments, finalized.
  CounterRng rng(0);
  CHECK(rng.bits(0) == 0xE220A8397B1DCDAFULL);
  CHECK(rng.bits(1) == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.bits(2) == 0x06C45D188009454FULL);
  CounterStream s(0);
  CHECK(s.bits() == 0xE220A8397B1DCDAFULL);
  CHECK(s.position() == 1);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    double u = rng.uniform(k);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("random kernels are reproducible and valid") {
  for (std::size_t M : {2u, 5u, 30u}) {
    auto k1 = make_kernel_random(M, 42);
    auto k2 = make_kernel_random(M, 42);
    auto k3 = make_kernel_random(M, 43);
    CHECK(k1 == k2);
    CHECK_FALSE(k1 == k3);
    CHECK(validate_kernel(k1).valid());
  }
  // Entry (0, 0) is the first draw divided by the first row's sum.
  CounterRng rng(7);
  double sum = rng.uniform(0) + rng.uniform(1) + rng.uniform(2);
  CHECK(make_kernel_random(3, 7)(0, 0) == rng.uniform(0) / sum);
}
