#include <doctest.h>

#include "approx.hpp"

#include <cmath>

#include "synth.hpp"
#include "tiox/error.hpp"
#include "tiox/profiles.hpp"

using namespace tiox;
using namespace tiox::profiles;

TEST_CASE("normalize") {
  DepthProfile p;
  p.z_nm = {0, 1, 2};
  p.channels = {{"Ga", {2, 4, 8}}, {"Ti", {30, 10, 0}}};
  const auto n = normalize(p);
  CHECK(n.channel("Ga").values == std::vector<double>{0.25, 0.5, 1.0});
  CHECK(n.channel("Ti").values[0] == 1.0);
  CHECK(n.channel("Ti").values[1] == rel(1.0 / 3.0));
  CHECK(n.z_nm == p.z_nm);

  // idempotent
  const auto again = normalize(n);
  CHECK(again.channel("Ga").values == n.channel("Ga").values);
  CHECK(again.channel("Ti").values == n.channel("Ti").values);

  DepthProfile zero = p;
  zero.channels[1].values = {0, 0, 0};
  try {
    normalize(zero);
    FAIL("all-zero channel accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AllZeroChannel);
  }
  DepthProfile neg = p;
  neg.channels[0].values[0] = -1;
  CHECK_THROWS_AS(normalize(neg), Error);
  CHECK_THROWS_AS(p.channel("As"), Error);
}

TEST_CASE("profile validation") {
  DepthProfile p;
  p.z_nm = {0, 1, 1};
  p.channels = {{"Ga", {1, 2, 3}}};
  CHECK_THROWS_AS(p.validate(), Error);
  p.z_nm = {0, 1, 2};
  p.channels[0].values.pop_back();
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("diffusion length convention") {
  // 1e-17 cm^2/s = 1e-3 nm^2/s; 2 sqrt(3) nm after 3000 s
  CHECK(diffusion_length(1e-17, 3000.0) == rel(2.0 * std::sqrt(3.0)).epsilon(1e-14));
  CHECK(std::abs(diffusion_length(1e-17, 3000.0) - 3.46) < 0.005);
  CHECK(diffusion_coefficient(2.0 * std::sqrt(3.0), 3000.0) == rel(1e-17).epsilon(1e-14));
  CHECK(diffusion_coefficient(4.0, 3000.0) == rel(1.0 / 3.0 * 4e-17).epsilon(1e-14));
  CHECK_THROWS_AS(diffusion_coefficient(1.0, 0.0), Error);
  CHECK(erfc_profile(0.0, 1.0, 0.0, 2.0, 0.1) == rel(0.6));
  CHECK(erfc_profile(-100.0, 1.0, 0.0, 2.0, 0.1) == rel(1.1));
}

TEST_CASE("fit_diffusion recovers D from a noisy forward model") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const auto p = synth::erfc_profile(1e-17, 3000.0, 0.01, seed);
    const auto f = fit_diffusion(p, "Ga");
    CHECK(f.d_cm2_s == rel(1e-17).epsilon(0.10));
    CHECK_FALSE(f.resolution_limited);
    CHECK(f.z0_nm == doctest::Approx(0.0).scale(1.0).epsilon(0.1));
    // exact consistency between the reported fields
    CHECK(f.length_nm == rel(2.0 * std::sqrt(f.d_cm2_s * 1e14 * f.time_s)).epsilon(1e-14));
    CHECK(f.d_sigma_cm2_s > 0.0);
  }
}

TEST_CASE("fit_diffusion is translation invariant") {
  const auto base = synth::erfc_profile(2e-17, 3000.0, 0.01, 5);
  const auto f0 = fit_diffusion(base, "Ga");
  for (double shift : {-7.3, 0.5, 12.0}) {
    auto moved = base;
    for (double& z : moved.z_nm) z += shift;
    const auto f = fit_diffusion(moved, "Ga");
    CHECK(f.z0_nm == rel(f0.z0_nm + shift).epsilon(1e-6));
    CHECK(f.length_nm == rel(f0.length_nm).epsilon(1e-6));
    CHECK(f.d_cm2_s == rel(f0.d_cm2_s).epsilon(1e-6));
  }
}

TEST_CASE("rising profiles fit the same way as falling ones") {
  auto p = synth::erfc_profile(1e-17, 3000.0, 0.0, 1);
  const auto falling = fit_diffusion(p, "Ga");
  for (double& z : p.z_nm) z = -z;
  std::reverse(p.z_nm.begin(), p.z_nm.end());
  std::reverse(p.channels[0].values.begin(), p.channels[0].values.end());
  const auto rising = fit_diffusion(p, "Ga");
  CHECK(rising.length_nm == rel(falling.length_nm).epsilon(1e-6));
}

TEST_CASE("diffusion time option scales D") {
  const auto p = synth::erfc_profile(1e-17, 3000.0, 0.0, 1);
  DiffusionOptions opt;
  opt.time_s = 6000.0;
  const auto a = fit_diffusion(p, "Ga");
  const auto b = fit_diffusion(p, "Ga", opt);
  CHECK(b.length_nm == rel(a.length_nm));
  CHECK(b.d_cm2_s == rel(a.d_cm2_s / 2.0));
  opt.time_s = 0.0;
  CHECK_THROWS_AS(fit_diffusion(p, "Ga", opt), Error);
}

TEST_CASE("perfect step is flagged as resolution limited") {
  DepthProfile p;
  p.channels = {{"Ga", {}}};
  for (int i = -20; i <= 20; ++i) {
    p.z_nm.push_back(0.5 * i + 0.25);
    p.channels[0].values.push_back(i < 0 ? 1.0 : 0.0);
  }
  const auto f = fit_diffusion(p, "Ga");
  CHECK(f.resolution_limited);
  CHECK(f.length_nm == rel(0.5));
  CHECK(f.z0_nm == doctest::Approx(0.0).scale(1.0).epsilon(0.3));
}

TEST_CASE("non step-like channel") {
  DepthProfile p;
  p.channels = {{"Ga", {}}};
  for (int i = 0; i < 40; ++i) {
    p.z_nm.push_back(i);
    p.channels[0].values.push_back(0.5 + 0.4 * std::sin(i * 0.5));
  }
  try {
    fit_diffusion(p, "Ga");
    FAIL("oscillating channel fitted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MonotonicityViolation);
  }
}
