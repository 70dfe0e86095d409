#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "specfuse/spectral.hpp"
#include "specfuse/wave_env.hpp"

using namespace specfuse;
using namespace specfuse::wave_env;

namespace {

bool sea_equal(const SeaState& a, const SeaState& b) {
  for (int d = 0; d < kNumDof; ++d) {
    if (a.harmonics[d].size() != b.harmonics[d].size()) return false;
    for (std::size_t i = 0; i < a.harmonics[d].size(); ++i) {
      const auto& x = a.harmonics[d][i];
      const auto& y = b.harmonics[d][i];
      if (x.amplitude != y.amplitude || x.frequency != y.frequency || x.phase != y.phase) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("synthesize_sea rejects bad parameters") {
  CHECK_THROWS_AS(synthesize_sea(0.0, 6.5, 8, 1), Error);
  CHECK_THROWS_AS(synthesize_sea(1.8, -1.0, 8, 1), Error);
  CHECK_THROWS_AS(synthesize_sea(1.8, 6.5, 0, 1), Error);
}

TEST_CASE("benchmark sea has its spectral peak near 1/Tp") {
  const SeaState sea = synthesize_sea(1.8, 6.5, 32, 7);
  for (int d = 0; d < kNumDof; ++d) CHECK(sea.harmonics[d].size() == 32);

  // Independent check: transform a long synthesized heave record and find the
  // peak bin of its spectrum.
  spectral::SignalWindow win;
  win.sample_rate = 50.0;
  const int n = 50 * 240;
  win.values.resize(n);
  for (int i = 0; i < n; ++i) {
    win.values[i] = platform_truth(sea, i / 50.0).position.z();
  }
  const auto spec = spectral::dft(win);
  double best_f = 0.0, best_a = 0.0;
  for (const auto& b : spec.bins) {
    if (b.amplitude > best_a) {
      best_a = b.amplitude;
      best_f = b.frequency;
    }
  }
  const double fp = 1.0 / 6.5;
  CHECK(best_f >= 0.9 * fp);
  CHECK(best_f <= 1.1 * fp);
}

TEST_CASE("one-bin spectrum degenerates to a pure sinusoid at 1/Tp") {
  const SeaState sea = synthesize_sea(2.0, 5.0, 1, 3);
  for (int d = 0; d < kNumDof; ++d) {
    REQUIRE(sea.harmonics[d].size() == 1);
    CHECK(sea.harmonics[d][0].frequency == doctest::Approx(1.0 / 5.0));
  }
}

TEST_CASE("seeded synthesis is bit-identical") {
  const SeaState a = synthesize_sea(1.8, 6.5, 32, 7);
  const SeaState b = synthesize_sea(1.8, 6.5, 32, 7);
  CHECK(sea_equal(a, b));
  const SeaState c = synthesize_sea(1.8, 6.5, 32, 8);
  CHECK_FALSE(sea_equal(a, c));
}

TEST_CASE("heave energy matches the spectral moment relation") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    const SeaState sea = synthesize_sea(1.8, 6.5, 32, seed);
    double e = 0.0;
    for (const auto& h : sea.harmonics[static_cast<int>(Dof::Heave)]) {
      e += h.amplitude * h.amplitude / 2.0;
    }
    const double m0 = std::pow(1.8 / 4.0, 2);
    CHECK(std::abs(e - m0) / m0 < 0.15);
  }
}

TEST_CASE("platform_truth evaluates harmonics and their derivatives") {
  SeaState sea;
  sea.hs = 1.0;
  sea.tp = 5.0;
  sea.harmonics[static_cast<int>(Dof::Roll)].push_back(HarmonicComponent(0.2, 0.2, 0.0));

  const PlatformState at0 = platform_truth(sea, 0.0);
  CHECK(at0.attitude.x() == doctest::Approx(0.0));
  CHECK(at0.ang_vel.x() == doctest::Approx(kTwoPi * 0.2 * 0.2));

  SUBCASE("zero amplitudes give identically zero state") {
    SeaState zero;
    zero.hs = 1.0;
    zero.tp = 5.0;
    for (double t : {0.0, 1.3, 7.7}) {
      const PlatformState st = platform_truth(zero, t);
      CHECK(st.position.norm() == 0.0);
      CHECK(st.attitude.norm() == 0.0);
      CHECK(st.lin_vel.norm() == 0.0);
      CHECK(st.ang_vel.norm() == 0.0);
    }
  }

  SUBCASE("single-harmonic DoF repeats after one period") {
    const double f = 0.2;
    for (double t : {0.4, 2.9, 11.0}) {
      const PlatformState a = platform_truth(sea, t);
      const PlatformState b = platform_truth(sea, t + 1.0 / f);
      CHECK(a.attitude.x() == doctest::Approx(b.attitude.x()).epsilon(1e-9));
    }
  }
}

TEST_CASE("rates are the analytic derivatives of the pose") {
  const SeaState sea = synthesize_sea(1.8, 6.5, 16, 11);
  double peak_rate = 0.0;
  for (double t = 0.0; t < 20.0; t += 0.37) {
    const PlatformState st = platform_truth(sea, t);
    peak_rate = std::max({peak_rate, st.lin_vel.cwiseAbs().maxCoeff(),
                          st.ang_vel.cwiseAbs().maxCoeff()});
  }
  const double h = 1e-3;
  for (double t = 0.05; t < 20.0; t += 0.61) {
    const PlatformState lo = platform_truth(sea, t - h);
    const PlatformState hi = platform_truth(sea, t + h);
    const PlatformState mid = platform_truth(sea, t);
    for (int i = 0; i < 3; ++i) {
      const double fd_lin = (hi.position[i] - lo.position[i]) / (2 * h);
      const double fd_ang = (hi.attitude[i] - lo.attitude[i]) / (2 * h);
      CHECK(std::abs(fd_lin - mid.lin_vel[i]) < 1e-4 * peak_rate);
      CHECK(std::abs(fd_ang - mid.ang_vel[i]) < 1e-4 * peak_rate);
    }
  }
}

TEST_CASE("wind with zero turbulence is the constant mean vector") {
  WindParams p;
  p.mean_velocity = 8.0;
  p.turbulence_sigma = 0.0;
  p.rng_seed = 5;
  WindSim sim(p);
  for (int i = 0; i < 100; ++i) {
    const Vec3 w = sim.step(0.02);
    CHECK(w.x() == doctest::Approx(8.0));
    CHECK(w.y() == doctest::Approx(0.0));
    CHECK(w.z() == doctest::Approx(0.0));
  }
}

TEST_CASE("gust statistics are stationary at the configured sigma") {
  WindParams p;
  p.mean_velocity = 8.0;
  p.turbulence_sigma = 2.5;
  p.rng_seed = 42;
  WindSim sim(p);
  // Skip the filter warm-up transient.
  for (int i = 0; i < 2000; ++i) sim.step(0.02);
  const int n = 1000000;
  Vec3 sum = Vec3::Zero(), sq = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec3 w = sim.step(0.02);
    sum += w;
    sq += w.cwiseProduct(w);
  }
  const Vec3 mean = sum / n;
  CHECK(std::abs(mean.x() - 8.0) < 0.1);
  CHECK(std::abs(mean.y()) < 0.1);
  CHECK(std::abs(mean.z()) < 0.1);
  for (int i = 0; i < 3; ++i) {
    const double var = sq[i] / n - mean[i] * mean[i];
    const double std = std::sqrt(std::max(0.0, var));
    CHECK(std == doctest::Approx(2.5).epsilon(0.10));
  }
}

TEST_CASE("seeded gust sequences are identical") {
  WindParams p;
  p.mean_velocity = 4.0;
  p.turbulence_sigma = 1.5;
  p.rng_seed = 99;
  WindSim a(p), b(p);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.step(0.02) == b.step(0.02));
  }
}

TEST_CASE("imu_measure adds calibrated noise") {
  PlatformState st;
  st.time = 3.25;
  st.attitude = Vec3(0.1, -0.05, 0.3);
  st.ang_vel = Vec3(0.01, 0.02, -0.03);

  SUBCASE("zero noise returns truth with the input time") {
    Rng rng(1);
    const ImuSample s = imu_measure(st, Vec3::Zero(), Vec3::Zero(), rng);
    CHECK(s.time == st.time);
    CHECK(s.attitude == st.attitude);
    CHECK(s.ang_vel == st.ang_vel);
  }

  SUBCASE("residual std matches the requested sigma") {
    Rng rng(7);
    const double sigma = 0.01;
    double sq = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const ImuSample s = imu_measure(st, Vec3::Constant(sigma), Vec3::Zero(), rng);
      const double r = s.attitude.x() - st.attitude.x();
      sq += r * r;
    }
    const double std = std::sqrt(sq / n);
    CHECK(std == doctest::Approx(sigma).epsilon(0.10));
  }

  SUBCASE("negative noise std is rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(imu_measure(st, Vec3(-0.1, 0, 0), Vec3::Zero(), rng), Error);
  }
}

TEST_CASE("full truth trace is deterministic for a fixed seed") {
  const SeaState a = synthesize_sea(1.5, 7.0, 24, 2024);
  const SeaState b = synthesize_sea(1.5, 7.0, 24, 2024);
  for (double t = 0.0; t < 30.0; t += 0.11) {
    const PlatformState sa = platform_truth(a, t);
    const PlatformState sb = platform_truth(b, t);
    CHECK(sa.position == sb.position);
    CHECK(sa.attitude == sb.attitude);
  }
}
