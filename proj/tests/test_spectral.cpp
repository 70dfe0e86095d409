#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "specfuse/rng.hpp"
#include "specfuse/spectral.hpp"

using namespace specfuse;
using namespace specfuse::spectral;

namespace {

SignalWindow make_signal(const std::vector<HarmonicComponent>& comps, double fs,
                         int n, double t0 = 0.0) {
  SignalWindow w;
  w.sample_rate = fs;
  w.start_time = t0;
  w.values.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = i / fs;  // phases referenced to the window start
    double v = 0.0;
    for (const auto& c : comps) v += c.eval(t);
    w.values[i] = v;
  }
  return w;
}

// Brute-force oracle: scan every admissible segment end index oldest-first,
// keeping the last (= most recent) minimizer on ties.
SegmentMatch brute_force_match(const SignalWindow& history, int k, double span) {
  const int m = history.size();
  const int ref_start = m - k;
  int first_end = k - 1;
  if (span > 0.0) {
    first_end = std::max(first_end,
                         (m - 1) - static_cast<int>(std::floor(span * history.sample_rate)));
  }
  SegmentMatch best;
  best.variance_score = std::numeric_limits<double>::infinity();
  for (int e = first_end; e <= ref_start - 1; ++e) {
    const double v = segment_variance(history, k, e);
    if (v <= best.variance_score) {
      best.variance_score = v;
      best.match_end_index = e;
    }
  }
  best.match_time = history.time_of(best.match_end_index);
  return best;
}

}  // namespace

TEST_CASE("segment search finds the one-period offset on a pure sinusoid") {
  std::vector<HarmonicComponent> comps{HarmonicComponent(1.0, 0.2, 0.9)};
  const SignalWindow w = make_signal(comps, 50.0, 50 * 20);
  const SegmentMatch m = find_similar_segment(w, 100, 30.0);
  const double t_end = w.end_time();
  // The matched segment ends one full period before the window end.
  CHECK(std::abs((t_end - m.match_time) - 5.0) <= 1.0 / 50.0 + 1e-12);
  CHECK(m.variance_score == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("segment search equals the brute-force scan") {
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<HarmonicComponent> comps;
    const int nc = 1 + static_cast<int>(rng.uniform() * 3);
    for (int i = 0; i < nc; ++i) {
      comps.emplace_back(rng.uniform(0.2, 1.0), rng.uniform(0.1, 0.8),
                         rng.uniform(0.0, kTwoPi));
    }
    SignalWindow w = make_signal(comps, 50.0, 700);
    for (auto& v : w.values) v += rng.gaussian(0.0, 0.02);
    const SegmentMatch fast = find_similar_segment(w, 100, 12.0);
    const SegmentMatch slow = brute_force_match(w, 100, 12.0);
    CHECK(fast.match_end_index == slow.match_end_index);
    CHECK(fast.variance_score == doctest::Approx(slow.variance_score));
  }
}

TEST_CASE("constant signal ties break to the most recent segment") {
  SignalWindow w;
  w.sample_rate = 50.0;
  w.values.assign(400, 1.25);
  const SegmentMatch m = find_similar_segment(w, 100, 0.0);
  CHECK(m.variance_score == doctest::Approx(0.0));
  // Most recent admissible end index is just before the reference start.
  CHECK(m.match_end_index == 400 - 100 - 1);
}

TEST_CASE("reference against itself has zero distance variance") {
  std::vector<HarmonicComponent> comps{HarmonicComponent(0.7, 0.31, 0.2)};
  const SignalWindow w = make_signal(comps, 50.0, 300);
  // Identity comparison, allowed only here: candidate end = last index.
  CHECK(segment_variance(w, 100, w.size() - 1) == doctest::Approx(0.0));
}

TEST_CASE("segment search input validation") {
  SignalWindow w;
  w.sample_rate = 50.0;
  w.values.assign(150, 0.0);
  CHECK_THROWS_AS(find_similar_segment(w, 100, 30.0), Error);  // < 2K samples
  w.values.assign(400, 0.0);
  CHECK_THROWS_AS(find_similar_segment(w, 4, 30.0), Error);  // K too small
}

TEST_CASE("dft of a pure tone on an integer-period window") {
  // x(t) = sin(2 pi 0.5 t), fs = 50, N = 500 -> bin 5 exactly.
  std::vector<HarmonicComponent> comps{HarmonicComponent(1.0, 0.5, 0.0)};
  const SignalWindow w = make_signal(comps, 50.0, 500);
  const SpectrumResult spec = dft(w);
  int best = 0;
  for (int i = 1; i < static_cast<int>(spec.bins.size()); ++i) {
    if (spec.bins[i].amplitude > spec.bins[best].amplitude) best = i;
  }
  CHECK(spec.bins[best].frequency == doctest::Approx(0.5));
  CHECK(spec.bins[best].amplitude == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(std::remainder(spec.bins[best].phase, kTwoPi)) < 1e-6);
  // Every other bin is numerically empty.
  for (int i = 0; i < static_cast<int>(spec.bins.size()); ++i) {
    if (i != best) CHECK(spec.bins[i].amplitude < 1e-9);
  }
}

TEST_CASE("dft phase follows the sin convention") {
  Rng rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const double phase = rng.uniform(0.0, kTwoPi);
    const double amp = rng.uniform(0.3, 2.0);
    std::vector<HarmonicComponent> comps{HarmonicComponent(amp, 1.0, phase)};
    const SignalWindow w = make_signal(comps, 50.0, 400);  // 8 whole periods
    const SpectrumResult spec = dft(w);
    int best = 0;
    for (int i = 1; i < static_cast<int>(spec.bins.size()); ++i) {
      if (spec.bins[i].amplitude > spec.bins[best].amplitude) best = i;
    }
    CHECK(spec.bins[best].amplitude == doctest::Approx(amp).epsilon(1e-9));
    const double dphi = std::remainder(spec.bins[best].phase - phase, kTwoPi);
    CHECK(std::abs(dphi) < 1e-9);
  }
}

TEST_CASE("dft of the zero signal is empty") {
  SignalWindow w;
  w.sample_rate = 50.0;
  w.values.assign(256, 0.0);
  const SpectrumResult spec = dft(w);
  CHECK(spec.a_max == 0.0);
  for (const auto& b : spec.bins) CHECK(b.amplitude == 0.0);
}

TEST_CASE("Parseval identity holds to 1e-9 relative") {
  Rng rng(17);
  SignalWindow w;
  w.sample_rate = 50.0;
  w.values.resize(333);
  for (auto& v : w.values) v = rng.gaussian(0.0, 1.0);
  const SpectrumResult spec = dft(w);

  double time_energy = 0.0;
  for (double v : w.values) time_energy += v * v;

  // Rebuild sum |X(k)|^2 over all N bins from the one-sided amplitudes.
  const int n = w.size();
  double freq_energy = std::pow(n * spec.dc, 2);  // |X(0)|^2
  for (const auto& b : spec.bins) {
    const bool nyquist = std::abs(b.frequency - 25.0) < 1e-12 && n % 2 == 0;
    const double mag = nyquist ? b.amplitude * n : b.amplitude * n / 2.0;
    freq_energy += (nyquist ? 1.0 : 2.0) * mag * mag;
  }
  freq_energy /= n;
  CHECK(std::abs(time_energy - freq_energy) / time_energy < 1e-9);
}

TEST_CASE("dft input validation") {
  SignalWindow w;
  w.sample_rate = 50.0;
  w.values.assign(8, 1.0);
  CHECK_THROWS_AS(dft(w), Error);
  w.values.assign(64, 1.0);
  w.sample_rate = 0.0;
  CHECK_THROWS_AS(dft(w), Error);
}

TEST_CASE("extract_harmonics applies the inclusive amplitude threshold") {
  SpectrumResult spec;
  spec.bins = {{0.2, 1.0, 0.1}, {0.6, 0.015, 0.2}};
  spec.a_max = 1.0;

  SUBCASE("below threshold is dropped") {
    const auto comps = extract_harmonics(spec, 0.02, 8);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].frequency == doctest::Approx(0.2));
    CHECK(comps[0].amplitude == doctest::Approx(1.0));
  }

  SUBCASE("boundary amplitude is retained") {
    spec.bins[1].amplitude = 0.02;
    const auto comps = extract_harmonics(spec, 0.02, 8);
    CHECK(comps.size() == 2);
  }

  SUBCASE("zero spectrum gives an empty list") {
    SpectrumResult zero;
    zero.a_max = 0.0;
    CHECK(extract_harmonics(zero, 0.02, 8).empty());
  }
}

TEST_CASE("extraction sorts by amplitude and caps the count") {
  SpectrumResult spec;
  for (int i = 1; i <= 12; ++i) {
    spec.bins.push_back({0.1 * i, 0.1 * i, 0.0});
  }
  spec.a_max = 1.2;
  const auto comps = extract_harmonics(spec, 0.02, 8);
  REQUIRE(comps.size() == 8);
  for (std::size_t i = 1; i < comps.size(); ++i) {
    CHECK(comps[i - 1].amplitude >= comps[i].amplitude);
  }
  CHECK(comps[0].amplitude == doctest::Approx(1.2));
}

TEST_CASE("raising the threshold never adds components") {
  Rng rng(23);
  SpectrumResult spec;
  for (int i = 1; i <= 30; ++i) {
    spec.bins.push_back({0.05 * i, rng.uniform(0.0, 1.0), rng.uniform(0.0, kTwoPi)});
    spec.a_max = std::max(spec.a_max, spec.bins.back().amplitude);
  }
  std::size_t prev = 1000;
  for (double thr : {0.0, 0.01, 0.02, 0.05, 0.1, 0.3, 0.8, 1.0}) {
    const auto comps = extract_harmonics(spec, thr, 100);
    CHECK(comps.size() <= prev);
    prev = comps.size();
  }
}

TEST_CASE("round trip: dft + extraction recovers on-bin components") {
  // Frequencies on bin centers of a 500-sample, 50 Hz window.
  const double fs = 50.0, n = 500;
  std::vector<HarmonicComponent> comps{
      HarmonicComponent(1.0, 3 * fs / n, 0.7),
      HarmonicComponent(0.5, 10 * fs / n, 2.9),
      HarmonicComponent(0.25, 30 * fs / n, 5.3),
  };
  const SignalWindow w = make_signal(comps, fs, static_cast<int>(n));
  const auto extracted = extract_harmonics(dft(w), 0.02, 8);
  REQUIRE(extracted.size() == comps.size());
  for (const auto& c : comps) {
    bool found = false;
    for (const auto& e : extracted) {
      if (std::abs(e.frequency - c.frequency) < fs / (2 * n)) {
        found = true;
        CHECK(std::abs(e.amplitude - c.amplitude) / c.amplitude < 1e-6);
        CHECK(std::abs(std::remainder(e.phase - c.phase, kTwoPi)) < 1e-4);
      }
    }
    CHECK(found);
  }
}

TEST_CASE("analyze_channel re-references phases to the history end") {
  // A sinusoid with a known absolute phase; the pipeline must return a
  // component that reproduces the signal at (and beyond) the last sample.
  std::vector<HarmonicComponent> comps{HarmonicComponent(0.8, 0.25, 1.1)};
  const SignalWindow w = make_signal(comps, 50.0, 1000);
  SpectralConfig cfg;
  cfg.k_samples = 100;
  cfg.search_span = 15.0;
  const auto out = analyze_channel(w, cfg);
  REQUIRE(out.has_value());
  REQUIRE(out->size() >= 1);
  const auto& c = (*out)[0];
  const double t_end = w.end_time();
  for (double dt : {0.0, 0.3, 1.7}) {
    double want = 0.0;
    for (const auto& g : comps) want += g.eval((t_end - w.start_time) + dt);
    CHECK(c.eval(dt) == doctest::Approx(want).epsilon(1e-3));
  }
}

TEST_CASE("analyze_channel returns nullopt on short histories") {
  SignalWindow w;
  w.sample_rate = 50.0;
  w.values.assign(120, 0.5);
  SpectralConfig cfg;
  CHECK_FALSE(analyze_channel(w, cfg).has_value());
}
