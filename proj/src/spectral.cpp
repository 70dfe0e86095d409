#include "specfuse/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace specfuse::spectral {

SignalWindow SignalWindow::tail(int n) const {
  SignalWindow w;
  w.sample_rate = sample_rate;
  int m = size();
  n = std::min(n, m);
  w.values.assign(values.end() - n, values.end());
  w.start_time = time_of(m - n);
  return w;
}

double segment_variance(const SignalWindow& history, int k_samples, int end_index) {
  const int m = history.size();
  const int ref_start = m - k_samples;
  const int cand_start = end_index - k_samples + 1;
  // Per-point distances between candidate and reference, then their variance.
  double mean = 0.0;
  for (int i = 0; i < k_samples; ++i) {
    mean += std::abs(history.values[cand_start + i] - history.values[ref_start + i]);
  }
  mean /= k_samples;
  double var = 0.0;
  for (int i = 0; i < k_samples; ++i) {
    double d = std::abs(history.values[cand_start + i] - history.values[ref_start + i]) - mean;
    var += d * d;
  }
  return var / k_samples;
}

SegmentMatch find_similar_segment(const SignalWindow& history, int k_samples,
                                  double search_span_s) {
  const int m = history.size();
  if (k_samples < 8) {
    throw Error(Error::Kind::Parameter, "find_similar_segment: K must be >= 8");
  }
  if (m < 2 * k_samples) {
    throw Error(Error::Kind::InsufficientData,
                "find_similar_segment: history shorter than 2K samples");
  }
  const int ref_start = m - k_samples;
  // Candidate segments end strictly before the reference begins.
  const int last_end = ref_start - 1;
  int first_end = k_samples - 1;
  if (search_span_s > 0.0) {
    int span = static_cast<int>(std::floor(search_span_s * history.sample_rate));
    first_end = std::max(first_end, (m - 1) - span);
  }
  if (first_end > last_end) {
    throw Error(Error::Kind::InsufficientData,
                "find_similar_segment: search span admits no candidate segment");
  }

  SegmentMatch best;
  best.variance_score = std::numeric_limits<double>::infinity();
  // Scan newest-first so ties resolve to the most recent T.
  for (int e = last_end; e >= first_end; --e) {
    double v = segment_variance(history, k_samples, e);
    if (v < best.variance_score) {
      best.variance_score = v;
      best.match_end_index = e;
    }
  }
  best.match_time = history.time_of(best.match_end_index);
  return best;
}

SpectrumResult dft(const SignalWindow& window) {
  const int n = window.size();
  if (n < 16) {
    throw Error(Error::Kind::Format, "dft: window must hold at least 16 samples");
  }
  if (!(window.sample_rate > 0.0)) {
    throw Error(Error::Kind::Format, "dft: non-positive sample rate");
  }

  SpectrumResult out;
  out.window_start = window.start_time;
  out.window_end = window.time_of(n - 1);

  // Twiddle table: exp(-j*2*pi*q/N) for q in [0, N). The exponent index is
  // (k*n) mod N, which keeps the transform O(N^2) table lookups with no
  // per-element trig calls.
  std::vector<double> cos_tab(n), sin_tab(n);
  for (int q = 0; q < n; ++q) {
    double a = kTwoPi * q / n;
    cos_tab[q] = std::cos(a);
    sin_tab[q] = std::sin(a);
  }

  const int half = n / 2;
  out.bins.reserve(half);
  const double fs = window.sample_rate;
  for (int k = 0; k <= half; ++k) {
    double re = 0.0, im = 0.0;
    std::size_t q = 0;
    for (int i = 0; i < n; ++i) {
      re += window.values[i] * cos_tab[q];
      im -= window.values[i] * sin_tab[q];
      q += k;
      if (q >= static_cast<std::size_t>(n)) q -= n;
    }
    if (k == 0) {
      out.dc = re / n;
      continue;
    }
    SpectrumBin bin;
    bin.frequency = k * fs / n;
    // One-sided amplitude; Nyquist bin (even N) is not doubled.
    bool nyquist = (2 * k == n);
    bin.amplitude = (nyquist ? 1.0 : 2.0) * std::hypot(re, im) / n;
    // Phase in the sin convention: x = A sin(2 pi f (t - t0) + phi)
    // transforms to X(k) = (A N / 2) (sin phi - j cos phi).
    bin.phase = wrap_phase(std::atan2(re, -im));
    out.bins.push_back(bin);
  }
  for (const auto& b : out.bins) out.a_max = std::max(out.a_max, b.amplitude);
  return out;
}

std::vector<HarmonicComponent> extract_harmonics(const SpectrumResult& spectrum,
                                                 double threshold_ratio, int n_max) {
  std::vector<HarmonicComponent> comps;
  if (spectrum.a_max <= 0.0) return comps;
  const double cutoff = threshold_ratio * spectrum.a_max;
  for (const auto& bin : spectrum.bins) {
    if (bin.amplitude >= cutoff && bin.frequency > 0.0) {
      comps.emplace_back(bin.amplitude, bin.frequency, bin.phase);
    }
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const HarmonicComponent& a, const HarmonicComponent& b) {
                     return a.amplitude > b.amplitude;
                   });
  if (static_cast<int>(comps.size()) > n_max) comps.resize(n_max);
  return comps;
}

std::optional<std::vector<HarmonicComponent>> analyze_channel(
    const SignalWindow& history, const SpectralConfig& cfg) {
  if (history.size() < 2 * cfg.k_samples) return std::nullopt;
  SegmentMatch match = find_similar_segment(history, cfg.k_samples, cfg.search_span);

  // Transform the half-open interval (T, t]: the last N samples where
  // N = round((t - T) * fs). With T at the end of the matched segment this
  // spans an integer number of quasi-periods, which is what keeps the
  // rectangular window leakage small.
  const double t_end = history.end_time();
  int n_window = static_cast<int>(std::llround((t_end - match.match_time) * history.sample_rate));
  n_window = std::min(n_window, history.size());
  if (n_window < 16) return std::nullopt;

  SpectrumResult spec = dft(history.tail(n_window));
  auto comps = extract_harmonics(spec, cfg.threshold_ratio, cfg.n_max);
  // Re-reference phases from the window start to the last sample time.
  const double dt = t_end - spec.window_start;
  for (auto& c : comps) c = c.shifted(dt);
  return comps;
}

}  // namespace specfuse::spectral
