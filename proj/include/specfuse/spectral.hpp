#ifndef SPECFUSE_SPECTRAL_HPP
#define SPECFUSE_SPECTRAL_HPP

#include <optional>
#include <vector>

#include "specfuse/types.hpp"

namespace specfuse::spectral {

/// Uniformly sampled scalar signal history for one DoF channel.
struct SignalWindow {
  std::vector<double> values;
  double sample_rate = 50.0;  // Hz
  double start_time = 0.0;    // time of values[0]

  int size() const { return static_cast<int>(values.size()); }
  double time_of(int i) const { return start_time + i / sample_rate; }
  double end_time() const { return time_of(size() - 1); }

  /// Last n samples as a window sharing the same grid.
  SignalWindow tail(int n) const;
};

struct SpectrumBin {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;  // one-sided, signal units
  double phase = 0.0;      // rad, sin convention, referenced to window_start
};

/// One-sided spectrum of a signal window. Phases reconstruct
/// A*sin(2*pi*f*(t - window_start) + phase).
struct SpectrumResult {
  std::vector<SpectrumBin> bins;  // k = 1..N/2, sorted by frequency
  double dc = 0.0;                // mean component (k = 0), reported separately
  double window_start = 0.0;     // T: first sample time of the transformed window
  double window_end = 0.0;       // t: last sample time
  double a_max = 0.0;            // max bin amplitude before any thresholding
};

struct SegmentMatch {
  double match_time = 0.0;      // T: end time of the best-matching segment
  double variance_score = 0.0;  // sigma_K of the per-point distances
  int match_end_index = 0;      // index into history of the segment's last sample
};

/// Finds the K-sample segment, ending before the most recent K samples begin,
/// whose point-wise Euclidean distances to that reference segment have minimal
/// variance. Ties go to the most recent candidate. The returned time marks the
/// end of the matched segment, so [T, end] spans an integer number of
/// quasi-periods of the signal.
SegmentMatch find_similar_segment(const SignalWindow& history, int k_samples,
                                  double search_span_s);

/// Distance-variance score of one candidate (segment ending at end_index)
/// against the reference tail. Exposed for the brute-force oracle tests.
double segment_variance(const SignalWindow& history, int k_samples, int end_index);

/// Discrete transform of the window (direct evaluation of the transform sum).
/// Requires at least 16 samples and a uniform grid.
SpectrumResult dft(const SignalWindow& window);

/// Thresholds spectrum bins at threshold_ratio * a_max (inclusive) and converts
/// the survivors to harmonic components, sorted by descending amplitude and
/// capped at n_max. Phases stay referenced to the spectrum's window_start.
std::vector<HarmonicComponent> extract_harmonics(const SpectrumResult& spectrum,
                                                 double threshold_ratio = 0.02,
                                                 int n_max = 8);

struct SpectralConfig {
  int k_samples = 150;        // reference segment length (3 s at 50 Hz)
  double search_span = 30.0;  // s, how far back the similarity scan reaches
  double threshold_ratio = 0.02;
  int n_max = 8;
};

/// Full front end on one channel: similarity search -> transform over the
/// matched interval -> thresholded components. Phases are re-referenced to the
/// history's last sample time. Returns nullopt when history is too short.
std::optional<std::vector<HarmonicComponent>> analyze_channel(
    const SignalWindow& history, const SpectralConfig& cfg);

}  // namespace specfuse::spectral

#endif  // SPECFUSE_SPECTRAL_HPP
