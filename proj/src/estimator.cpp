#include "specfuse/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>
#include <sstream>

namespace specfuse::estimator {

FilterState::FilterState(const std::vector<HarmonicComponent>& components,
                         double init_time, const FilterConfig& cfg) {
  if (components.empty()) {
    throw Error(Error::Kind::Parameter, "FilterState: no components");
  }
  std::set<double> seen;
  for (const auto& c : components) {
    if (!(c.frequency > 0.0)) {
      throw Error(Error::Kind::Parameter, "FilterState: non-positive frequency");
    }
    if (!seen.insert(c.frequency).second) {
      throw Error(Error::Kind::Parameter, "FilterState: duplicate frequency");
    }
  }

  const int n = static_cast<int>(components.size());
  freqs_.resize(n);
  x_ = VecX::Zero(2 * n);
  p_ = MatX::Zero(2 * n, 2 * n);
  q_ = MatX::Zero(2 * n, 2 * n);
  t_obs_ = init_time;
  nis_window_s_ = cfg.nis_window;

  double f_max = 0.0;
  for (const auto& c : components) f_max = std::max(f_max, c.frequency);
  const double r_rate =
      cfg.r_rate > 0.0 ? cfg.r_rate : cfg.r_attitude * std::pow(kTwoPi * f_max, 2);
  r_ << cfg.r_attitude, 0.0, 0.0, r_rate;

  for (int i = 0; i < n; ++i) {
    const auto& c = components[i];
    const double omega = kTwoPi * c.frequency;
    freqs_[i] = c.frequency;
    x_[2 * i] = c.amplitude * std::sin(c.phase);
    x_[2 * i + 1] = omega * c.amplitude * std::cos(c.phase);
    // Initial uncertainty proportional to the component scale, with a floor
    // so zero-amplitude components can still pick up signal.
    const double a_ref = std::max(c.amplitude, 1e-2);
    p_(2 * i, 2 * i) = std::pow(0.3 * a_ref, 2);
    p_(2 * i + 1, 2 * i + 1) = std::pow(0.3 * a_ref * omega, 2);
    q_(2 * i, 2 * i) = cfg.q_scale * omega * omega;
    q_(2 * i + 1, 2 * i + 1) = cfg.q_scale * omega * omega;
  }
}

void FilterState::predict(double dt) {
  if (!(dt > 0.0)) throw Error(Error::Kind::Parameter, "predict: dt must be > 0");
  const int n = harmonic_count();
  MatX a = MatX::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    const double omega = kTwoPi * freqs_[i];
    const double c = std::cos(omega * dt), s = std::sin(omega * dt);
    // Exact discretization of v' = [[0,1],[-omega^2,0]] v.
    a(2 * i, 2 * i) = c;
    a(2 * i, 2 * i + 1) = s / omega;
    a(2 * i + 1, 2 * i) = -omega * s;
    a(2 * i + 1, 2 * i + 1) = c;
  }
  x_ = a * x_;
  p_ = a * p_ * a.transpose() + q_;
  p_ = 0.5 * (p_ + p_.transpose()).eval();
  t_obs_ += dt;
}

void FilterState::update(double value, double rate, double time) {
  if (time + 1e-9 < t_obs_) {
    throw Error(Error::Kind::Parameter, "update: measurement predates filter time");
  }
  const int n = harmonic_count();
  MatX h = MatX::Zero(2, 2 * n);
  for (int i = 0; i < n; ++i) {
    h(0, 2 * i) = 1.0;
    h(1, 2 * i + 1) = 1.0;
  }
  Eigen::Vector2d z(value, rate);
  Eigen::Vector2d y = z - h * x_;
  Eigen::Matrix2d s = h * p_ * h.transpose() + r_;
  const double det = s.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-300) {
    std::ostringstream msg;
    msg << "update: singular innovation covariance (det=" << det << ")";
    throw Error(Error::Kind::Numerical, msg.str());
  }
  Eigen::Matrix2d s_inv = s.inverse();
  MatX k = p_ * h.transpose() * s_inv;
  x_ += k * y;
  // Joseph form keeps the covariance PSD under roundoff; algebraically it
  // equals (I - K H) P at the optimal gain.
  MatX ikh = MatX::Identity(2 * n, 2 * n) - k * h;
  p_ = ikh * p_ * ikh.transpose() + k * r_ * k.transpose();
  p_ = 0.5 * (p_ + p_.transpose()).eval();
  t_obs_ = time;
  ++update_count_;

  const double nis = y.dot(s_inv * y);
  nis_history_.emplace_back(time, nis);
  while (!nis_history_.empty() && nis_history_.front().first < time - nis_window_s_) {
    nis_history_.pop_front();
  }
}

std::vector<FilterState::Params> FilterState::recover_params() const {
  std::vector<Params> out(harmonic_count());
  for (int i = 0; i < harmonic_count(); ++i) {
    const double omega = kTwoPi * freqs_[i];
    const double vd = x_[2 * i];      // A sin(phi)
    const double vv = x_[2 * i + 1];  // omega A cos(phi)
    if (vd == 0.0 && vv == 0.0) {
      out[i] = {0.0, 0.0};
      continue;
    }
    double phi = std::atan2(omega * vd, vv);
    double amp;
    if (std::abs(std::sin(phi)) >= 1e-6) {
      amp = vd / std::sin(phi);
    } else {
      amp = vv / (omega * std::cos(phi));
    }
    out[i].amplitude = amp;
    out[i].phase = wrap_phase(phi);
  }
  return out;
}

double FilterState::reconstructed_value() const {
  double v = 0.0;
  for (int i = 0; i < harmonic_count(); ++i) v += x_[2 * i];
  return v;
}

double FilterState::reconstructed_rate() const {
  double v = 0.0;
  for (int i = 0; i < harmonic_count(); ++i) v += x_[2 * i + 1];
  return v;
}

void FilterState::forecast(double horizon, double sample_period,
                           std::vector<double>& values, std::vector<double>& rates) const {
  if (!(horizon > 0.0) || !(sample_period > 0.0)) {
    throw Error(Error::Kind::Parameter, "forecast: horizon and period must be > 0");
  }
  auto params = recover_params();
  const int count = static_cast<int>(std::floor(horizon / sample_period)) + 1;
  values.assign(count, 0.0);
  rates.assign(count, 0.0);
  for (int k = 0; k < count; ++k) {
    const double dt = k * sample_period;
    double b = 0.0, br = 0.0;
    for (int i = 0; i < harmonic_count(); ++i) {
      const double omega = kTwoPi * freqs_[i];
      b += params[i].amplitude * std::sin(omega * dt + params[i].phase);
      br += params[i].amplitude * omega * std::cos(omega * dt + params[i].phase);
    }
    values[k] = b;
    rates[k] = br;
  }
}

double FilterState::mean_nis() const {
  if (nis_history_.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& [t, v] : nis_history_) acc += v;
  return acc / static_cast<double>(nis_history_.size());
}

double FilterState::confidence() const {
  const double conf = std::exp(-mean_nis() / (2.0 * harmonic_count()));
  return std::clamp(conf, 0.0, 1.0);
}

double FilterState::min_covariance_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (p_ + p_.transpose()));
  return es.eigenvalues().minCoeff();
}

PlatformForecast predict_6dof(const std::array<const FilterState*, kNumDof>& channels,
                              double horizon, double sample_period) {
  std::string missing;
  for (int d = 0; d < kNumDof; ++d) {
    if (channels[d] == nullptr) {
      if (!missing.empty()) missing += ", ";
      missing += dof_name(static_cast<Dof>(d));
    }
  }
  if (!missing.empty()) {
    throw Error(Error::Kind::Parameter, "predict_6dof: uninitialized channels: " + missing);
  }

  PlatformForecast fc;
  fc.start_time = channels[0]->last_update_time();
  fc.horizon = horizon;
  fc.sample_period = sample_period;
  for (int d = 0; d < kNumDof; ++d) {
    channels[d]->forecast(horizon, sample_period, fc.series[d], fc.rate_series[d]);
    fc.confidence[d] = channels[d]->confidence();
  }
  return fc;
}

}  // namespace specfuse::estimator
