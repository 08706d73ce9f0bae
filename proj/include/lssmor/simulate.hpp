#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lssmor/errors.hpp"
#include "lssmor/expm.hpp"
#include "lssmor/model.hpp"
#include "lssmor/rng.hpp"

namespace lssmor {

/// Input signal evaluable at any t >= 0.  Sampled inputs use zero-order hold.
class InputSignal {
 public:
  enum class Kind { Zero, ImpulseApprox, Sampled, Demo };

  static InputSignal zero() { return InputSignal(Kind::Zero); }

  /// Box approximation of the Dirac impulse: 1/width on [0, width).
  static InputSignal impulse_approx(double width) {
    InputSignal s(Kind::ImpulseApprox);
    s.width_ = width;
    return s;
  }

  /// u(t) = (1 + sin(pi t)) e^{-t/5}, applied to every channel.
  static InputSignal demo() { return InputSignal(Kind::Demo); }

  static InputSignal sampled(std::vector<double> times, Matrix values) {
    if (times.empty() || static_cast<Eigen::Index>(times.size()) != values.rows())
      throw ValidationError("sampled input: times and value rows must match");
    InputSignal s(Kind::Sampled);
    s.times_ = std::move(times);
    s.values_ = std::move(values);
    return s;
  }

  Kind kind() const { return kind_; }

  /// Value at time t, broadcast/truncated to m channels.
  Vector eval(double t, Eigen::Index m) const {
    switch (kind_) {
      case Kind::Zero:
        return Vector::Zero(m);
      case Kind::ImpulseApprox:
        return (t >= 0.0 && t < width_) ? Vector::Constant(m, 1.0 / width_)
                                        : Vector::Zero(m);
      case Kind::Demo:
        return Vector::Constant(m, (1.0 + std::sin(M_PI * t)) *
                                       std::exp(-t / 5.0));
      case Kind::Sampled: {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        if (it == times_.begin()) return Vector::Zero(m);
        const Eigen::Index row =
            static_cast<Eigen::Index>(std::distance(times_.begin(), it)) - 1;
        Vector v = Vector::Zero(m);
        const Eigen::Index cols = std::min(m, values_.cols());
        v.head(cols) = values_.row(row).head(cols).transpose();
        return v;
      }
    }
    return Vector::Zero(m);
  }

 private:
  explicit InputSignal(Kind k) : kind_(k) {}
  Kind kind_;
  double width_ = 1e-3;
  std::vector<double> times_;
  Matrix values_;
};

enum class SimMethod { Rk4, Expm };

/// Time-domain trace.  Switch instants appear twice: once with the
/// pre-switch mode/state and once with the post-switch (reset) state, so
/// both one-sided limits are preserved.
struct SimulationTrace {
  std::vector<double> times;
  std::vector<Vector> states;   // dimension follows the active mode
  std::vector<Vector> outputs;
  std::vector<int> active_mode;
  std::vector<size_t> switch_indices;  // index of the pre-switch sample at each T_i
};

/// Random-switching protocol: start in mode 1, switch times drawn uniformly
/// in (0, horizon), alternating modes (cycling for M > 2).
inline SwitchingSignal random_switching_signal(const LssModel& model,
                                               double horizon, int switches,
                                               uint64_t seed) {
  if (switches < 0 || horizon <= 0.0)
    throw ValidationError("random switching needs horizon > 0, switches >= 0");
  Rng rng(seed);
  std::vector<double> times;
  for (int i = 0; i < switches; ++i) times.push_back(rng.uniform(0.0, horizon));
  std::sort(times.begin(), times.end());
  times.push_back(horizon);
  std::vector<SwitchingSignal::Event> events;
  double prev = 0.0;
  int mode = 1;
  for (double t : times) {
    if (t - prev <= 0.0) continue;  // drop duplicate draws
    events.push_back({mode, t - prev});
    prev = t;
    mode = mode % model.mode_count() + 1;
  }
  return SwitchingSignal(std::move(events), model.mode_count());
}

namespace detail {

inline Vector rk4_step(const Mode& md, const Vector& x, double t, double h,
                       const InputSignal& input) {
  auto f = [&](double tt, const Vector& xx) -> Vector {
    return md.A * xx + md.B * input.eval(tt, md.m());
  };
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  const Vector k4 = f(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Zero-order-hold step transition for one mode and step size h:
// x+ = E11 x + E12 u with [E11 E12; 0 I] = expm([A B; 0 0] h).
struct ZohStep {
  Matrix E11, E12;

  ZohStep(const Mode& md, double h) {
    const Eigen::Index n = md.n(), m = md.m();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = md.A * h;
    aug.topRightCorner(n, m) = md.B * h;
    const Matrix E = expm(aug);
    E11 = E.topLeftCorner(n, n);
    E12 = E.topRightCorner(n, m);
  }
};

}  // namespace detail

/// Integrate the switched dynamics under a switching signal, applying the
/// coupling map at every switch time.  The grid is step-aligned per dwell
/// interval with the final substep shortened so that every T_i is a node.
inline SimulationTrace simulate(const LssModel& model,
                                const SwitchingSignal& signal,
                                const InputSignal& input, double step,
                                SimMethod method = SimMethod::Rk4) {
  require_valid(model);
  if (!(step > 0.0)) throw ValidationError("step must be positive");

  SimulationTrace trace;
  Vector x;
  if (model.initial_state.size() > 0)
    throw ValidationError(
        "simulate expects a zero initial state; call absorb_initial_state "
        "first");
  x = Vector::Zero(model.mode(signal.events().front().mode).n());

  double t = 0.0;
  auto record = [&](int q, const Vector& xx) {
    trace.times.push_back(t);
    trace.states.push_back(xx);
    trace.outputs.push_back(model.mode(q).C * xx);
    trace.active_mode.push_back(q);
  };

  const auto& events = signal.events();
  for (size_t i = 0; i < events.size(); ++i) {
    const int q = events[i].mode;
    const Mode& md = model.mode(q);
    const double dwell = events[i].dwell;
    record(q, x);  // interval start (post-switch state for i > 0)

    const int full_steps = static_cast<int>(std::floor(dwell / step + 1e-12));
    const double tail = dwell - full_steps * step;
    std::optional<detail::ZohStep> zoh;
    if (method == SimMethod::Expm && full_steps > 0) zoh.emplace(md, step);
    const double t0 = t;
    for (int k = 0; k < full_steps; ++k) {
      if (method == SimMethod::Rk4) {
        x = detail::rk4_step(md, x, t, step, input);
      } else {
        x = zoh->E11 * x + zoh->E12 * input.eval(t, md.m());
      }
      t = t0 + (k + 1) * step;
      record(q, x);
    }
    if (tail > 1e-12 * step) {
      if (method == SimMethod::Rk4) {
        x = detail::rk4_step(md, x, t, tail, input);
      } else {
        detail::ZohStep zt(md, tail);
        x = zt.E11 * x + zt.E12 * input.eval(t, md.m());
      }
      t = t0 + dwell;
      record(q, x);
    } else {
      t = t0 + dwell;
      trace.times.back() = t;  // absorb rounding in the final node
    }

    if (i + 1 < events.size()) {
      // Reset map at T_i; the sample just recorded is the pre-switch one.
      trace.switch_indices.push_back(trace.times.size() - 1);
      x = model.coupling(q, events[i + 1].mode) * x;
    }
  }
  return trace;
}

/// Impulse response h_q(t) = C_q e^{A_q t} B_q at the given grid points.
inline std::vector<Matrix> impulse_response(const LssModel& model, int q,
                                            const std::vector<double>& t_grid) {
  require_valid(model);
  const Mode& md = model.mode(q);
  std::vector<Matrix> out;
  out.reserve(t_grid.size());
  double prev = -1.0;
  for (double t : t_grid) {
    if (t < 0.0 || t < prev)
      throw ValidationError("impulse response grid must be nonnegative increasing");
    prev = t;
    out.push_back(md.C * expm(md.A * t) * md.B);
  }
  return out;
}

/// Generalized kernel of a switching sequence.  The first listed mode is the
/// LAST active one: for delta = (q_1, ..., q_k),
///   h = C_{q_1} e^{A_{q_1} t_1} K_{q_2,q_1} ... K_{q_k,q_{k-1}} e^{A_{q_k} t_k} B_{q_k},
/// a p_{q_1} x m_{q_k} matrix.  k = 1 reduces to the impulse response.
inline Matrix kernel_eval(const LssModel& model, const std::vector<int>& delta,
                          const std::vector<double>& dwell) {
  require_valid(model);
  if (delta.empty() || delta.size() != dwell.size())
    throw ValidationError("kernel: sequence and dwell-time lengths must match");
  for (size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] < 1 || delta[i] > model.mode_count())
      throw ValidationError("kernel: mode index out of range");
    if (i + 1 < delta.size() && delta[i] == delta[i + 1])
      throw ValidationError("kernel: consecutive modes must differ");
    if (dwell[i] < 0.0) throw ValidationError("kernel: dwell times must be >= 0");
  }
  const size_t k = delta.size();
  // Build right-to-left starting from the first active mode q_k.
  Matrix acc = expm(model.mode(delta[k - 1]).A * dwell[k - 1]) *
               model.mode(delta[k - 1]).B;
  for (size_t i = k - 1; i-- > 0;) {
    acc = model.coupling(delta[i + 1], delta[i]) * acc;
    acc = expm(model.mode(delta[i]).A * dwell[i]) * acc;
  }
  return model.mode(delta[0]).C * acc;
}

}  // namespace lssmor
