#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lssmor/errors.hpp"

namespace lssmor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One subsystem of a switched system: x' = A x + B u, y = C x.
struct Mode {
  Matrix A;  // n x n dynamics
  Matrix B;  // n x m input map
  Matrix C;  // p x n output map
  int label = 0;  // mode index in 1..M

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }
};

/// Continuous-time linear switched system with reset (coupling) maps.
///
/// Modes are labelled 1..M.  A coupling K(q,s) maps the mode-q state into
/// the mode-s state space (shape n_s x n_q) and is applied when switching
/// from q to s.  Couplings not stored explicitly default to the identity,
/// which requires n_s == n_q.
class LssModel {
 public:
  std::vector<Mode> modes;
  std::map<std::pair<int, int>, Matrix> couplings;  // key (from q, to s)
  Vector initial_state;  // length n_{q1} or empty
  std::string name;

  int mode_count() const { return static_cast<int>(modes.size()); }

  const Mode& mode(int q) const { return modes.at(static_cast<size_t>(q - 1)); }
  Mode& mode(int q) { return modes.at(static_cast<size_t>(q - 1)); }

  bool has_coupling(int q, int s) const {
    return couplings.count({q, s}) > 0;
  }

  /// Coupling K(q,s); falls back to identity when none is stored.
  Matrix coupling(int q, int s) const {
    auto it = couplings.find({q, s});
    if (it != couplings.end()) return it->second;
    if (mode(q).n() != mode(s).n()) {
      throw ValidationError("no coupling " + std::to_string(q) + "->" +
                            std::to_string(s) +
                            " and mode dimensions differ, identity undefined");
    }
    return Matrix::Identity(mode(s).n(), mode(q).n());
  }

  Eigen::Index total_order() const {
    Eigen::Index n = 0;
    for (const auto& md : modes) n += md.n();
    return n;
  }
};

/// Ordered (mode, dwell time) sequence driving a simulation.
class SwitchingSignal {
 public:
  struct Event {
    int mode;
    double dwell;
  };

  SwitchingSignal(std::vector<Event> events, int mode_count)
      : events_(std::move(events)) {
    if (events_.empty()) throw ValidationError("switching signal is empty");
    for (size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (e.mode < 1 || e.mode > mode_count)
        throw ValidationError("switching signal mode " + std::to_string(e.mode) +
                              " outside 1.." + std::to_string(mode_count));
      if (!(e.dwell > 0.0))
        throw ValidationError("dwell time must be strictly positive");
      if (i > 0 && events_[i - 1].mode == e.mode)
        throw ValidationError("consecutive modes in a switching signal must differ");
    }
  }

  const std::vector<Event>& events() const { return events_; }

  /// Cumulative switch times T_1..T_k (T_k is the total duration).
  std::vector<double> switch_times() const {
    std::vector<double> t;
    double acc = 0.0;
    for (const auto& e : events_) {
      acc += e.dwell;
      t.push_back(acc);
    }
    return t;
  }

  double duration() const {
    double acc = 0.0;
    for (const auto& e : events_) acc += e.dwell;
    return acc;
  }

 private:
  std::vector<Event> events_;
};

/// Block layout of the per-mode matrices: A_D = diag(A_1..A_M) and the
/// coupling block matrix with K(q,s) placed at block row s, block column q.
struct BlockAssembly {
  Matrix A_D, B_D, C_D, K_offdiag;
  std::vector<Eigen::Index> state_offset, input_offset, output_offset;

  Eigen::Index state_begin(int q) const { return state_offset[static_cast<size_t>(q - 1)]; }
  Eigen::Index state_size(int q) const {
    return state_offset[static_cast<size_t>(q)] - state_offset[static_cast<size_t>(q - 1)];
  }

  /// Extract the mode-q diagonal state block of a (total_n x total_n) matrix.
  Matrix state_block(const Matrix& full, int q) const {
    return full.block(state_begin(q), state_begin(q), state_size(q), state_size(q));
  }
};

namespace detail {

inline std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace detail

/// Structural checks; returns one message per violation, empty when valid.
inline std::vector<std::string> validate_model(const LssModel& model) {
  std::vector<std::string> diags;
  const int M = model.mode_count();
  if (M < 2) {
    diags.push_back("model needs at least 2 modes, has " + std::to_string(M));
    return diags;
  }
  for (int q = 1; q <= M; ++q) {
    const Mode& md = model.mode(q);
    const std::string tag = "mode " + std::to_string(q);
    if (md.A.rows() != md.A.cols())
      diags.push_back(tag + ": A is not square (" + detail::shape_str(md.A) + ")");
    if (md.B.rows() != md.A.rows())
      diags.push_back(tag + ": B has " + std::to_string(md.B.rows()) +
                      " rows, expected " + std::to_string(md.A.rows()));
    if (md.C.cols() != md.A.rows())
      diags.push_back(tag + ": C has " + std::to_string(md.C.cols()) +
                      " columns, expected " + std::to_string(md.A.rows()));
    for (const Matrix* m : {&md.A, &md.B, &md.C}) {
      if (!m->allFinite()) {
        diags.push_back(tag + ": non-finite entries");
        break;
      }
    }
  }
  for (int q = 1; q <= M; ++q) {
    for (int s = 1; s <= M; ++s) {
      if (q == s) continue;
      const std::string tag =
          "coupling " + std::to_string(q) + "->" + std::to_string(s);
      auto it = model.couplings.find({q, s});
      if (it == model.couplings.end()) {
        if (model.mode(q).n() != model.mode(s).n())
          diags.push_back(tag + ": missing and mode dimensions differ (" +
                          std::to_string(model.mode(q).n()) + " vs " +
                          std::to_string(model.mode(s).n()) +
                          "), identity default undefined");
        continue;
      }
      const Matrix& K = it->second;
      if (K.rows() != model.mode(s).n() || K.cols() != model.mode(q).n())
        diags.push_back(tag + ": shape " + detail::shape_str(K) + ", expected " +
                        std::to_string(model.mode(s).n()) + "x" +
                        std::to_string(model.mode(q).n()));
      else if (!K.allFinite())
        diags.push_back(tag + ": non-finite entries");
    }
  }
  for (const auto& [key, K] : model.couplings) {
    if (key.first == key.second)
      diags.push_back("self-coupling " + std::to_string(key.first) +
                      "->" + std::to_string(key.second) + " is not allowed");
    if (key.first < 1 || key.first > M || key.second < 1 || key.second > M)
      diags.push_back("coupling references mode outside 1.." + std::to_string(M));
  }
  if (model.initial_state.size() > 0 &&
      model.initial_state.size() != model.mode(1).n())
    diags.push_back("initial state has length " +
                    std::to_string(model.initial_state.size()) + ", expected " +
                    std::to_string(model.mode(1).n()));
  return diags;
}

inline void require_valid(const LssModel& model) {
  auto diags = validate_model(model);
  if (!diags.empty()) throw ValidationError("invalid model: " + diags.front());
}

/// Spectral abscissa max Re(lambda(A_q)) per mode; all-negative means stable.
inline std::vector<double> check_stability(const LssModel& model) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(model.mode_count()));
  for (const auto& md : model.modes) {
    Eigen::EigenSolver<Matrix> es(md.A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      throw IllPosedError("eigenvalue computation failed for mode " +
                          std::to_string(md.label));
    out.push_back(es.eigenvalues().real().maxCoeff());
  }
  return out;
}

inline double spectral_abscissa(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

inline BlockAssembly assemble_blocks(const LssModel& model) {
  require_valid(model);
  const int M = model.mode_count();
  BlockAssembly asmb;
  asmb.state_offset.assign(1, 0);
  asmb.input_offset.assign(1, 0);
  asmb.output_offset.assign(1, 0);
  for (const auto& md : model.modes) {
    asmb.state_offset.push_back(asmb.state_offset.back() + md.n());
    asmb.input_offset.push_back(asmb.input_offset.back() + md.m());
    asmb.output_offset.push_back(asmb.output_offset.back() + md.p());
  }
  const Eigen::Index N = asmb.state_offset.back();
  asmb.A_D = Matrix::Zero(N, N);
  asmb.B_D = Matrix::Zero(N, asmb.input_offset.back());
  asmb.C_D = Matrix::Zero(asmb.output_offset.back(), N);
  asmb.K_offdiag = Matrix::Zero(N, N);
  for (int q = 1; q <= M; ++q) {
    const Mode& md = model.mode(q);
    const Eigen::Index i = asmb.state_offset[static_cast<size_t>(q - 1)];
    asmb.A_D.block(i, i, md.n(), md.n()) = md.A;
    asmb.B_D.block(i, asmb.input_offset[static_cast<size_t>(q - 1)], md.n(), md.m()) = md.B;
    asmb.C_D.block(asmb.output_offset[static_cast<size_t>(q - 1)], i, md.p(), md.n()) = md.C;
  }
  // K(q,s) maps mode-q states into mode s: block row s, block column q.
  for (int q = 1; q <= M; ++q) {
    for (int s = 1; s <= M; ++s) {
      if (q == s) continue;
      asmb.K_offdiag.block(asmb.state_begin(s), asmb.state_begin(q),
                           model.mode(s).n(), model.mode(q).n()) =
          model.coupling(q, s);
    }
  }
  return asmb;
}

struct AbsorbResult {
  LssModel model;
  bool applied = false;  // false when the initial state was absent or zero
};

/// Fold a nonzero initial state into the first active mode's input map,
/// appending x0 as an extra column of B_{q1}.
inline AbsorbResult absorb_initial_state(const LssModel& model, int first_mode) {
  require_valid(model);
  AbsorbResult res{model, false};
  if (model.initial_state.size() == 0 || model.initial_state.isZero(0.0))
    return res;
  Mode& md = res.model.mode(first_mode);
  if (model.initial_state.size() != md.n())
    throw ValidationError("initial state length does not match first mode order");
  Matrix B2(md.n(), md.m() + 1);
  B2.leftCols(md.m()) = md.B;
  B2.col(md.m()) = model.initial_state;
  md.B = std::move(B2);
  res.model.initial_state = Vector();
  res.applied = true;
  return res;
}

}  // namespace lssmor
