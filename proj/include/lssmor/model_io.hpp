#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lssmor/errors.hpp"
#include "lssmor/model.hpp"
#include "lssmor/simulate.hpp"

namespace lssmor {

namespace detail {

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_matrix_rows(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

class LineReader {
 public:
  LineReader(std::istream& is, std::string file)
      : is_(is), file_(std::move(file)) {}

  /// Next non-empty, non-comment line; false at EOF.
  bool next(std::string& out) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      out = line;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(file_, line_no_, msg);
  }

  int line() const { return line_no_; }

 private:
  std::istream& is_;
  std::string file_;
  int line_no_ = 0;
};

inline Matrix read_matrix_rows(LineReader& rd, Eigen::Index rows,
                               Eigen::Index cols, const std::string& what) {
  Matrix m(rows, cols);
  std::string line;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!rd.next(line)) rd.fail("unexpected end of file inside " + what);
    std::istringstream ls(line);
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(ls >> m(i, j)))
        rd.fail(what + ": expected " + std::to_string(cols) +
                " values per row");
    }
    double extra;
    if (ls >> extra)
      rd.fail(what + ": row has more than " + std::to_string(cols) + " values");
  }
  return m;
}

}  // namespace detail

/// Serialize a model to the line-oriented text format (lossless for finite
/// doubles; `#` starts a comment).
inline void write_model(const LssModel& model, std::ostream& os) {
  os << "lss-model v1\n";
  if (!model.name.empty()) os << "name " << model.name << '\n';
  os << "modes " << model.mode_count() << '\n';
  for (const auto& md : model.modes) {
    os << "mode " << md.label << ' ' << md.n() << ' ' << md.m() << ' '
       << md.p() << '\n';
    os << "A\n";
    detail::write_matrix_rows(os, md.A);
    os << "B\n";
    detail::write_matrix_rows(os, md.B);
    os << "C\n";
    detail::write_matrix_rows(os, md.C);
  }
  for (const auto& [key, K] : model.couplings) {
    os << "coupling " << key.first << ' ' << key.second << '\n';
    detail::write_matrix_rows(os, K);
  }
  if (model.initial_state.size() > 0) {
    os << "initial_state\n";
    detail::write_matrix_rows(os, model.initial_state.transpose());
  }
  os << "end\n";
}

inline void write_model_file(const LssModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw LssError("cannot open " + path + " for writing");
  write_model(model, os);
}

inline LssModel read_model(std::istream& is, const std::string& file = "<stream>") {
  detail::LineReader rd(is, file);
  std::string line;
  if (!rd.next(line) || line.rfind("lss-model", 0) != 0)
    rd.fail("expected 'lss-model v1' header");

  LssModel model;
  int declared_modes = -1;
  while (rd.next(line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end") break;
    if (key == "name") {
      std::string rest;
      std::getline(ls, rest);
      const auto pos = rest.find_first_not_of(" \t");
      model.name = pos == std::string::npos ? "" : rest.substr(pos);
    } else if (key == "modes") {
      if (!(ls >> declared_modes) || declared_modes < 1)
        rd.fail("modes: expected a positive count");
    } else if (key == "mode") {
      int q = 0;
      Eigen::Index n = 0, m = 0, p = 0;
      if (!(ls >> q >> n >> m >> p) || n < 1 || m < 0 || p < 0)
        rd.fail("mode: expected 'mode <q> <n> <m> <p>'");
      Mode md;
      md.label = q;
      std::string tag;
      for (const char* want : {"A", "B", "C"}) {
        if (!rd.next(tag)) rd.fail("unexpected end of file in mode block");
        std::istringstream ts(tag);
        std::string t;
        ts >> t;
        if (t != want) rd.fail(std::string("expected '") + want + "' block");
        if (t == "A") md.A = detail::read_matrix_rows(rd, n, n, "A");
        if (t == "B") md.B = detail::read_matrix_rows(rd, n, m, "B");
        if (t == "C") md.C = detail::read_matrix_rows(rd, p, n, "C");
      }
      if (static_cast<int>(model.modes.size()) + 1 != q)
        rd.fail("mode blocks must appear in order 1..M");
      model.modes.push_back(std::move(md));
    } else if (key == "coupling") {
      int q = 0, s = 0;
      if (!(ls >> q >> s)) rd.fail("coupling: expected 'coupling <q> <s>'");
      if (q < 1 || s < 1 || q > static_cast<int>(model.modes.size()) ||
          s > static_cast<int>(model.modes.size()))
        rd.fail("coupling references an undeclared mode");
      model.couplings[{q, s}] = detail::read_matrix_rows(
          rd, model.mode(s).n(), model.mode(q).n(), "coupling");
    } else if (key == "initial_state") {
      if (model.modes.empty()) rd.fail("initial_state before any mode block");
      const Matrix row = detail::read_matrix_rows(
          rd, 1, model.mode(1).n(), "initial_state");
      model.initial_state = row.transpose();
    } else {
      rd.fail("unknown keyword '" + key + "'");
    }
  }
  if (declared_modes >= 0 &&
      declared_modes != static_cast<int>(model.modes.size()))
    rd.fail("declared " + std::to_string(declared_modes) + " modes but found " +
            std::to_string(model.modes.size()));
  return model;
}

inline LssModel read_model_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw LssError("cannot open model file " + path);
  return read_model(is, path);
}

/// Matrix Market reader: coordinate/array, real/integer, general/symmetric.
inline Matrix read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw LssError("cannot open matrix file " + path);
  std::string header;
  if (!std::getline(is, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw ParseError(path, 1, "missing %%MatrixMarket banner");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  for (auto* s : {&object, &format, &field, &symmetry})
    for (auto& c : *s) c = static_cast<char>(std::tolower(c));
  if (object != "matrix")
    throw ParseError(path, 1, "unsupported object '" + object + "'");
  if (field != "real" && field != "integer")
    throw ParseError(path, 1, "unsupported field '" + field + "'");
  const bool coordinate = format == "coordinate";
  if (!coordinate && format != "array")
    throw ParseError(path, 1, "unsupported format '" + format + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw ParseError(path, 1, "unsupported symmetry '" + symmetry + "'");

  detail::LineReader rd(is, path);
  auto next_data = [&rd](std::string& out) {
    while (rd.next(out)) {
      const auto pos = out.find_first_not_of(" \t");
      if (out[pos] == '%') continue;
      return true;
    }
    return false;
  };

  std::string line;
  if (!next_data(line)) throw ParseError(path, rd.line(), "missing size line");
  std::istringstream ss(line);
  Eigen::Index rows = 0, cols = 0;
  long long nnz = 0;
  if (coordinate) {
    if (!(ss >> rows >> cols >> nnz))
      rd.fail("coordinate size line must be 'rows cols nnz'");
  } else {
    if (!(ss >> rows >> cols)) rd.fail("array size line must be 'rows cols'");
  }
  Matrix m = Matrix::Zero(rows, cols);
  if (coordinate) {
    for (long long k = 0; k < nnz; ++k) {
      if (!next_data(line)) rd.fail("unexpected end of file in entries");
      std::istringstream es(line);
      Eigen::Index i = 0, j = 0;
      double v = 0.0;
      if (!(es >> i >> j >> v)) rd.fail("bad coordinate entry");
      if (i < 1 || i > rows || j < 1 || j > cols)
        rd.fail("coordinate entry out of bounds");
      m(i - 1, j - 1) = v;
      if (symmetric) m(j - 1, i - 1) = v;
    }
  } else {
    // Column-major dense listing; symmetric stores the lower triangle.
    std::istringstream es;
    auto read_value = [&](double& v) {
      while (!(es >> v)) {
        if (!next_data(line)) rd.fail("unexpected end of file in array data");
        es.clear();
        es.str(line);
      }
    };
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = symmetric ? j : 0; i < rows; ++i) {
        double v;
        read_value(v);
        m(i, j) = v;
        if (symmetric) m(j, i) = v;
      }
    }
  }
  return m;
}

inline void write_matrix_market(const Matrix& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw LssError("cannot open " + path + " for writing");
  os << "%%MatrixMarket matrix array real general\n";
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      os << detail::format_double(m(i, j)) << '\n';
}

/// CSV export: time, mode, y_1..y_p (padded across modes with differing p),
/// optionally the applied input channels.
inline void write_trace_csv(const SimulationTrace& trace,
                            const LssModel& model, std::ostream& os,
                            const InputSignal* input = nullptr) {
  Eigen::Index p_max = 0, m_max = 0;
  for (const auto& md : model.modes) {
    p_max = std::max(p_max, md.p());
    m_max = std::max(m_max, md.m());
  }
  os << "time,mode";
  for (Eigen::Index j = 1; j <= p_max; ++j) os << ",y_" << j;
  if (input)
    for (Eigen::Index j = 1; j <= m_max; ++j) os << ",u_" << j;
  os << '\n';
  for (size_t i = 0; i < trace.times.size(); ++i) {
    os << detail::format_double(trace.times[i]) << ',' << trace.active_mode[i];
    for (Eigen::Index j = 0; j < p_max; ++j) {
      os << ',';
      if (j < trace.outputs[i].size())
        os << detail::format_double(trace.outputs[i](j));
      else
        os << detail::format_double(0.0);
    }
    if (input) {
      const Vector u = input->eval(trace.times[i], m_max);
      for (Eigen::Index j = 0; j < m_max; ++j)
        os << ',' << detail::format_double(u(j));
    }
    os << '\n';
  }
}

}  // namespace lssmor
