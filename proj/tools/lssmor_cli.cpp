// Command-line front end: Gramian analysis, H2 norms, model reduction,
// switched simulation, and the benchmark harness.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lssmor/lssmor.hpp"

namespace {

using lssmor::LssModel;
using lssmor::Matrix;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

std::string fmt(double v) { return lssmor::detail::format_double(v); }

void apply_thread_env() {
  if (const char* env = std::getenv("LSSMOR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) Eigen::setNbThreads(n);
  }
}

std::vector<int> parse_orders(const std::string& spec) {
  std::vector<int> orders;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) orders.push_back(std::stoi(tok));
  return orders;
}

LssModel load_model(const std::string& path) {
  LssModel model = lssmor::read_model_file(path);
  auto diags = lssmor::validate_model(model);
  if (!diags.empty()) {
    std::ostringstream os;
    os << path << ": invalid model:";
    for (const auto& d : diags) os << "\n  " << d;
    throw lssmor::ValidationError(os.str());
  }
  return model;
}

void print_existence(const lssmor::ExistenceReport& ex) {
  std::cout << "existence: alpha=" << fmt(ex.alpha) << " beta=" << fmt(ex.beta)
            << " coupling_norm=" << fmt(ex.k_norm)
            << " bound=" << fmt(ex.bound)
            << " satisfied=" << (ex.satisfied ? "yes" : "no");
  if (!ex.beta_reliable) std::cout << " (beta unreliable, A_D near-defective)";
  std::cout << '\n';
}

int cmd_gramians(const std::string& path, const std::string& method,
                 double tol, int levels) {
  LssModel model = load_model(path);
  lssmor::GramianSet set;
  if (method == "series") {
    set = lssmor::infinite_gramians_series(model, tol,
                                           levels > 0 ? levels : 200);
  } else {
    set = lssmor::infinite_gramians_direct(model, tol);
  }
  for (int q = 1; q <= model.mode_count(); ++q) {
    std::cout << "mode " << q << ": trace(P)="
              << fmt(set.P[static_cast<size_t>(q - 1)].trace())
              << " trace(Q)=" << fmt(set.Q[static_cast<size_t>(q - 1)].trace())
              << '\n';
  }
  std::cout << "method=" << method;
  if (set.levels_used >= 0) std::cout << " levels=" << set.levels_used;
  if (set.iterations > 0) std::cout << " iterations=" << set.iterations;
  std::cout << " max_residual=" << fmt(set.max_residual())
            << " converged=" << (set.converged ? "yes" : "no") << '\n';
  print_existence(lssmor::existence_check(model));
  return set.converged ? kExitOk : kExitNotConverged;
}

int cmd_h2(const std::string& path, const std::vector<std::string>& err) {
  if (err.empty() && path.empty())
    throw lssmor::ValidationError("h2 needs a model file or --error a b");
  if (!err.empty()) {
    auto res = lssmor::h2_error(load_model(err[0]), load_model(err[1]));
    std::cout << "h2_error_abs=" << fmt(res.absolute.norm)
              << " h2_ref=" << fmt(res.reference)
              << " h2_error_rel=" << fmt(res.relative) << '\n';
    return res.absolute.gramians.converged ? kExitOk : kExitNotConverged;
  }
  auto res = lssmor::h2_norm(load_model(path), lssmor::H2Method::Both);
  std::cout << "h2_norm=" << fmt(res.norm)
            << " h2_norm_sq=" << fmt(res.norm_sq)
            << " ctrl_obs_gap=" << fmt(res.cross_gap) << '\n';
  return res.gramians.converged ? kExitOk : kExitNotConverged;
}

int cmd_reduce(const std::string& path, const std::string& method,
               const std::string& orders_spec, uint64_t seed, double eps,
               int iter_max, const std::string& out) {
  LssModel model = load_model(path);
  std::vector<int> orders = parse_orders(orders_spec);
  lssmor::ReductionResult res;
  if (method == "bt") {
    res = lssmor::balanced_truncation(model, orders);
  } else {
    lssmor::SwirkaOptions opts;
    opts.seed = seed;
    opts.eps = eps;
    opts.iter_max = iter_max;
    res = lssmor::swirka(model, orders, opts);
  }
  lssmor::write_model_file(res.reduced, out);
  const double rel = lssmor::h2_error(model, res.reduced).relative;
  std::cout << "method=" << method << " iterations=" << res.iterations
            << " converged=" << (res.converged ? "yes" : "no");
  if (!res.offset_history.empty())
    std::cout << " final_offset=" << fmt(res.offset_history.back());
  if (res.order_clipped) std::cout << " (order clipped to Gramian rank)";
  std::cout << " rel_h2_error=" << fmt(rel)
            << " reduced_stable=" << (res.reduced_stable ? "yes" : "no")
            << '\n';
  return res.converged ? kExitOk : kExitNotConverged;
}

lssmor::SwitchingSignal parse_signal(const LssModel& model,
                                     const std::string& spec) {
  // "mode:dwell,mode:dwell,..."
  std::vector<lssmor::SwitchingSignal::Event> events;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw lssmor::ValidationError("signal: expected mode:dwell, got '" + tok +
                                    "'");
    events.push_back({std::stoi(tok.substr(0, colon)),
                      std::stod(tok.substr(colon + 1))});
  }
  return lssmor::SwitchingSignal(std::move(events), model.mode_count());
}

lssmor::InputSignal parse_input(const std::string& spec) {
  if (spec == "demo") return lssmor::InputSignal::demo();
  if (spec == "zero") return lssmor::InputSignal::zero();
  // Otherwise a CSV file: time,u_1,...
  std::ifstream is(spec);
  if (!is) throw lssmor::LssError("cannot open input file " + spec);
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.empty()) continue;
    times.push_back(row.front());
    rows.push_back({row.begin() + 1, row.end()});
  }
  if (rows.empty()) throw lssmor::ValidationError("input file has no samples");
  Matrix values(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return lssmor::InputSignal::sampled(std::move(times), std::move(values));
}

int cmd_simulate(const std::string& path, const std::string& signal_spec,
                 const std::string& random_spec, int switches,
                 const std::string& input_spec, double step,
                 const std::string& method, bool with_input,
                 const std::string& out) {
  LssModel model = load_model(path);
  if (model.initial_state.size() > 0)
    model = lssmor::absorb_initial_state(model, 1).model;

  std::optional<lssmor::SwitchingSignal> signal;
  if (!random_spec.empty()) {
    const auto comma = random_spec.find(',');
    const double horizon = std::stod(random_spec.substr(0, comma));
    const uint64_t seed =
        comma == std::string::npos
            ? 0
            : std::stoull(random_spec.substr(comma + 1));
    signal = lssmor::random_switching_signal(model, horizon, switches, seed);
  } else if (!signal_spec.empty()) {
    signal = parse_signal(model, signal_spec);
  } else {
    throw lssmor::ValidationError(
        "simulate needs --signal or --random-switching");
  }

  const lssmor::InputSignal input = parse_input(input_spec);
  const auto sim_method =
      method == "expm" ? lssmor::SimMethod::Expm : lssmor::SimMethod::Rk4;
  auto trace = lssmor::simulate(model, *signal, input, step, sim_method);

  std::ofstream os(out);
  if (!os) throw lssmor::LssError("cannot open " + out + " for writing");
  lssmor::write_trace_csv(trace, model, os, with_input ? &input : nullptr);
  std::cout << "samples=" << trace.times.size()
            << " switches=" << trace.switch_indices.size() << " out=" << out
            << '\n';
  return kExitOk;
}

// Build the 2-mode failure-configuration LSS from a 2-input/2-output source
// system: in mode j input/output j are failing; rule "drop" keeps the other
// column/row, rule "keep" keeps column/row j itself.
LssModel build_failure_lss(const Matrix& A, const Matrix& B, const Matrix& C,
                           const std::string& rule) {
  if (B.cols() < 2 || C.rows() < 2)
    throw lssmor::ValidationError(
        "benchmark source needs at least 2 inputs and 2 outputs");
  LssModel model;
  model.name = "benchmark";
  for (int j = 1; j <= 2; ++j) {
    const Eigen::Index sel =
        rule == "keep" ? j - 1 : (j == 1 ? 1 : 0);  // drop: keep the other one
    lssmor::Mode md;
    md.label = j;
    md.A = A;
    md.B = B.col(sel);
    md.C = C.row(sel);
    model.modes.push_back(std::move(md));
  }
  return model;  // identity couplings (equal orders)
}

int cmd_benchmark(const std::string& spec_path) {
  std::ifstream is(spec_path);
  if (!is) throw lssmor::LssError("cannot open benchmark spec " + spec_path);
  json spec = json::parse(is);

  const auto base = std::filesystem::path(spec_path).parent_path();
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  const Matrix A = lssmor::read_matrix_market(
      resolve(spec.at("source").at("A").get<std::string>()));
  const Matrix B = lssmor::read_matrix_market(
      resolve(spec.at("source").at("B").get<std::string>()));
  const Matrix C = lssmor::read_matrix_market(
      resolve(spec.at("source").at("C").get<std::string>()));
  const std::string rule = spec.value("rule", "drop");
  const std::vector<int> orders = spec.at("orders").get<std::vector<int>>();
  const auto seed = spec.value<uint64_t>("seed", 0);
  const double eps = spec.value("eps", 1e-8);
  const int iter_max = spec.value("iter_max", 200);
  const std::string results_csv = resolve(spec.value("results_csv", "results.csv"));
  const std::string convergence_csv =
      resolve(spec.value("convergence_csv", "convergence.csv"));

  LssModel model = build_failure_lss(A, B, C, rule);
  auto diags = lssmor::validate_model(model);
  if (!diags.empty())
    throw lssmor::ValidationError("benchmark model invalid: " + diags.front());

  const double ref_norm =
      lssmor::h2_norm(model, lssmor::H2Method::Controllability).norm;
  std::ofstream results(results_csv);
  if (!results)
    throw lssmor::LssError("cannot open " + results_csv + " for writing");
  results << "r,rel_err_bt,rel_err_swirka,swirka_iters,converged\n";
  std::ofstream conv(convergence_csv);
  if (!conv)
    throw lssmor::LssError("cannot open " + convergence_csv + " for writing");
  conv << "r,iteration,offset\n";

  for (int r : orders) {
    const std::vector<int> rr(static_cast<size_t>(model.mode_count()), r);
    auto bt = lssmor::balanced_truncation(model, rr);
    const double err_bt =
        lssmor::h2_error(model, bt.reduced).absolute.norm / ref_norm;
    lssmor::SwirkaOptions opts;
    opts.seed = seed;
    opts.eps = eps;
    opts.iter_max = iter_max;
    auto ir = lssmor::swirka(model, rr, opts);
    const double err_ir =
        lssmor::h2_error(model, ir.reduced).absolute.norm / ref_norm;
    results << r << ',' << fmt(err_bt) << ',' << fmt(err_ir) << ','
            << ir.iterations << ',' << (ir.converged ? "yes" : "no") << '\n';
    for (size_t i = 0; i < ir.offset_history.size(); ++i)
      conv << r << ',' << (i + 1) << ',' << fmt(ir.offset_history[i]) << '\n';
    std::cout << "r=" << r << " rel_err_bt=" << fmt(err_bt)
              << " rel_err_swirka=" << fmt(err_ir)
              << " iters=" << ir.iterations
              << " converged=" << (ir.converged ? "yes" : "no") << '\n';
  }
  std::cout << "results=" << results_csv << " convergence=" << convergence_csv
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();
  CLI::App app{"Gramian analysis and H2-style model reduction for linear "
               "switched systems"};
  app.require_subcommand(1);

  std::string model_path, method = "direct", out, orders_spec;
  std::vector<std::string> err;
  double tol = 1e-10, eps = 1e-8, step = 1e-3;
  int levels = 0, iter_max = 200, switches = 8;
  uint64_t seed = 0;
  std::string signal_spec, random_spec, input_spec = "zero", sim_method = "rk4";
  bool with_input = false;

  auto* gram = app.add_subcommand("gramians", "Coupled Gramians of a model");
  gram->add_option("model", model_path)->required();
  gram->add_option("--method", method)->check(CLI::IsMember({"direct", "series"}));
  gram->add_option("--tol", tol);
  gram->add_option("--levels", levels, "Truncation level cap (series method)");

  auto* h2 = app.add_subcommand("h2", "H2 norm or H2 error between two models");
  h2->add_option("model", model_path);
  h2->add_option("--error", err, "Two model files; report the relative H2 error")
      ->expected(2);

  std::string reduce_method = "swirka";
  auto* red = app.add_subcommand("reduce", "Reduce a model (swirka or bt)");
  red->add_option("model", model_path)->required();
  red->add_option("--method", reduce_method)->check(CLI::IsMember({"swirka", "bt"}));
  red->add_option("--orders", orders_spec, "Comma-separated r_1,..,r_M")->required();
  red->add_option("--seed", seed);
  red->add_option("--eps", eps);
  red->add_option("--iter-max", iter_max);
  red->add_option("--out", out)->required();

  auto* sim = app.add_subcommand("simulate", "Time-domain switched simulation");
  sim->add_option("model", model_path)->required();
  sim->add_option("--signal", signal_spec, "mode:dwell,mode:dwell,...");
  sim->add_option("--random-switching", random_spec, "horizon,seed");
  sim->add_option("--switches", switches, "Switch count for random signals");
  sim->add_option("--input", input_spec, "demo | zero | CSV file");
  sim->add_option("--step", step);
  sim->add_option("--method", sim_method)->check(CLI::IsMember({"rk4", "expm"}));
  sim->add_flag("--with-input", with_input, "Record the input in the CSV");
  sim->add_option("--out", out)->required();

  auto* bench = app.add_subcommand("benchmark", "Run a benchmark spec (JSON)");
  bench->add_option("spec", model_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gram->parsed()) return cmd_gramians(model_path, method, tol, levels);
    if (h2->parsed()) return cmd_h2(model_path, err);
    if (red->parsed())
      return cmd_reduce(model_path, reduce_method, orders_spec, seed, eps,
                        iter_max, out);
    if (sim->parsed())
      return cmd_simulate(model_path, signal_spec, random_spec, switches,
                          input_spec, step, sim_method, with_input, out);
    if (bench->parsed()) return cmd_benchmark(model_path);
  } catch (const lssmor::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const lssmor::LssError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}
