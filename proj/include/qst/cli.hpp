#pragma once

// Command-line front end: design, simulate, verify, sweep, compare.
//
// stdout carries data (CSV or JSON), stderr carries diagnostics.
// Exit codes: 0 success, 1 usage or compute error, 2 infeasible design.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qst/qst.hpp"

namespace qst::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;

struct UsageError : Error {
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::vector<int> n;
  std::vector<double> epsilon;
  std::vector<double> q;
  int d = 2;
  std::string t_max = "auto";
  std::size_t samples = 4096;
  double threshold = 0.9;
  std::string mode = "theorem";
  std::string output;
  std::string format;
};

/// "%.17g"; round-trips every double and is locale-independent for our inputs.
inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Json = nlohmann::ordered_json;

namespace detail {

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline int single_n(const RunConfig& cfg) {
  if (cfg.n.size() != 1) throw UsageError("--n takes exactly one value for " + cfg.command);
  return cfg.n.front();
}

inline double single_q(const RunConfig& cfg) {
  if (cfg.q.size() != 1) throw UsageError("--q is required (one value) for " + cfg.command);
  return cfg.q.front();
}

inline DesignMode parse_mode(const std::string& s) {
  if (s == "theorem") return DesignMode::theorem;
  if (s == "relaxed") return DesignMode::relaxed;
  throw UsageError("--mode must be theorem or relaxed");
}

/// Explicit --t-max, or 2.5 t0 of the relaxed design at (n, Q).
inline double resolve_t_max(const RunConfig& cfg, int n, double q) {
  if (cfg.t_max != "auto") {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(cfg.t_max, &pos);
    } catch (const std::exception&) {
      throw UsageError("--t-max must be a number or 'auto'");
    }
    if (pos != cfg.t_max.size() || !(v > 0.0)) throw UsageError("--t-max must be positive or 'auto'");
    return v;
  }
  if (!(q > 2.0)) throw UsageError("--t-max auto needs Q > 2; pass an explicit --t-max");
  return 2.5 * design_for_Q(n, q).t0;
}

inline Json design_json(const TransferDesign& d) {
  Json j;
  j["n"] = d.n;
  j["k"] = d.k;
  j["mode"] = to_string(d.mode);
  j["epsilon"] = optional_json(d.epsilon);
  j["c"] = optional_json(d.c);
  j["m"] = d.m ? Json(*d.m) : Json(nullptr);
  j["theta0"] = optional_json(d.theta0);
  j["Q"] = d.q;
  j["theta1"] = d.theta1;
  j["theta2"] = d.theta2;
  j["lambda1"] = d.lambda1();
  j["lambda2"] = d.lambda2();
  j["t0"] = d.t0;
  j["endpoint_weight_symmetric"] = d.w1;
  j["endpoint_weight_alternating"] = d.w2;
  j["fidelity_lower_bound"] = d.fidelity_lower_bound;
  j["corollary_satisfied"] = d.corollary_satisfied;
  j["feasible"] = true;
  if (d.window)
    j["m_window"] = Json{{"lower", d.window->lower}, {"upper", d.window->upper}};
  else
    j["m_window"] = nullptr;
  return j;
}

inline Json infeasible_json(int n, double epsilon, const NoFeasibleM& e) {
  const double c = std::numbers::pi * std::sqrt(epsilon) / 20.0;
  Json j;
  j["n"] = n;
  j["k"] = n - 3;
  j["mode"] = "theorem";
  j["epsilon"] = epsilon;
  j["c"] = c;
  j["feasible"] = false;
  j["error"] = "NoFeasibleM";
  j["m_window"] = Json{{"lower", e.lower()}, {"upper", e.upper()}};
  j["guaranteed_feasible_k"] = e.min_k();
  j["guaranteed_feasible_k_epsilon"] = static_cast<double>(e.min_k()) * epsilon;
  return j;
}

class Output {
public:
  Output(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw UsageError("cannot open output file " + path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

private:
  std::ofstream file_;
  std::ostream* out_;
};

inline void write_curve_csv(std::ostream& os, const FidelityCurve& c, const std::string& label = {}) {
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    if (!label.empty()) os << label << ',';
    os << fmt_double(c.times[i]) << ',' << fmt_double(c.values[i]) << '\n';
  }
}

// --- commands --------------------------------------------------------------

inline int cmd_design(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const int n = single_n(cfg);
  const DesignMode mode = parse_mode(cfg.mode);
  Output sink(cfg.output, out);
  const bool csv = cfg.format == "csv";
  if (!cfg.format.empty() && cfg.format != "json" && !csv)
    throw UsageError("--format must be csv or json");

  TransferDesign d;
  if (mode == DesignMode::theorem) {
    if (cfg.epsilon.size() != 1) throw UsageError("design --mode theorem requires --epsilon");
    if (!cfg.q.empty()) throw UsageError("--q is not used in theorem mode");
    try {
      d = design_theorem(n, cfg.epsilon.front());
    } catch (const NoFeasibleM& e) {
      err << "NoFeasibleM: " << e.what() << '\n';
      sink.stream() << infeasible_json(n, cfg.epsilon.front(), e).dump(2) << '\n';
      return kExitInfeasible;
    }
  } else {
    std::optional<double> eps;
    if (cfg.epsilon.size() == 1) eps = cfg.epsilon.front();
    d = design_for_Q(n, single_q(cfg), eps);
  }
  if (csv) {
    sink.stream() << "n,k,mode,q,theta1,theta2,t0,fidelity_lower_bound,corollary_satisfied\n"
                  << d.n << ',' << d.k << ',' << to_string(d.mode) << ',' << fmt_double(d.q) << ','
                  << fmt_double(d.theta1) << ',' << fmt_double(d.theta2) << ','
                  << fmt_double(d.t0) << ',' << fmt_double(d.fidelity_lower_bound) << ','
                  << (d.corollary_satisfied ? "true" : "false") << '\n';
  } else {
    sink.stream() << design_json(d).dump(2) << '\n';
  }
  return kExitOk;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const int n = single_n(cfg);
  const double q = single_q(cfg);
  if (cfg.samples < 2) throw UsageError("--samples must be at least 2");
  const double t_max = resolve_t_max(cfg, n, q);
  Output sink(cfg.output, out);

  const auto spec = endpoint_spectrum(build_hamiltonian({n, q, cfg.d}));
  const auto curve = fidelity_curve(spec, 0.0, t_max, cfg.samples);
  if (cfg.format == "json") {
    Json j{{"n", n}, {"q", q}, {"d", cfg.d}, {"t", curve.times}, {"fidelity", curve.values}};
    sink.stream() << j.dump() << '\n';
  } else {
    sink.stream() << "t,fidelity\n";
    write_curve_csv(sink.stream(), curve);
  }
  const auto w = window_at_threshold(curve, cfg.threshold);
  err << "peak fidelity " << fmt_double(w.peak_value) << " at t=" << fmt_double(w.peak_time) << '\n';
  return kExitOk;
}

class Report {
public:
  explicit Report(std::ostream& os) : os_(os) {}
  void pass(const std::string& name, const std::string& detail) { line("PASS", name, detail); }
  void fail(const std::string& name, const std::string& detail) {
    ++failures_;
    line("FAIL", name, detail);
  }
  void skip(const std::string& name, const std::string& detail) { line("SKIP", name, detail); }
  void check(bool ok, const std::string& name, const std::string& detail) {
    ok ? pass(name, detail) : fail(name, detail);
  }
  int failures() const { return failures_; }

private:
  void line(const char* tag, const std::string& name, const std::string& detail) {
    os_ << tag << ' ' << name << ": " << detail << '\n';
  }
  std::ostream& os_;
  int failures_ = 0;
};

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const int n = single_n(cfg);
  const double q = single_q(cfg);
  Output sink(cfg.output, out);
  Report report(sink.stream());
  const auto h = build_hamiltonian({n, q, cfg.d});
  const double scale = std::max(1.0, q);

  // Gershgorin / Sturm counts
  const auto count_in = [&](double lo, double hi) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return sturm_count(h, std::nextafter(hi, inf)) - sturm_count(h, lo);
  };
  if (q > 4.0) {
    const auto outer = count_in(q - 2.0, q + 2.0);
    const auto bulk = sturm_count(h, 2.0) - sturm_count(h, std::nextafter(-2.0, 3.0));
    report.check(outer == 2 && bulk == static_cast<std::size_t>(n - 2), "gershgorin_counts",
                 std::to_string(outer) + " in [Q-2,Q+2], " + std::to_string(bulk) + " in (-2,2)");
  } else {
    report.skip("gershgorin_counts", "discs overlap for Q <= 4");
  }

  const auto decomp = full_decomposition(h);
  const std::size_t expected_outliers = q > 4.0 ? 2 : 0;
  report.check(decomp.outlier_indices.size() == expected_outliers, "outliers",
               std::to_string(decomp.outlier_indices.size()) + " outlier eigenvalues");

  double worst_res = 0.0;
  double worst_parity = 0.0;
  for (std::size_t j = 0; j < decomp.size(); ++j) {
    const auto& v = decomp.eigenvectors[j];
    worst_res = std::max(worst_res, qst::detail::residual_norm(h, v, decomp.eigenvalues[j]));
    const double sign = decomp.parities[j] == Parity::symmetric ? 1.0 : -1.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      worst_parity = std::max(worst_parity, std::abs(v[v.size() - 1 - i] - sign * v[i]));
  }
  report.check(worst_res <= residual_target(h), "residuals", "max " + fmt_double(worst_res));
  report.check(worst_parity <= 1e-8, "parity", "max reflection defect " + fmt_double(worst_parity));

  double worst_complete = 0.0;
  for (std::size_t m = 0; m < decomp.size(); ++m) {
    double acc = 0.0;
    for (const auto& v : decomp.eigenvectors) acc += v[m] * v[m];
    worst_complete = std::max(worst_complete, std::abs(acc - 1.0));
  }
  report.check(worst_complete <= 1e-8, "completeness", "max defect " + fmt_double(worst_complete));

  if (decomp.size() <= 2000) {
    double worst_gram = 0.0;
    for (std::size_t a = 0; a < decomp.size(); ++a)
      for (std::size_t b = a; b < decomp.size(); ++b) {
        const auto& x = decomp.eigenvectors[a];
        const auto& y = decomp.eigenvectors[b];
        const double dot = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        worst_gram = std::max(worst_gram, std::abs(dot - (a == b ? 1.0 : 0.0)));
      }
    report.check(worst_gram <= 1e-8, "orthonormality", "max |G - I| " + fmt_double(worst_gram));
  } else {
    report.skip("orthonormality", "n > 2000");
  }

  if (cfg.d != 2) {
    report.skip("closed_form_duality", "closed forms hold for d = 2 only");
    report.skip("mode_vector_residual", "closed forms hold for d = 2 only");
  } else {
    double worst_dual = 0.0;
    double worst_mode = 0.0;
    std::size_t checked = 0;
    const auto zero = zero_mode_index(decomp.eigenvalues, n);
    for (std::size_t j = 0; j < decomp.size(); ++j) {
      const double lambda = decomp.eigenvalues[j];
      if (!(std::abs(lambda) < 2.0) || j == zero) continue;
      const double theta = std::acos(lambda / 2.0);
      const Parity parity = decomp.parities[j];
      const auto mv = mode_vector(theta, parity, n - 3);
      const long double wide = bulk_angle(h, decomp.eigenvectors[j]);
      worst_dual = std::max(worst_dual, static_cast<double>(std::abs(mode_function(parity, wide, n - 3) - q)));
      worst_mode = std::max(worst_mode, qst::detail::residual_norm(h, mv.vector, mv.mode.lambda));
      ++checked;
    }
    report.check(worst_dual <= 1e-8 * scale, "closed_form_duality",
                 std::to_string(checked) + " bulk modes, max |S or A - Q| " + fmt_double(worst_dual));
    report.check(worst_mode <= 1e-10 * scale, "mode_vector_residual",
                 "max " + fmt_double(worst_mode));
    if (zero) {
      const auto z = zero_mode_vector(n);
      const double lambda = decomp.eigenvalues[*zero];
      const auto& v = decomp.eigenvectors[*zero];
      const double overlap = std::abs(std::inner_product(z.begin(), z.end(), v.begin(), 0.0));
      const double res = qst::detail::residual_norm(h, z, 0.0);
      report.check(std::abs(lambda) <= 1e-10 * scale && res <= 1e-10 * scale && std::abs(overlap - 1.0) <= 1e-8,
                   "zero_mode", "lambda " + fmt_double(lambda) + ", overlap " + fmt_double(overlap));
    } else {
      report.skip("zero_mode", "even n has no zero eigenvalue");
    }
  }

  if (n <= 12) {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> times(0.0, 100.0);
    const auto ends = endpoints(decomp);
    double worst_amp = 0.0;
    double worst_unitary = 0.0;
    for (int s = 0; s < 20; ++s) {
      const double t = times(rng);
      const auto u = expm_oracle(h, t);
      worst_amp = std::max(worst_amp, std::abs(transfer_amplitude(ends, t) - u(0, n - 1)));
      const auto row = propagator_row(decomp, 1, t);
      double acc = 0.0;
      for (const auto& z : row) acc += std::norm(z);
      worst_unitary = std::max(worst_unitary, std::abs(acc - 1.0));
      const auto uu = u * u.adjoint();
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          worst_unitary = std::max(worst_unitary, std::abs(uu(a, b) - (a == b ? 1.0 : 0.0)));
    }
    report.check(worst_amp <= 1e-8, "oracle_equivalence", "max |spectral - expm| " + fmt_double(worst_amp));
    report.check(worst_unitary <= 1e-8, "unitarity", "max defect " + fmt_double(worst_unitary));
  } else {
    report.skip("oracle_equivalence", "dense oracle runs for n <= 12 only");
  }

  if (report.failures() > 0) err << report.failures() << " check(s) failed\n";
  return report.failures() == 0 ? kExitOk : kExitError;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const DesignMode mode = parse_mode(cfg.mode);
  const auto& params = mode == DesignMode::theorem ? cfg.epsilon : cfg.q;
  Output sink(cfg.output, out);
  std::ostream& os = sink.stream();
  os << "n,k,mode,epsilon,q,c,m,theta0,theta1,theta2,t0,endpoint_weight_symmetric,"
        "endpoint_weight_alternating,fidelity_lower_bound,corollary_satisfied,feasible,"
        "fidelity_at_t0,peak_time,peak_fidelity\n";

  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  for (int n : cfg.n) {
    for (double p : params) {
      TransferDesign d;
      try {
        d = mode == DesignMode::theorem ? design_theorem(n, p) : design_for_Q(n, p);
      } catch (const NoFeasibleM& e) {
        err << "n=" << n << " epsilon=" << fmt_double(p) << ": " << e.what() << '\n';
        os << n << ',' << n - 3 << ",theorem," << fmt_double(p) << ",,,,,,,,,,,false,false,,,\n";
        continue;
      }
      const auto spec = endpoint_spectrum(build_hamiltonian(d.chain()));
      const auto peak = peak_search(spec, d.t0, 0.1 * d.t0);
      os << d.n << ',' << d.k << ',' << to_string(d.mode) << ',' << opt(d.epsilon) << ','
         << fmt_double(d.q) << ',' << opt(d.c) << ',' << (d.m ? std::to_string(*d.m) : "") << ','
         << opt(d.theta0) << ',' << fmt_double(d.theta1) << ',' << fmt_double(d.theta2) << ','
         << fmt_double(d.t0) << ',' << fmt_double(d.w1) << ',' << fmt_double(d.w2) << ','
         << fmt_double(d.fidelity_lower_bound) << ',' << (d.corollary_satisfied ? "true" : "false")
         << ",true," << fmt_double(fidelity(spec, d.t0)) << ',' << fmt_double(peak.time) << ','
         << fmt_double(peak.fidelity) << '\n';
    }
  }
  return kExitOk;
}

inline int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const int n = single_n(cfg);
  const double q = single_q(cfg);
  if (cfg.samples < 2) throw UsageError("--samples must be at least 2");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw UsageError("--threshold must lie in (0, 1)");
  const double t_max = resolve_t_max(cfg, n, q);
  Output sink(cfg.output, out);

  struct Run {
    std::string label;
    int d;
    FidelityCurve curve;
    TransferWindow window;
  };
  std::vector<Run> runs;
  for (int d : {2, cfg.d}) {
    const auto spec = endpoint_spectrum(build_hamiltonian({n, q, d}));
    auto curve = fidelity_curve(spec, 0.0, t_max, cfg.samples);
    auto window = window_at_threshold(curve, cfg.threshold);
    runs.push_back({"d" + std::to_string(d), d, std::move(curve), std::move(window)});
  }

  if (cfg.format == "json") {
    Json j;
    j["n"] = n;
    j["q"] = q;
    j["threshold"] = cfg.threshold;
    j["protocols"] = Json::array();
    for (const auto& r : runs) {
      Json intervals = Json::array();
      for (const auto& [a, b] : r.window.intervals) intervals.push_back({a, b});
      j["protocols"].push_back(Json{{"protocol", r.label},
                                    {"d", r.d},
                                    {"peak_time", r.window.peak_time},
                                    {"peak_fidelity", r.window.peak_value},
                                    {"window_width", r.window.peak_width()},
                                    {"intervals", intervals},
                                    {"t", r.curve.times},
                                    {"fidelity", r.curve.values}});
    }
    sink.stream() << j.dump() << '\n';
  } else {
    sink.stream() << "protocol,t,fidelity\n";
    for (const auto& r : runs) write_curve_csv(sink.stream(), r.curve, r.label);
  }
  for (const auto& r : runs)
    err << "window protocol=" << r.label << " threshold=" << fmt_double(cfg.threshold)
        << " width=" << fmt_double(r.window.peak_width()) << " peak_time=" << fmt_double(r.window.peak_time)
        << " peak_fidelity=" << fmt_double(r.window.peak_value) << '\n';
  return kExitOk;
}

}  // namespace detail

/// Parses argv and runs one command. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design and verify end-to-end state transfer on loop-weighted XX chains", "qst"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub, bool list_n) {
    auto* n_opt = sub->add_option("--n", cfg.n, "chain length");
    if (list_n)
      n_opt->delimiter(',');
    else
      n_opt->expected(1);
    sub->add_option("--output", cfg.output, "write data to this file instead of stdout");
    sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* design = app.add_subcommand("design", "design parameters (theorem or relaxed mode)");
  add_common(design, false);
  design->add_option("--epsilon", cfg.epsilon, "target infidelity")->expected(1);
  design->add_option("--q", cfg.q, "loop weight (relaxed mode)")->expected(1);
  design->add_option("--mode", cfg.mode, "theorem or relaxed");

  auto* simulate = app.add_subcommand("simulate", "fidelity curve |U(t)_{1,n}|");
  add_common(simulate, false);
  simulate->add_option("--q", cfg.q, "loop weight")->expected(1);
  simulate->add_option("--d", cfg.d, "loop offset from each end");
  simulate->add_option("--t-max", cfg.t_max, "end of time window, or 'auto' (2.5 t0)");
  simulate->add_option("--samples", cfg.samples, "number of time samples");
  simulate->add_option("--threshold", cfg.threshold, "threshold for the peak summary");

  auto* verify = app.add_subcommand("verify", "numerical checks of the spectral analysis");
  add_common(verify, false);
  verify->add_option("--q", cfg.q, "loop weight")->expected(1);
  verify->add_option("--d", cfg.d, "loop offset from each end");

  auto* sweep = app.add_subcommand("sweep", "designs over a grid of (n, epsilon) or (n, q)");
  add_common(sweep, true);
  sweep->add_option("--epsilon", cfg.epsilon, "comma-separated epsilons (theorem)")->delimiter(',');
  sweep->add_option("--q", cfg.q, "comma-separated loop weights (relaxed)")->delimiter(',');
  sweep->add_option("--mode", cfg.mode, "theorem or relaxed");

  auto* compare = app.add_subcommand("compare", "d = 2 placement against another offset");
  add_common(compare, false);
  compare->add_option("--q", cfg.q, "loop weight")->expected(1);
  cfg.d = 2;
  compare->add_option("--d", cfg.d, "offset of the comparison placement (default 3)");
  compare->add_option("--t-max", cfg.t_max, "end of time window, or 'auto' (2.5 t0)");
  compare->add_option("--samples", cfg.samples, "number of time samples");
  compare->add_option("--threshold", cfg.threshold, "window threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitError;
  }

  try {
    if (design->parsed()) {
      cfg.command = "design";
      return detail::cmd_design(cfg, out, err);
    }
    if (simulate->parsed()) {
      cfg.command = "simulate";
      return detail::cmd_simulate(cfg, out, err);
    }
    if (verify->parsed()) {
      cfg.command = "verify";
      return detail::cmd_verify(cfg, out, err);
    }
    if (sweep->parsed()) {
      cfg.command = "sweep";
      return detail::cmd_sweep(cfg, out, err);
    }
    if (compare->parsed()) {
      cfg.command = "compare";
      if (compare->count("--d") == 0) cfg.d = 3;
      return detail::cmd_compare(cfg, out, err);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace qst::cli
