#include "aadj/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace aadj {

namespace {

std::string with_t(double t, const std::string& what) {
  std::ostringstream os;
  os.precision(17);
  os << "evaluation failed at t=" << t << ": " << what;
  return os.str();
}

}  // namespace

EvaluationError::EvaluationError(double t, const std::string& what) : Error(with_t(t, what)), t_(t) {}

double fd_forward(double g0, double gh, double h) { return (gh - g0) / h; }

double richardson_one_sided(double d_h, double d_h2) { return 2.0 * d_h2 - d_h; }

double richardson_linear(double h1, double d1, double h2, double d2) { return (h1 * d2 - h2 * d1) / (h1 - h2); }

double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

int threads_from_env() {
  const char* env = std::getenv("AADJ_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return std::max(1, n);
}

ValueCurve sample_curve(const ProblemAdapter& adapter, std::span<const double> ts, int threads) {
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0)) throw PreconditionError("sample_curve: sample points must be positive");
    if (i > 0 && !(ts[i] > ts[i - 1])) throw PreconditionError("sample_curve: sample points must be increasing");
  }
  ValueCurve curve;
  curve.ts.push_back(0.0);
  curve.ts.insert(curve.ts.end(), ts.begin(), ts.end());
  curve.gs.assign(curve.ts.size(), 0.0);

  auto eval = [&](std::size_t i) {
    try {
      curve.gs[i] = adapter.value(curve.ts[i]);
    } catch (const EvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError(curve.ts[i], e.what());
    }
  };

  const std::size_t n = curve.ts.size();
  const std::size_t workers =
      adapter.sequential_only() ? 1 : std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) eval(i);
    return curve;
  }

  // Static round-robin partition; each slot is written by exactly one worker.
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) eval(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return curve;
}

DerivativeReport verify(const ProblemAdapter& adapter, std::span<const double> h_levels,
                        const VerifyOptions& options) {
  if (h_levels.size() < 2) throw PreconditionError("verify: at least two step sizes are required");
  std::vector<double> hs(h_levels.begin(), h_levels.end());
  std::sort(hs.begin(), hs.end());
  if (std::adjacent_find(hs.begin(), hs.end()) != hs.end()) {
    throw PreconditionError("verify: step sizes must be distinct");
  }

  DerivativeReport report;
  report.dg0_formula = adapter.dg0_closed_form();

  const ValueCurve curve = sample_curve(adapter, hs, options.threads);
  report.g0 = curve.gs[0];

  // Table ordered from the largest step down.
  for (std::size_t k = hs.size(); k-- > 0;) {
    const double h = curve.ts[k + 1];
    const double g = curve.gs[k + 1];
    report.fd_table.push_back({h, g, fd_forward(report.g0, g, h)});
  }

  const FdRow& coarse = report.fd_table[report.fd_table.size() - 2];
  const FdRow& fine = report.fd_table.back();
  report.richardson = std::abs(coarse.h - 2.0 * fine.h) <= 1e-15 * coarse.h
                          ? richardson_one_sided(coarse.fd, fine.fd)
                          : richardson_linear(coarse.h, coarse.fd, fine.h, fine.fd);
  report.abs_error = std::abs(report.richardson - report.dg0_formula);
  report.rel_error = report.abs_error / (1.0 + std::abs(report.dg0_formula));

  std::vector<double> xs, ys;
  for (const FdRow& row : report.fd_table) {
    xs.push_back(row.h);
    ys.push_back(std::abs(row.fd - report.dg0_formula));
  }
  const double floor = 1e-14 * (1.0 + std::abs(report.dg0_formula));
  const bool resolvable = std::all_of(ys.begin(), ys.end(), [&](double y) { return y > floor; });
  report.observed_order = resolvable ? loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();

  if (options.run_audits) report.audits = adapter.audits();

  report.variant_results = adapter.variant_results();
  for (auto& [name, values] : report.variant_results) {
    if (auto it = values.find("dg0"); it != values.end()) {
      values["rel_error"] = std::abs(report.richardson - it->second) / (1.0 + std::abs(it->second));
    }
  }
  return report;
}

void write_fd_csv(std::ostream& os, const DerivativeReport& report) {
  char buf[96];
  os << "t,g,fd\n";
  for (const FdRow& row : report.fd_table) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", row.h, row.g, row.fd);
    os << buf;
  }
}

bool all_audits_pass(const AuditMap& audits) {
  return std::all_of(audits.begin(), audits.end(), [](const auto& kv) { return kv.second.pass; });
}

}  // namespace aadj
