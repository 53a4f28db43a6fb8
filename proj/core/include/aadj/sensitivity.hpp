#pragma once

// Verification engine for one-sided derivatives of value functions.
//
// A backend exposes g(t) and its closed-form dg(0+) through ProblemAdapter;
// verify() samples g on a set of forward steps, forms difference quotients,
// extrapolates, and collects the backend's hypothesis audits.

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aadj/error.hpp"

namespace aadj {

struct AuditResult {
  bool pass = false;
  double value = 0.0;
  std::string detail;
  std::vector<double> series;  // per-level diagnostics, may be empty
};

using AuditMap = std::map<std::string, AuditResult>;

/// Named groups of scalar results reported alongside the main derivative,
/// e.g. {"as-printed": {"dg0": ...}}.
using VariantMap = std::map<std::string, std::map<std::string, double>>;

class ProblemAdapter {
 public:
  virtual ~ProblemAdapter() = default;

  /// g(t); must be a pure function of t.
  virtual double value(double t) const = 0;
  virtual double dg0_closed_form() const = 0;
  virtual AuditMap audits() const { return {}; }
  virtual VariantMap variant_results() const { return {}; }
  /// Backends whose evaluations are not independent ask for serial sampling.
  virtual bool sequential_only() const { return false; }
};

/// A failure raised while evaluating g at a specific t.
class EvaluationError : public Error {
 public:
  EvaluationError(double t, const std::string& what);
  double t() const { return t_; }

 private:
  double t_;
};

struct ValueCurve {
  std::vector<double> ts;  // ts[0] == 0, then strictly increasing
  std::vector<double> gs;
};

struct FdRow {
  double h = 0.0;
  double g = 0.0;
  double fd = 0.0;
};

struct DerivativeReport {
  double dg0_formula = 0.0;
  double g0 = 0.0;
  std::vector<FdRow> fd_table;  // ordered by decreasing h
  double richardson = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  /// log-log slope of |fd - dg0| against h; NaN when the errors vanish.
  double observed_order = 0.0;
  AuditMap audits;
  VariantMap variant_results;
};

inline const std::vector<double> kDefaultHLevels{1e-2, 5e-3, 2.5e-3, 1.25e-3};

double fd_forward(double g0, double gh, double h);

/// 2·d(h/2) − d(h): removes the O(h) term of a forward difference.
double richardson_one_sided(double d_h, double d_h2);

/// Linear extrapolation to h = 0 from two forward differences at h1 > h2.
double richardson_linear(double h1, double d1, double h2, double d2);

/// Least-squares slope of log(ys) against log(xs); NaN if any y <= 0.
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

/// Parallelism cap from AADJ_THREADS (default 1, minimum 1).
int threads_from_env();

/// Samples g at 0 and at every t in `ts`. Uses up to `threads` workers unless
/// the adapter is sequential-only.
ValueCurve sample_curve(const ProblemAdapter& adapter, std::span<const double> ts, int threads = 1);

struct VerifyOptions {
  int threads = 1;
  bool run_audits = true;
};

DerivativeReport verify(const ProblemAdapter& adapter, std::span<const double> h_levels = kDefaultHLevels,
                        const VerifyOptions& options = {});

/// CSV with header "t,g,fd", one row per step.
void write_fd_csv(std::ostream& os, const DerivativeReport& report);

bool all_audits_pass(const AuditMap& audits);

}  // namespace aadj
