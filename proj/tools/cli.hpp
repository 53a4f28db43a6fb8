#pragma once

// Front end for the aadj tool: scenario files, report emission and the
// subcommand dispatcher. Exit codes: 0 pass, 2 tolerance or audit failure,
// 1 usage/schema/runtime error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aadj/error.hpp"
#include "aadj/quadprog.hpp"
#include "aadj/sensitivity.hpp"
#include "aadj/shapeopt.hpp"
#include "json.hpp"

namespace aadj::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFail = 2;

inline constexpr double kQuadTolerance = 1e-4;
inline constexpr double kShapeTolerance = 2e-2;

const char* version();

/// A schema violation; the message names the source and offending field.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

enum class Kind { kQuad, kShape };

struct Scenario {
  Kind kind = Kind::kQuad;
  std::string id;
  std::vector<double> h_levels;
  std::uint64_t seed = 1;
  std::optional<quad::MatrixPath> path;        // kQuad
  std::optional<shape::ShapeScenario> shape;   // kShape, materialised
  shape::Variant variant = shape::Variant::kCorrected;

  /// Fully expanded scenario; parse_scenario(echo()) reproduces this one.
  Json echo() const;
};

Scenario parse_scenario(const Json& doc, const std::string& source);

/// Built-in id or path to a JSON scenario file.
Scenario load_scenario(const std::string& id_or_file);

/// "<kind> <id>  <description>" per built-in.
std::vector<std::string> list_scenarios();

/// Pretty JSON with 17 significant digits for floats and null for non-finite values.
void write_json(std::ostream& os, const Json& doc);

Json report_json(const Scenario& scenario, const DerivativeReport& report, double elapsed_s);

/// Runs argv (argv[0] is the program name). Output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// As above; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aadj::cli
