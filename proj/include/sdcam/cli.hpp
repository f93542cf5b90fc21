#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdcam/diagnostics.hpp"
#include "sdcam/problems.hpp"
#include "sdcam/solver.hpp"

namespace sdcam::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitVerification = 3;

inline constexpr int kConfigSchemaVersion = 1;

/// Thrown for malformed configs and flags; maps to the usage exit code.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string family;
  std::optional<std::string> instance_path;  // otherwise generated from (seed, params)
  std::uint64_t seed = 0;
  Instance generated;  // filled by load_problem when no instance path is given
  SolverConfig solver;
  std::optional<Regime> regime;  // default depends on the family
  std::string trace_path;
  std::string summary_path;
};

/// Parses and validates a run config. Unknown keys anywhere are rejected.
/// Solver and schedule fields not given take the family defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Instance named by the config: read from file or generated from its params.
Instance config_instance(const RunConfig& cfg);

/// Regime used for the rate checks when the config does not pick one.
Regime default_regime(const std::string& family);

// ---------------------------------------------------------------------------
// Trace files

inline constexpr const char* kTraceHeader =
    "t,mu_t,beta_t,step_norm,scaled_step,gap,prev_gap,residual,fg_value,h_at_y,H_value,"
    "Theta_value,unsuccessful_this_iter,rel_feas";

/// %.17g formatting, empty cells for absent optional values.
std::string format_double(double v);
void write_trace_csv(std::ostream& out, const Trace& trace);
void save_trace_csv(const std::string& path, const Trace& trace);

/// Columns of a trace CSV by header name.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::vector<double> column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Commands

struct RunOutcome {
  SolveResult result;
  RateConstants constants;
  RateReport report;
  std::string summary_json;
  int exit_code = kExitOk;
};

/// Solves, writes the trace and summary named in the config.
RunOutcome execute_run(const RunConfig& cfg);

/// Summary document for a finished run.
std::string summary_json(const RunConfig& cfg, const SolveResult& res, const RateConstants& k,
                         const RateReport& report);

struct CheckOptions {
  std::string family;
  std::optional<std::string> instance_path;
  std::uint64_t seed = 0;
  int points = 10;
  bool corrupt_gradient = false;  // negative control: perturbs one gradient entry
};

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Oracle, prox and schedule verification for one problem.
std::vector<CheckLine> run_checks(const CheckOptions& opt);

struct SubseqRow {
  std::int64_t T = 0;  // 1-based position in the trace
  std::int64_t t = 0;  // iteration label of that row
  double a_T = 0.0;
  double b_prev = 0.0;
};

inline constexpr const char* kSubseqColumns = "step_norm_sq, scaled_step_sq";

/// select_subsequence on the squared step or scaled step column of a trace.
std::vector<SubseqRow> subsequence_from_trace(const CsvTable& trace, const std::string& column);

/// SHA-256 of a byte string as lowercase hex.
std::string sha256_hex(const std::string& bytes);

/// Full command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace sdcam::cli
