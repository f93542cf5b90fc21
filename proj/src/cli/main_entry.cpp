#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <map>
#include <set>
#include <sstream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <thread>

#include "sdcam/cli.hpp"

namespace sdcam::cli {

namespace {

void setup_logging() {
  auto logger = spdlog::get("sdcam");
  if (!logger) {
    logger = spdlog::stderr_color_mt("sdcam");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("SDCAM_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else throw UsageError("SDCAM_LOG_LEVEL must be error, info or debug (got '" + level + "')");
}

struct GenFlags {
  std::string family;
  std::uint64_t seed = 0;
  std::string out;
  QcqpParams qcqp;
  MimoParams mimo;
  MlpParams mlp;
  std::string layer_dims;
  std::string activation = "tanh";
};

std::vector<Index> parse_dims(const std::string& text) {
  std::vector<Index> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      dims.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw UsageError("--layer-dims expects comma-separated integers, got '" + text + "'");
    }
  }
  return dims;
}

int cmd_gen(CLI::App& sub, GenFlags& g) {
  // Flags belong to one family; reject the others.
  static const std::map<std::string, std::set<std::string>> owned = {
      {"qcqp", {"--n", "--m", "--alpha", "--p", "--scale0"}},
      {"mimo", {"--n", "--m", "--p-psk", "--lambda1", "--lambda2", "--r-lo", "--noise"}},
      {"mlp", {"--layer-dims", "--activation", "--n-samples", "--p", "--lambda", "--source",
               "--idx-images", "--idx-labels"}}};
  const auto& mine = owned.at(g.family);
  for (const auto* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (opt->count() == 0 || name == "--seed" || name == "--out" || name == "family") continue;
    if (!mine.count(name)) throw UsageError(name + " does not apply to " + g.family);
  }

  Instance inst;
  try {
    if (g.family == "qcqp") {
      inst = qcqp_generate(g.seed, g.qcqp);
    } else if (g.family == "mimo") {
      // --n and --m are parsed into the qcqp slots.
      MimoParams prm = g.mimo;
      if (sub.get_option("--n")->count()) prm.n = g.qcqp.n;
      if (sub.get_option("--m")->count()) prm.m = g.qcqp.m;
      inst = mimo_generate(g.seed, prm);
    } else {
      MlpParams prm = g.mlp;
      if (!g.layer_dims.empty()) prm.layer_dims = parse_dims(g.layer_dims);
      prm.activation = parse_activation(g.activation);
      if (sub.get_option("--p")->count()) prm.p = g.qcqp.p;
      inst = mlp_generate(g.seed, prm);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::string text = write_instance_json(inst) + "\n";
  std::ofstream out(g.out, std::ios::binary);
  if (!out) throw UsageError("cannot open " + g.out + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + g.out);
  std::cout << "sha256 " << sha256_hex(text) << "  " << g.out << "\n";
  spdlog::info("gen: wrote {} instance (seed {}) to {}", g.family, g.seed, g.out);
  return kExitOk;
}

int run_one(const std::string& path) {
  const RunConfig cfg = load_run_config(path);
  const RunOutcome out = execute_run(cfg);
  std::cout << path << ": status=" << to_string(out.result.status)
            << " rows=" << out.result.trace.size()
            << " trials=" << out.result.final_state.trial_count
            << " violations=" << out.report.violations.size() << " trace=" << cfg.trace_path
            << "\n";
  return out.exit_code;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const NumericalFailure*>(&e)) return kExitNumerical;
  if (dynamic_cast<const InvariantViolation*>(&e)) return kExitVerification;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitUsage;
  return kExitNumerical;
}

int cmd_run(const std::string& config, const std::vector<std::string>& sweep, int jobs) {
  if (config.empty() == sweep.empty()) throw UsageError("run: give exactly one of --config or --sweep");
  if (!config.empty()) return run_one(config);

  // Each config is parsed up front so output collisions fail before any work.
  std::set<std::string> traces;
  for (const auto& path : sweep) {
    const RunConfig cfg = load_run_config(path);
    if (!traces.insert(cfg.trace_path).second)
      throw UsageError("run: two sweep configs write the same trace " + cfg.trace_path);
  }
  if (jobs < 1) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<int> codes(sweep.size(), kExitOk);
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k = next++; k < sweep.size(); k = next++) {
      try {
        codes[k] = run_one(sweep[k]);
      } catch (const std::exception& e) {
        std::lock_guard lock(io);
        spdlog::error("{}: {}", sweep[k], e.what());
        codes[k] = exit_code_for(e);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min<int>(jobs, static_cast<int>(sweep.size())); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  int worst = kExitOk;
  for (int c : codes) worst = std::max(worst, c);
  return worst;
}

int cmd_check(const CheckOptions& opt) {
  const auto lines = run_checks(opt);
  bool ok = true;
  for (const auto& l : lines) {
    std::cout << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << "\n";
    ok = ok && l.pass;
  }
  return ok ? kExitOk : kExitVerification;
}

int cmd_subseq(const std::string& trace_path, const std::string& column, const std::string& out_path) {
  std::ifstream in(trace_path);
  if (!in) throw UsageError("cannot open trace " + trace_path);
  CsvTable table;
  try {
    table = read_csv(in);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  std::vector<SubseqRow> rows;
  try {
    rows = subsequence_from_trace(table, column);
  } catch (const UsageError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw UsageError("cannot open " + out_path + " for writing");
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "T,t,a_T,b_T_minus_1\n";
  for (const auto& r : rows)
    out << r.T << ',' << r.t << ',' << format_double(r.a_T) << ',' << format_double(r.b_prev) << '\n';
  spdlog::info("subseq: {} of {} indices selected", rows.size(), table.rows.size());
  return kExitOk;
}

}  // namespace

int main_entry(int argc, char** argv) {
  try {
    setup_logging();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Single-loop successive DC approximation solver"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  GenFlags g;
  auto* gen = app.add_subcommand("gen", "Generate an instance file");
  gen->set_help_flag("--help", "Print this help message and exit");
  gen->add_option("family", g.family, "qcqp | mimo | mlp")->required()->check(CLI::IsMember({"qcqp", "mimo", "mlp"}));
  gen->add_option("--seed", g.seed, "Generation seed");
  gen->add_option("--out", g.out, "Output instance path")->required();
  gen->add_option("--n", g.qcqp.n, "Dimension (qcqp: variables, mimo: transmitters)");
  gen->add_option("--m", g.qcqp.m, "Constraints (qcqp) or receivers (mimo)");
  gen->add_option("--alpha", g.qcqp.alpha, "qcqp: lp weight");
  gen->add_option("--p", g.qcqp.p, "qcqp, mlp: exponent in (0,1)");
  gen->add_option("--scale0", g.qcqp.scale0, "qcqp: scale of b0");
  gen->add_option("--p-psk", g.mimo.p_psk, "mimo: PSK order");
  gen->add_option("--lambda1", g.mimo.lambda1, "mimo: weight of the radius penalty");
  gen->add_option("--lambda2", g.mimo.lambda2, "mimo: weight of the l1 term");
  gen->add_option("--r-lo", g.mimo.r_lo, "mimo: lower radius bound");
  gen->add_option("--noise", g.mimo.noise, "mimo: noise level");
  gen->add_option("--layer-dims", g.layer_dims, "mlp: comma-separated layer sizes ending in 1");
  gen->add_option("--activation", g.activation, "mlp: tanh | sigmoid");
  gen->add_option("--n-samples", g.mlp.n_samples, "mlp: number of samples");
  gen->add_option("--lambda", g.mlp.lambda, "mlp: l1 weight");
  gen->add_option("--source", g.mlp.source, "mlp: synthetic | idx_files");
  gen->add_option("--idx-images", g.mlp.idx_images, "mlp: IDX image file");
  gen->add_option("--idx-labels", g.mlp.idx_labels, "mlp: IDX label file");

  std::string config;
  std::vector<std::string> sweep;
  int jobs = 0;
  auto* run = app.add_subcommand("run", "Run the solver from a JSON config");
  run->set_help_flag("--help", "Print this help message and exit");
  run->add_option("--config", config, "Run config");
  run->add_option("--sweep", sweep, "Several run configs, solved on a worker pool");
  run->add_option("--jobs", jobs, "Worker threads for --sweep (default: hardware threads)");

  CheckOptions copt;
  std::string check_instance;
  auto* check = app.add_subcommand("check", "Verify oracles, prox operators and schedules");
  check->set_help_flag("--help", "Print this help message and exit");
  check->add_option("family", copt.family, "qcqp | mimo | mlp")->check(CLI::IsMember({"qcqp", "mimo", "mlp"}));
  check->add_option("--instance", check_instance, "Instance file instead of a generated one");
  check->add_option("--seed", copt.seed, "Generation seed");
  check->add_option("--points", copt.points, "Random points for the derivative checks")->check(CLI::PositiveNumber);
  check->add_flag("--corrupt-gradient", copt.corrupt_gradient, "Negative control: perturb one gradient entry");

  std::string trace_path, column, out_path;
  auto* subseq = app.add_subcommand("subseq", "Select the averaged-decrease subsequence of a trace");
  subseq->set_help_flag("--help", "Print this help message and exit");
  subseq->add_option("--trace", trace_path, "Trace CSV")->required();
  subseq->add_option("--column", column, std::string("Sequence: ") + kSubseqColumns)->required();
  subseq->add_option("--out", out_path, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(*gen, g);
    if (*run) return cmd_run(config, sweep, jobs);
    if (*check) {
      if (!check_instance.empty()) copt.instance_path = check_instance;
      if (copt.family.empty() && !copt.instance_path)
        throw UsageError("check: give a family or --instance");
      return cmd_check(copt);
    }
    if (*subseq) return cmd_subseq(trace_path, column, out_path);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace sdcam::cli
