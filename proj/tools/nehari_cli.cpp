// Command-line front end.
//
//   nehari solve    --instance f [--delta r] [--tol r] [--max-iter n]
//                   [--trace csv] [--trace-matrices json] [--json]
//   nehari check    --instance f
//   nehari generate --dim m --support k --seed s [--dominance c] --out f
//   nehari oracle   --instance f
//
// Exit codes: 0 solved/feasible, 1 infeasible, 2 solver precondition
// violated, 3 input error, 4 iteration budget exhausted.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nehari/nehari.hpp"

namespace {

struct SolveArgs {
  std::string instance;
  std::optional<double> delta;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::string> trace;
  std::optional<std::string> trace_matrices;
  bool json = false;
};

struct CheckArgs {
  std::string instance;
};

struct GenerateArgs {
  long dim = 1;
  long support = 1;
  std::uint64_t seed = 0;
  double dominance = 2.0;
  std::string out;
};

struct OracleArgs {
  std::string instance;
};

int do_solve(const SolveArgs& a) {
  const nehari::InstanceFile f = nehari::parse_instance(nehari::read_file(a.instance));
  nehari::SolveRunOptions opts;
  opts.overrides.delta = a.delta;
  opts.overrides.tol = a.tol;
  opts.overrides.max_iter = a.max_iter;
  opts.trace_path = a.trace;
  opts.trace_matrices_path = a.trace_matrices;
  const nehari::SolveRun run = nehari::run_solve(f, opts);
  if (a.json)
    std::cout << nehari::solve_report_json(run).dump(2) << "\n";
  else
    std::cout << nehari::solve_report_text(run);
  return run.exit_code;
}

int do_check(const CheckArgs& a) {
  const nehari::InstanceFile f = nehari::parse_instance(nehari::read_file(a.instance));
  const nehari::CheckRun run = nehari::run_check(f);
  std::cout << nehari::check_report_text(run);
  return run.exit_code;
}

int do_generate(const GenerateArgs& a) {
  const nehari::InstanceFile f = nehari::generate_instance(
      static_cast<nehari::Index>(a.dim), static_cast<nehari::Index>(a.support), a.seed,
      a.dominance);
  nehari::write_file_atomic(a.out, nehari::emit_instance(f));
  std::cout << "wrote " << a.out << " (dim " << a.dim << ", support " << a.support
            << ", seed " << a.seed << ", dominance " << a.dominance << ")\n";
  return nehari::kExitSuccess;
}

int do_oracle(const OracleArgs& a) {
  const nehari::InstanceFile f = nehari::parse_instance(nehari::read_file(a.instance));
  const double value = nehari::scalar_aak_oracle(f.sequence());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::cout << buf << "\n";
  return nehari::kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimal strongly positive deviation bounds for block Hankel data"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "compute the minimal bound for an instance");
  solve->add_option("--instance", solve_args.instance, "instance file (JSON)")->required();
  solve->add_option("--delta", solve_args.delta, "strong-positivity margin, relative to scale");
  solve->add_option("--tol", solve_args.tol, "convergence tolerance, relative to scale");
  solve->add_option("--max-iter", solve_args.max_iter, "iteration budget");
  solve->add_option("--trace", solve_args.trace, "write a per-iterate CSV trace here");
  solve->add_option("--trace-matrices", solve_args.trace_matrices,
                    "write the full iterate matrices (JSON) here");
  solve->add_flag("--json", solve_args.json, "machine-readable report on stdout");

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "test feasibility of the instance's rho");
  check->add_option("--instance", check_args.instance, "instance file (JSON)")->required();

  GenerateArgs gen_args;
  CLI::App* generate = app.add_subcommand("generate", "write a random solvable instance");
  generate->add_option("--dim", gen_args.dim, "block dimension m")->required();
  generate->add_option("--support", gen_args.support, "number of coefficient blocks K")
      ->required();
  generate->add_option("--seed", gen_args.seed, "RNG seed")->required();
  generate->add_option("--dominance", gen_args.dominance,
                       "leading-coefficient dominance factor (>= 1, default 2)");
  generate->add_option("--out", gen_args.out, "output instance path")->required();

  OracleArgs oracle_args;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "closed-form minimal squared bound for scalar instances");
  oracle->add_option("--instance", oracle_args.instance, "instance file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return nehari::kExitInputError;
  }

  try {
    if (solve->parsed()) return do_solve(solve_args);
    if (check->parsed()) return do_check(check_args);
    if (generate->parsed()) return do_generate(gen_args);
    if (oracle->parsed()) return do_oracle(oracle_args);
  } catch (const nehari::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nehari::kExitPrecondition;
  } catch (const nehari::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nehari::kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nehari::kExitInputError;
  }
  return nehari::kExitInputError;
}
