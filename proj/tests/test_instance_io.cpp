#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace nehari;
namespace ts = test_support;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

InstanceFile scalar_instance(const std::vector<double>& values) {
  InstanceFile f;
  f.dim = 1;
  for (double v : values) f.coefficients.push_back(ts::scalar1(v));
  return f;
}

fs::path scratch_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nehari_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(',', start);
    if (end == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

}  // namespace

TEST_CASE("the documented instance shape parses field by field") {
  const std::string text = R"({
    "format_version": 1,
    "dim": 2,
    "coefficients": [
      [ [[3.0, 0.0], [0.5, -0.25]],
        [[0.5, 0.25], [4.0, 0.0]] ],
      [ [[0.1, 0.2], [0.0, 0.0]],
        [[0.0, 0.0], [-0.3, 0.0]] ]
    ],
    "rho": [ [[2.0, 0.0], [0.0, 0.0]],
             [[0.0, 0.0], [2.0, 0.0]] ],
    "solver": { "delta": 1e-8, "tol": 1e-10, "max_iter": 500 },
    "meta": { "note": "fixture" }
  })";
  const InstanceFile f = parse_instance(text);
  REQUIRE(f.format_version == 1);
  REQUIRE(f.dim == 2);
  REQUIRE(f.coefficients.size() == 2);
  REQUIRE(f.coefficients[0](0, 1) == Complex(0.5, -0.25));
  REQUIRE(f.coefficients[1](1, 1) == Complex(-0.3, 0.0));
  REQUIRE(f.rho.has_value());
  REQUIRE((*f.rho)(0, 0) == Complex(2.0, 0.0));
  REQUIRE(f.solver.delta == 1e-8);
  REQUIRE(f.solver.tol == 1e-10);
  REQUIRE(f.solver.max_iter == 500);
  REQUIRE(f.meta["note"] == "fixture");
  REQUIRE(f.sequence().support() == 2);
}

TEST_CASE("parse diagnostics name the offending JSON path") {
  auto message_of = [](const std::string& text) {
    try {
      parse_instance(text);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };

  REQUIRE_THAT(message_of("[1, 2]"), ContainsSubstring("top level"));
  REQUIRE_THAT(message_of("{nope"), ContainsSubstring("not valid JSON"));
  REQUIRE_THAT(message_of(R"({"dim": 1, "coefficients": [[[[1, 0]]]]})"),
               ContainsSubstring("format_version"));
  REQUIRE_THAT(message_of(R"({"format_version": 2, "dim": 1,
                              "coefficients": [[[[1, 0]]]]})"),
               ContainsSubstring("version 1"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "coefficients": [[[[1, 0]]]]})"),
               ContainsSubstring("dim"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 0,
                              "coefficients": [[[[1, 0]]]]})"),
               ContainsSubstring("dim"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1})"),
               ContainsSubstring("coefficients"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1, "coefficients": []})"),
               ContainsSubstring("coefficients"));
  // Second coefficient has the wrong number of rows.
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1,
                              "coefficients": [[[[1, 0]]], [[[1, 0]], [[2, 0]]]]})"),
               ContainsSubstring("coefficients[1]"));
  // Entry is a bare number, not a [re, im] pair.
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1,
                              "coefficients": [[[3.0]]]})"),
               ContainsSubstring("coefficients[0][0][0]"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1,
                              "coefficients": [[[[1, 0]]]], "rho": [[[1, 0], [2, 0]]]})"),
               ContainsSubstring("rho"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1,
                              "coefficients": [[[[1, 0]]]], "extra": true})"),
               ContainsSubstring("extra"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1,
                              "coefficients": [[[[1, 0]]]],
                              "solver": {"budget": 3}})"),
               ContainsSubstring("solver.budget"));
  REQUIRE_THAT(message_of(R"({"format_version": 1, "dim": 1,
                              "coefficients": [[[[1, 0]]]],
                              "solver": {"max_iter": 1.5}})"),
               ContainsSubstring("max_iter"));
}

TEST_CASE("emission and parsing round-trip bit for bit") {
  InstanceFile f;
  f.dim = 2;
  ComplexMatrix g1(2, 2);
  g1 << Complex(1.0 / 3.0, -0.1), Complex(std::sqrt(2.0), 0.7),
        Complex(std::sqrt(2.0), -0.7), Complex(4.0, 0.0);
  ComplexMatrix g2(2, 2);
  g2 << Complex(0.1, 0.2), Complex(-0.3, 1e-17), Complex(0.0, 0.0),
        Complex(2.0 / 7.0, 0.0);
  f.coefficients = {g1, g2};
  f.rho = ComplexMatrix::Identity(2, 2);
  f.solver.tol = 1e-11;
  f.meta = Json{{"label", "round trip"}};

  const std::string text = emit_instance(f);
  const InstanceFile back = parse_instance(text);
  REQUIRE(back.dim == f.dim);
  REQUIRE(back.coefficients.size() == 2);
  REQUIRE((back.coefficients[0] - g1).norm() == 0.0);
  REQUIRE((back.coefficients[1] - g2).norm() == 0.0);
  REQUIRE((*back.rho - *f.rho).norm() == 0.0);
  REQUIRE(back.solver.tol == 1e-11);
  REQUIRE_FALSE(back.solver.delta.has_value());
  REQUIRE(back.meta == f.meta);

  // Re-emission of the parsed file reproduces the bytes exactly.
  REQUIRE(emit_instance(back) == text);
}

TEST_CASE("instance generation is deterministic and solvable") {
  const InstanceFile a = generate_instance(2, 3, 42, 2.0);
  const InstanceFile b = generate_instance(2, 3, 42, 2.0);
  REQUIRE(emit_instance(a) == emit_instance(b));
  REQUIRE(a.meta["generator"]["seed"] == 42);

  REQUIRE(precondition_check(gram_blocks_at(a.sequence()), SolverConfig{}));

  // A different seed changes the tail.
  const InstanceFile c = generate_instance(2, 3, 43, 2.0);
  REQUIRE(emit_instance(a) != emit_instance(c));

  // Support 1 has no tail at all: the solve is a single constant step.
  const InstanceFile single = generate_instance(2, 1, 7, 2.0);
  REQUIRE(single.coefficients.size() == 1);
  const SolveRun run = run_solve(single);
  REQUIRE(run.exit_code == kExitSuccess);
  REQUIRE(run.result.path == SolvePath::ZeroCoupling);

  REQUIRE_THROWS_AS(generate_instance(0, 1, 1, 2.0), InputError);
  REQUIRE_THROWS_AS(generate_instance(1, 0, 1, 2.0), InputError);
  REQUIRE_THROWS_AS(generate_instance(1, 1, 1, 0.5), InputError);
}

TEST_CASE("status to exit code mapping") {
  REQUIRE(exit_code_for(SolveStatus::Converged) == 0);
  REQUIRE(exit_code_for(SolveStatus::PreconditionFailed) == 2);
  REQUIRE(exit_code_for(SolveStatus::GapPositive) == 4);
  REQUIRE(exit_code_for(SolveStatus::MaxIterations) == 4);
}

TEST_CASE("config resolution: file first, command line wins") {
  InstanceFile f = scalar_instance({2.0, 1.0, 0.0});
  f.solver.delta = 1e-8;
  f.solver.tol = 1e-10;
  f.solver.max_iter = 50;

  SolverOverrides cli;
  cli.tol = 1e-6;
  const SolverConfig cfg = resolve_config(f, cli);
  REQUIRE(cfg.delta == 1e-8);
  REQUIRE(cfg.step_tol == 1e-6);
  REQUIRE(cfg.fix_tol == 1e-6);
  REQUIRE(cfg.max_iter == 50);

  SolverOverrides bad;
  bad.delta = -1.0;
  REQUIRE_THROWS_AS(resolve_config(f, bad), InputError);
}

TEST_CASE("solve runs end to end from an instance file") {
  SECTION("the worked scalar example converges") {
    const SolveRun run = run_solve(scalar_instance({2.0, 1.0, 0.0}));
    REQUIRE(run.exit_code == kExitSuccess);
    REQUIRE(run.result.status == SolveStatus::Converged);
    REQUIRE(run.rho_min.has_value());
    REQUIRE(run.certificate.has_value());
    REQUIRE(run.wall_ms >= 0.0);
    // rho_min is the principal root of the reported square.
    REQUIRE((run.rho_min->mat() * run.rho_min->mat() -
             run.result.rho_sq_min->mat())
                .norm() <= 1e-10);
  }

  SECTION("a precondition violation surfaces as exit code 2") {
    const SolveRun run = run_solve(scalar_instance({1.0, 2.0, 3.0}));
    REQUIRE(run.exit_code == kExitPrecondition);
    REQUIRE_FALSE(run.certificate.has_value());
    REQUIRE_FALSE(run.rho_min.has_value());
  }

  SECTION("the file's own solver block is honoured") {
    InstanceFile f = scalar_instance({2.0, 1.0, 0.0});
    f.solver.max_iter = 2;
    REQUIRE(run_solve(f).exit_code == kExitNoConvergence);
  }

  SECTION("command-line overrides beat the file") {
    InstanceFile f = scalar_instance({2.0, 1.0, 0.0});
    f.solver.max_iter = 2;
    SolveRunOptions opts;
    opts.overrides.max_iter = 200;
    REQUIRE(run_solve(f, opts).exit_code == kExitSuccess);
  }
}

TEST_CASE("trace files carry the orbit exactly") {
  const fs::path csv = scratch_file("trace.csv");
  const fs::path sidecar = scratch_file("trace_matrices.json");
  fs::remove(csv);
  fs::remove(sidecar);

  InstanceFile f = scalar_instance({2.0, 1.0, 0.0});
  SolveRunOptions opts;
  opts.trace_path = csv.string();
  opts.trace_matrices_path = sidecar.string();
  const SolveRun run = run_solve(f, opts);
  REQUIRE(run.exit_code == kExitSuccess);
  const auto& rec = run.result.trace.records;

  REQUIRE(fs::exists(csv));
  REQUIRE_FALSE(fs::exists(csv.string() + ".tmp"));
  REQUIRE_FALSE(fs::exists(sidecar.string() + ".tmp"));

  const std::vector<std::string> lines = split_lines(read_file(csv.string()));
  REQUIRE(lines[0] == "n,parity,inner_min_eig,step_norm,residual_estimate");
  REQUIRE(lines.size() == rec.size() + 1);

  // 17 significant digits: every numeric field reparses to the stored bits.
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const std::vector<std::string> fields = split_fields(lines[i + 1]);
    REQUIRE(fields.size() == 5);
    REQUIRE(std::stoul(fields[0]) == i);
    REQUIRE(std::stoi(fields[1]) == static_cast<int>(i % 2));
    REQUIRE(std::stod(fields[2]) == rec[i].inner_min_eig);
    REQUIRE(std::stod(fields[3]) == rec[i].step_norm);
    REQUIRE(std::stod(fields[4]) == rec[i].residual_estimate);
  }

  // The sidecar holds the full iterates; replaying them offline reproduces
  // the orbit step by step.
  const std::vector<HermitianMatrix> replay =
      parse_trace_matrices(read_file(sidecar.string()), f.dim);
  REQUIRE(replay.size() == rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i)
    REQUIRE((replay[i].mat() - rec[i].q_sq.mat()).norm() == 0.0);

  const GramBlocks g = gram_blocks_at(f.sequence());
  const SolverConfig cfg = resolve_config(f, {});
  for (std::size_t n = 0; n + 1 < replay.size(); ++n) {
    const HermitianMatrix image = iterate_once(replay[n], g, cfg);
    REQUIRE((image.mat() - replay[n + 1].mat()).norm() <=
            1e-12 * run.result.scale);
  }
}

TEST_CASE("feasibility checks run end to end from an instance file") {
  InstanceFile f = scalar_instance({2.0, 1.0, 0.0});

  SECTION("feasible candidate") {
    f.rho = ts::scalar1(2.5);
    const CheckRun run = run_check(f);
    REQUIRE(run.exit_code == kExitSuccess);
    REQUIRE(run.direct.feasible);
    REQUIRE_THAT(run.direct.margin,
                 Catch::Matchers::WithinAbs(6.25 - ts::scalar_210_value(), 1e-9));
    REQUIRE(run.schur.has_value());
    REQUIRE(run.schur->feasible);
    // 6.25 - (5 + 4/5.25)
    REQUIRE_THAT(run.schur->margin,
                 Catch::Matchers::WithinAbs(1.25 - 4.0 / 5.25, 1e-12));
  }

  SECTION("infeasible candidate") {
    f.rho = ts::scalar1(2.0);
    const CheckRun run = run_check(f);
    REQUIRE(run.exit_code == kExitInfeasible);
    REQUIRE_FALSE(run.direct.feasible);
    REQUIRE(run.schur.has_value());
    REQUIRE_FALSE(run.schur->feasible);
  }

  SECTION("missing rho is an input error") {
    REQUIRE_THROWS_AS(run_check(f), InputError);
  }

  SECTION("a non-hermitian rho is rejected at construction") {
    ComplexMatrix skew(1, 1);
    skew(0, 0) = Complex(0.0, 1.0);
    f.rho = skew;
    REQUIRE_THROWS_AS(run_check(f), InputError);
  }

  SECTION("an indefinite rho fails the positivity precondition") {
    f.rho = ts::scalar1(-2.0);
    REQUIRE_THROWS_AS(run_check(f), PreconditionError);
  }
}

TEST_CASE("atomic writes replace the target in one step") {
  const fs::path target = scratch_file("atomic.txt");
  write_file_atomic(target.string(), "first\n");
  REQUIRE(read_file(target.string()) == "first\n");
  write_file_atomic(target.string(), "second\n");
  REQUIRE(read_file(target.string()) == "second\n");
  REQUIRE_FALSE(fs::exists(target.string() + ".tmp"));

  REQUIRE_THROWS_AS(
      write_file_atomic("/nonexistent-dir-for-tests/out.txt", "x"), Error);
  REQUIRE_THROWS_AS(read_file("/nonexistent-dir-for-tests/in.txt"), InputError);
}
