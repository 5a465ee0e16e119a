// kronsketch: replay update streams against the dynamic Kronecker sketch and
// report per-event timings and costs as CSV.

#include "kronsketch/bench.hpp"
#include "kronsketch/io.hpp"
#include "kronsketch/solvers.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace kronsketch;

namespace {

struct GenerateOptions {
  Index q = 3;
  Index n = 8;
  Index d = 2;
  Index updates = 3;
  std::uint64_t seed = 1;
  fs::path dir = "instance";
};

DenseMatrix gaussian(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  DenseMatrix A(rows, cols);
  for (Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  return A;
}

void generate(const GenerateOptions& o) {
  fs::create_directories(o.dir);
  std::mt19937_64 rng(o.seed);
  Index n = 1;
  for (Index i = 0; i < o.q; ++i) {
    save_matrix(gaussian(o.n, o.d, rng), o.dir / ("A" + std::to_string(i + 1) + ".kmat"));
    n = checked_mul(n, o.n);
  }
  Index d = 1;
  for (Index i = 0; i < o.q; ++i) d = checked_mul(d, o.d);
  std::normal_distribution<double> g;
  SparseVector b(n);
  for (Index j = 0; j < n; ++j) b.add(j, g(rng));
  save_sparse_vector(b, o.dir / "b.vec");
  if (d >= 2) save_matrix(first_difference(d), o.dir / "L.kmat");

  std::string stream = "# generated update stream\nQ\n";
  for (Index t = 0; t < o.updates; ++t) {
    const Index factor = static_cast<Index>(rng() % static_cast<std::uint64_t>(o.q));
    const std::string name = "B" + std::to_string(t + 1) + ".kmat";
    save_matrix(gaussian(o.n, o.d, rng, 0.1), o.dir / name);
    stream += "U " + std::to_string(factor + 1) + " " + name + "\nQ\n";
  }
  write_file(o.dir / "stream.txt", stream);
  std::cout << "wrote instance with q=" << o.q << ", n=" << n << ", d=" << d << " to " << o.dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic Kronecker product sketching benchmark harness"};
  app.require_subcommand(0, 1);

  Scenario sc;
  std::vector<std::string> factor_paths;
  std::string label, solver = "regression", cbase = "osnap", tbase = "tensorsrht";
  std::string stream, out, spline_L, resume, save_tree;
  Index m_override = 0;

  app.add_option("--factors", factor_paths, "KMAT files for A_1 ... A_q");
  app.add_option("--label", label, "sparse label vector b");
  app.add_option("--solver", solver, "regression | spline | lowrank | baseline")
      ->check(CLI::IsMember({"regression", "spline", "lowrank", "baseline"}));
  app.add_option("--cbase", cbase, "countsketch | osnap | srht")->check(CLI::IsMember({"countsketch", "osnap", "srht"}));
  app.add_option("--tbase", tbase, "tensorsketch | tensorsrht")->check(CLI::IsMember({"tensorsketch", "tensorsrht"}));
  app.add_option("--eps", sc.sketch.eps, "target accuracy in (0,1)")->check(CLI::Range(1e-9, 1.0 - 1e-9));
  app.add_option("--delta", sc.sketch.delta, "failure probability in (0,1)")->check(CLI::Range(1e-9, 1.0 - 1e-9));
  app.add_option("--cfactor", sc.sketch.c_factor, "constant in front of the sketch-size rule")
      ->check(CLI::PositiveNumber);
  app.add_option("--m", m_override, "explicit sketch size (overrides the rule)");
  app.add_option("--osnap-s", sc.sketch.osnap_sparsity, "OSNAP nonzeros per column")->check(CLI::PositiveNumber);
  app.add_option("--seed", sc.sketch.seed, "base seed");
  app.add_flag("--adaptive", sc.sketch.adaptive, "redraw sketches on every update path");
  app.add_flag("--oracle", sc.oracle, "solve every query exactly and record the ratio");
  app.add_option("--stream", stream, "update stream (U/Q/B lines)");
  app.add_option("--out", out, "CSV report path (stdout when omitted)");
  app.add_option("--spline-L", spline_L, "KMAT penalty matrix L for the spline solver");
  app.add_option("--lambda", sc.lambda, "spline penalty weight")->check(CLI::NonNegativeNumber);
  app.add_option("--rank", sc.rank, "target rank k for the low-rank solver")->check(CLI::PositiveNumber);
  app.add_option("--seeds", sc.seeds, "number of seeds to aggregate")->check(CLI::PositiveNumber);
  app.add_option("--resume", resume, "start from a KTTR1 tree snapshot");
  app.add_option("--save-tree", save_tree, "write the final tree as a KTTR1 snapshot");

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "write a random desk-scale instance and stream");
  gen_cmd->add_option("--q", gen.q, "number of factors")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen.n, "rows per factor")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--d", gen.d, "columns per factor")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--updates", gen.updates, "number of update events");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--dir", gen.dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      generate(gen);
      return EXIT_SUCCESS;
    }
    if (label.empty()) throw CLI::RequiredError("--label");
    if (factor_paths.empty() && resume.empty()) throw CLI::RequiredError("--factors");

    for (const auto& p : factor_paths) sc.factor_paths.emplace_back(p);
    sc.label_path = label;
    sc.solver = *parse_solver(solver);
    sc.sketch.cbase = *parse_base_family(cbase);
    sc.sketch.tbase = *parse_tensor_family(tbase);
    if (m_override > 0) sc.sketch.m = m_override;
    if (!stream.empty()) sc.stream_path = stream;
    if (!out.empty()) sc.out = out;
    if (!spline_L.empty()) sc.spline_L = spline_L;
    if (!resume.empty()) sc.resume = resume;
    if (!save_tree.empty()) sc.save_tree = save_tree;

    const auto records = replay(sc);
    if (sc.out)
      report(records, *sc.out);
    else
      std::cout << format_report(records);

    if (sc.oracle) {
      std::size_t queries = 0, within = 0;
      for (const auto& r : records) {
        if (!r.ratio) continue;
        ++queries;
        if (*r.ratio <= 1.0 + sc.sketch.eps) ++within;
      }
      std::cerr << "queries within 1+eps of the oracle: " << within << "/" << queries << "\n";
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "kronsketch: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
