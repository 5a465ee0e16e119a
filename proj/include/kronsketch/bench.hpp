#pragma once

#include "kronsketch/io.hpp"
#include "kronsketch/sketch.hpp"
#include "kronsketch/solvers.hpp"
#include "kronsketch/tensor_tree.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kronsketch {

enum class SolverKind { Regression, Spline, LowRank, Baseline };
enum class RecordKind { Init, Update, Query, Label };

std::string_view to_string(SolverKind s);
std::string_view to_string(RecordKind k);
std::optional<SolverKind> parse_solver(std::string_view name);
std::optional<RecordKind> parse_record_kind(std::string_view name);

struct SketchSettings {
  BaseFamily cbase = BaseFamily::OSNAP;
  TensorFamily tbase = TensorFamily::TensorSRHT;
  double eps = 0.5;
  double delta = 0.1;
  double c_factor = 1.0;
  std::uint64_t seed = 0;
  bool adaptive = false;
  std::optional<Index> m;  // overrides the sketch-size rule
  Index osnap_sparsity = 4;
  double baseline_c = 1.0;
};

struct ProblemInstance {
  std::vector<DenseMatrix> factors;
  SparseVector b;
  std::optional<SplineSpec> spline;
  Index rank = 1;
};

struct Scenario {
  std::vector<std::filesystem::path> factor_paths;
  std::filesystem::path label_path;
  SolverKind solver = SolverKind::Regression;
  SketchSettings sketch;
  std::optional<std::filesystem::path> stream_path;
  bool oracle = false;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> spline_L;
  double lambda = 0.0;
  Index rank = 1;
  Index seeds = 1;
  std::optional<std::filesystem::path> resume;     // KTTR1 snapshot to start from
  std::optional<std::filesystem::path> save_tree;  // KTTR1 snapshot written at the end
};

struct BenchRecord {
  Index event = 0;
  RecordKind kind = RecordKind::Init;
  std::int64_t wall_ns = 0;
  Index nodes_recomputed = 0;
  std::optional<double> cost;
  std::optional<double> oracle_cost;
  std::optional<double> ratio;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

struct ReplayOutput {
  std::vector<BenchRecord> records;
  Index m = 0;
  std::optional<TensorTree> tree;  // absent for the baseline solver
};

ProblemInstance load_instance(const Scenario& scenario);

/// Sketch size for a solver: dim = d (regression), sd_lambda(A, L) with
/// eps^-1 scaling (spline; falls back to d when A is too large to form),
/// k (low rank). An explicit settings.m wins.
Index sketch_size(const ProblemInstance& inst, SolverKind solver, const SketchSettings& settings);

/// Initializes the structure, then applies `events` in order. With `oracle`
/// set, each query is also solved exactly and the ratio recorded.
ReplayOutput run_replay(const ProblemInstance& inst, SolverKind solver, const SketchSettings& settings,
                        std::span<const StreamEvent> events, bool oracle,
                        std::optional<TensorTree> resume = std::nullopt);

/// Loads the scenario files and replays them once per seed
/// (seed, seed + 1, ...), concatenating records in seed order.
std::vector<BenchRecord> replay(const Scenario& scenario);

inline constexpr std::string_view kReportHeader = "event,kind,wall_ns,nodes_recomputed,cost,oracle_cost,ratio";

std::string format_report(std::span<const BenchRecord> records);
std::vector<BenchRecord> parse_report(std::string_view csv);
void report(std::span<const BenchRecord> records, const std::filesystem::path& path);

}  // namespace kronsketch
