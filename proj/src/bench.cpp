#include "kronsketch/bench.hpp"

#include "kronsketch/linalg.hpp"
#include "kronsketch/oracle.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

namespace kronsketch {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

// Explicit A is formed for the statistical dimension only below this size.
constexpr Index kExplicitLimit = Index{1} << 24;

double ratio_of(double cost, double oracle, double scale) {
  if (oracle > 1e-12 * scale) return cost / oracle;
  return cost <= 1e-8 * scale ? 1.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

std::string_view to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Regression: return "regression";
    case SolverKind::Spline: return "spline";
    case SolverKind::LowRank: return "lowrank";
    case SolverKind::Baseline: return "baseline";
  }
  return "?";
}

std::string_view to_string(RecordKind k) {
  switch (k) {
    case RecordKind::Init: return "init";
    case RecordKind::Update: return "update";
    case RecordKind::Query: return "query";
    case RecordKind::Label: return "label";
  }
  return "?";
}

std::optional<SolverKind> parse_solver(std::string_view name) {
  for (auto s : {SolverKind::Regression, SolverKind::Spline, SolverKind::LowRank, SolverKind::Baseline})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

std::optional<RecordKind> parse_record_kind(std::string_view name) {
  for (auto k : {RecordKind::Init, RecordKind::Update, RecordKind::Query, RecordKind::Label})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

ProblemInstance load_instance(const Scenario& sc) {
  ProblemInstance inst;
  for (const auto& p : sc.factor_paths) inst.factors.push_back(load_matrix(p));
  if (sc.resume) {
    std::ifstream in(*sc.resume, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open snapshot " + sc.resume->string());
    inst.factors = TensorTree::read_snapshot(in).factors();
  }
  if (inst.factors.empty()) throw Error(ErrorKind::Configuration, "no factors given");
  inst.b = load_sparse_vector(sc.label_path);
  if (sc.spline_L) inst.spline = SplineSpec{load_matrix(*sc.spline_L), sc.lambda};
  inst.rank = sc.rank;
  return inst;
}

Index sketch_size(const ProblemInstance& inst, SolverKind solver, const SketchSettings& s) {
  if (s.m) return *s.m;
  const Index q = static_cast<Index>(inst.factors.size());
  Index d = 1, n = 1;
  for (const auto& A : inst.factors) {
    d = checked_mul(d, A.cols());
    n = checked_mul(n, A.rows());
  }
  switch (solver) {
    case SolverKind::Regression:
    case SolverKind::Baseline:
      return choose_m(s.cbase, s.tbase, static_cast<double>(d), q, s.eps, s.delta, s.c_factor);
    case SolverKind::LowRank:
      return choose_m(s.cbase, s.tbase, static_cast<double>(inst.rank), q, s.eps, s.delta, s.c_factor);
    case SolverKind::Spline: {
      if (!inst.spline) throw Error(ErrorKind::Configuration, "spline solver needs --spline-L");
      double dim = static_cast<double>(d);
      if (n <= kExplicitLimit / std::max<Index>(d, 1)) {
        dim = statistical_dimension(kron_chain(inst.factors), *inst.spline);
      } else {
        std::cerr << "note: A too large to form; sizing the spline sketch with d instead of sd_lambda\n";
      }
      return choose_m(s.cbase, s.tbase, dim, q, s.eps, s.delta, s.c_factor, EpsPower::Inverse);
    }
  }
  return 1;
}

ReplayOutput run_replay(const ProblemInstance& inst, SolverKind solver, const SketchSettings& settings,
                        std::span<const StreamEvent> events, bool oracle, std::optional<TensorTree> resume) {
  ReplayOutput out;
  SparseVector b = inst.b;
  Index event = 0;

  if (solver == SolverKind::Baseline) {
    auto t0 = Clock::now();
    LeverageBaseline base(inst.factors, b);
    out.records.push_back({event++, RecordKind::Init, elapsed_ns(t0), 0, {}, {}, {}});
    for (const auto& ev : events) {
      BenchRecord rec{event, RecordKind::Query, 0, 0, {}, {}, {}};
      if (ev.kind == StreamEventKind::Update) {
        const DenseMatrix B = load_matrix(ev.path);
        rec.kind = RecordKind::Update;
        t0 = Clock::now();
        base.update(ev.factor, B);
        rec.wall_ns = elapsed_ns(t0);
      } else if (ev.kind == StreamEventKind::Label) {
        const SparseVector delta = load_sparse_vector(ev.path);
        rec.kind = RecordKind::Label;
        t0 = Clock::now();
        base.update_label(delta);
        rec.wall_ns = elapsed_ns(t0);
      } else {
        t0 = Clock::now();
        const DenseVector x =
            base.query(settings.eps, settings.delta, mix_seed(settings.seed, 0xba5e, event), settings.baseline_c);
        rec.wall_ns = elapsed_ns(t0);
        const DenseVector bd = base.label().to_dense();
        rec.cost = regression_cost(base.factors(), x, bd);
        if (oracle) {
          rec.oracle_cost = exact_kron_regression(base.factors(), bd).opt_cost;
          rec.ratio = ratio_of(*rec.cost, *rec.oracle_cost, bd.norm());
        }
      }
      out.records.push_back(rec);
      ++event;
    }
    return out;
  }

  auto t0 = Clock::now();
  TreeConfig config;
  if (resume) {
    config = resume->config();
  } else {
    config.c_family = settings.cbase;
    config.t_family = settings.tbase;
    config.m = sketch_size(inst, solver, settings);
    config.eps = settings.eps;
    config.delta = settings.delta;
    config.adaptive = settings.adaptive;
    config.seed = settings.seed;
    config.osnap_sparsity = settings.osnap_sparsity;
  }
  TensorTree tree = resume ? std::move(*resume) : TensorTree::initialize(inst.factors, config);
  DenseVector b_sketch = tree.sketch_vector(b);
  out.m = tree.m();
  out.records.push_back({event++, RecordKind::Init, elapsed_ns(t0), tree.recompute_counter(), {}, {}, {}});

  for (const auto& ev : events) {
    BenchRecord rec{event, RecordKind::Query, 0, 0, {}, {}, {}};
    if (ev.kind == StreamEventKind::Update) {
      const DenseMatrix B = load_matrix(ev.path);
      rec.kind = RecordKind::Update;
      t0 = Clock::now();
      tree.apply_update(ev.factor, B);
      rec.wall_ns = elapsed_ns(t0);
      rec.nodes_recomputed = tree.recompute_counter();
    } else if (ev.kind == StreamEventKind::Label) {
      const SparseVector delta = load_sparse_vector(ev.path);
      if (delta.size() != b.size()) throw Error(ErrorKind::Dimension, "label update length mismatch");
      rec.kind = RecordKind::Label;
      t0 = Clock::now();
      for (const auto& [i, v] : delta.entries()) b.add(i, v);
      b_sketch += tree.sketch_vector(delta);
      rec.wall_ns = elapsed_ns(t0);
    } else {
      const auto& factors = tree.factors();
      const DenseVector bd = b.to_dense();
      switch (solver) {
        case SolverKind::Regression: {
          t0 = Clock::now();
          const DenseVector x = regression_query(tree, b_sketch);
          rec.wall_ns = elapsed_ns(t0);
          rec.cost = regression_cost(factors, x, bd);
          if (oracle) {
            rec.oracle_cost = exact_kron_regression(factors, bd).opt_cost;
            rec.ratio = ratio_of(*rec.cost, *rec.oracle_cost, bd.norm());
          }
          break;
        }
        case SolverKind::Spline: {
          if (!inst.spline) throw Error(ErrorKind::Configuration, "spline solver needs --spline-L");
          t0 = Clock::now();
          const DenseVector x = spline_query(tree, b_sketch, *inst.spline);
          rec.wall_ns = elapsed_ns(t0);
          rec.cost = spline_cost(factors, x, bd, *inst.spline);
          if (oracle) {
            rec.oracle_cost = exact_spline(factors, bd, *inst.spline).opt_cost;
            rec.ratio = ratio_of(*rec.cost, *rec.oracle_cost, bd.squaredNorm());
          }
          break;
        }
        case SolverKind::LowRank: {
          t0 = Clock::now();
          const LowRankResult res = lowrank_query(tree, inst.rank);
          rec.wall_ns = elapsed_ns(t0);
          rec.cost = lowrank_cost(res);
          if (oracle) {
            double fro = 1.0;
            for (const auto& A : factors) fro *= A.norm();
            rec.oracle_cost = exact_lowrank(factors, inst.rank);
            rec.ratio = ratio_of(*rec.cost, *rec.oracle_cost, fro);
          }
          break;
        }
        case SolverKind::Baseline: break;
      }
    }
    out.records.push_back(rec);
    ++event;
  }
  out.tree = std::move(tree);
  return out;
}

std::vector<BenchRecord> replay(const Scenario& sc) {
  if (sc.seeds < 1) throw Error(ErrorKind::Configuration, "--seeds must be >= 1");
  const ProblemInstance inst = load_instance(sc);
  std::vector<StreamEvent> events;
  if (sc.stream_path) events = load_stream(*sc.stream_path);
  for (const auto& ev : events)
    if (ev.kind == StreamEventKind::Update && ev.factor >= static_cast<Index>(inst.factors.size()))
      throw Error(ErrorKind::IndexOutOfRange, "stream references factor " + std::to_string(ev.factor + 1) +
                                                  " but only " + std::to_string(inst.factors.size()) + " exist");

  std::vector<BenchRecord> all;
  for (Index t = 0; t < sc.seeds; ++t) {
    SketchSettings settings = sc.sketch;
    settings.seed = sc.sketch.seed + static_cast<std::uint64_t>(t);
    std::optional<TensorTree> resume;
    if (sc.resume && sc.solver != SolverKind::Baseline) {
      std::ifstream in(*sc.resume, std::ios::binary);
      if (!in) throw Error(ErrorKind::Io, "cannot open snapshot " + sc.resume->string());
      resume = TensorTree::read_snapshot(in);
    }
    ReplayOutput run = run_replay(inst, sc.solver, settings, events, sc.oracle, std::move(resume));
    if (sc.save_tree && run.tree && t + 1 == sc.seeds) {
      std::ofstream os(*sc.save_tree, std::ios::binary | std::ios::trunc);
      if (!os) throw Error(ErrorKind::Io, "cannot write snapshot " + sc.save_tree->string());
      run.tree->write_snapshot(os);
    }
    all.insert(all.end(), run.records.begin(), run.records.end());
  }
  return all;
}

std::string format_report(std::span<const BenchRecord> records) {
  std::string out(kReportHeader);
  out += '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double17(*v) : std::string(); };
  for (const auto& r : records) {
    out += std::to_string(r.event) + ',' + std::string(to_string(r.kind)) + ',' + std::to_string(r.wall_ns) + ',' +
           std::to_string(r.nodes_recomputed) + ',' + opt(r.cost) + ',' + opt(r.oracle_cost) + ',' + opt(r.ratio) +
           '\n';
  }
  return out;
}

std::vector<BenchRecord> parse_report(std::string_view csv) {
  std::vector<BenchRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const std::string_view line = csv.substr(pos, end - pos);
    const std::size_t offset = pos;
    pos = end + 1;
    if (line_no++ == 0) {
      if (line != kReportHeader) throw ParseError(offset, "unexpected report header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t s = 0;
    while (true) {
      const std::size_t c = line.find(',', s);
      cells.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (cells.size() != 7) throw ParseError(offset, "report row needs 7 cells");
    auto integer = [&](std::string_view t) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || p != t.data() + t.size()) throw ParseError(offset, "bad integer cell");
      return v;
    };
    auto real = [&](std::string_view t) -> std::optional<double> {
      if (t.empty()) return std::nullopt;
      double v = 0;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || p != t.data() + t.size()) throw ParseError(offset, "bad real cell");
      return v;
    };
    BenchRecord r;
    r.event = integer(cells[0]);
    auto kind = parse_record_kind(cells[1]);
    if (!kind) throw ParseError(offset, "unknown record kind");
    r.kind = *kind;
    r.wall_ns = integer(cells[2]);
    r.nodes_recomputed = integer(cells[3]);
    r.cost = real(cells[4]);
    r.oracle_cost = real(cells[5]);
    r.ratio = real(cells[6]);
    out.push_back(r);
  }
  return out;
}

void report(std::span<const BenchRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw Error(ErrorKind::Configuration, "report needs at least one record");
  write_file(path, format_report(records));
}

}  // namespace kronsketch
