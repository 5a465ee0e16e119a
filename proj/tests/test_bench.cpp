#include "kronsketch/bench.hpp"
#include "kronsketch/io.hpp"
#include "kronsketch/linalg.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace kronsketch;
using kronsketch::testing::Rng;

namespace {

namespace fs = std::filesystem;

// q = 3 instance on disk with a short mixed stream.
struct Fixture {
  fs::path dir;
  Scenario sc;

  explicit Fixture(const std::string& name) {
    dir = fs::temp_directory_path() / ("kronsketch_test_bench_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    Rng rng(99);
    for (int i = 1; i <= 3; ++i) {
      save_matrix(rng.matrix(4, 2), dir / ("A" + std::to_string(i) + ".kmat"));
      sc.factor_paths.push_back(dir / ("A" + std::to_string(i) + ".kmat"));
    }
    save_sparse_vector(SparseVector::from_dense(rng.vector(64)), dir / "b.vec");
    sc.label_path = dir / "b.vec";
    save_matrix(0.1 * rng.matrix(4, 2), dir / "B1.kmat");
    save_matrix(0.1 * rng.matrix(4, 2), dir / "B2.kmat");
    SparseVector db(64);
    db.add(5, 0.5);
    save_sparse_vector(db, dir / "db.vec");
    save_matrix(first_difference(8), dir / "L.kmat");
    write_file(dir / "stream.txt", "Q\nU 1 B1.kmat\nQ\nU 3 B2.kmat\nB db.vec\nQ\n");
    sc.stream_path = dir / "stream.txt";
    sc.sketch.m = 40;
    sc.sketch.seed = 5;
  }
};

std::vector<BenchRecord> strip_time(std::vector<BenchRecord> r) {
  for (auto& x : r) x.wall_ns = 0;
  return r;
}

}  // namespace

TEST_CASE("empty stream yields a single init record") {
  Fixture fx("empty");
  write_file(fx.dir / "none.txt", "# nothing\n");
  fx.sc.stream_path = fx.dir / "none.txt";
  const auto recs = replay(fx.sc);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].kind == RecordKind::Init);
  CHECK(recs[0].event == 0);
  CHECK(recs[0].nodes_recomputed == 3 + 2 + 1);
  CHECK_FALSE(recs[0].cost);
}

TEST_CASE("replay records: kinds, oracle ratios, node bounds") {
  Fixture fx("kinds");
  fx.sc.oracle = true;
  const auto recs = replay(fx.sc);
  REQUIRE(recs.size() == 7);
  const RecordKind want[] = {RecordKind::Init,   RecordKind::Query, RecordKind::Update, RecordKind::Query,
                             RecordKind::Update, RecordKind::Label, RecordKind::Query};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].kind == want[i]);
    CHECK(recs[i].event == static_cast<Index>(i));
    CHECK(recs[i].wall_ns >= 0);
    if (recs[i].kind == RecordKind::Query) {
      REQUIRE(recs[i].ratio);
      CHECK(*recs[i].ratio >= 1.0 - 1e-12);
      CHECK(*recs[i].cost >= *recs[i].oracle_cost * (1 - 1e-12));
    }
    if (recs[i].kind == RecordKind::Update) CHECK(recs[i].nodes_recomputed <= 3);  // depth 2 + 1
  }
}

TEST_CASE("without the oracle the ratio cells are empty") {
  Fixture fx("nooracle");
  const auto recs = replay(fx.sc);
  const std::string csv = format_report(recs);
  CHECK(csv.rfind(std::string(kReportHeader) + "\n", 0) == 0);
  for (const auto& r : recs) {
    CHECK_FALSE(r.ratio);
    CHECK_FALSE(r.oracle_cost);
  }
  CHECK(csv.find(",,\n") != std::string::npos);
}

TEST_CASE("replay is deterministic for a fixed seed and varies across seeds") {
  Fixture fx("det");
  const auto a = strip_time(replay(fx.sc));
  const auto b = strip_time(replay(fx.sc));
  CHECK(a == b);
  fx.sc.sketch.seed = 6;
  const auto c = strip_time(replay(fx.sc));
  CHECK(a != c);

  fx.sc.sketch.seed = 5;
  fx.sc.seeds = 2;
  const auto two = strip_time(replay(fx.sc));
  REQUIRE(two.size() == 2 * a.size());
  CHECK(std::vector<BenchRecord>(two.begin(), two.begin() + a.size()) == a);
  CHECK(std::vector<BenchRecord>(two.begin() + a.size(), two.end()) == c);
}

TEST_CASE("report CSV round trip is exact") {
  Fixture fx("csv");
  fx.sc.oracle = true;
  const auto recs = replay(fx.sc);
  CHECK(parse_report(format_report(recs)) == recs);
  report(recs, fx.dir / "out.csv");
  CHECK(parse_report(read_file(fx.dir / "out.csv")) == recs);
  CHECK_THROWS_AS(parse_report("bad,header\n"), ParseError);
  CHECK_THROWS_AS(parse_report(std::string(kReportHeader) + "\n0,init,1,2,,\n"), ParseError);
  CHECK_THROWS_AS(parse_report(std::string(kReportHeader) + "\n0,bogus,1,2,,,\n"), ParseError);
}

TEST_CASE("all solvers replay the stream") {
  Fixture fx("solvers");
  fx.sc.oracle = true;
  fx.sc.spline_L = fx.dir / "L.kmat";
  fx.sc.lambda = 0.5;
  fx.sc.rank = 2;
  for (auto s : {SolverKind::Regression, SolverKind::Spline, SolverKind::LowRank, SolverKind::Baseline}) {
    fx.sc.solver = s;
    const auto recs = replay(fx.sc);
    CHECK(recs.size() == 7);
    for (const auto& r : recs)
      if (r.kind == RecordKind::Query) CHECK(r.ratio);
  }
  fx.sc.solver = SolverKind::Spline;
  fx.sc.spline_L.reset();
  CHECK_THROWS_AS(replay(fx.sc), Error);
}

TEST_CASE("adaptive replay and snapshot resume") {
  Fixture fx("resume");
  fx.sc.sketch.adaptive = true;
  fx.sc.save_tree = fx.dir / "tree.bin";
  const auto first = replay(fx.sc);
  REQUIRE(fs::exists(fx.dir / "tree.bin"));

  Scenario again = fx.sc;
  again.factor_paths.clear();
  again.resume = fx.dir / "tree.bin";
  again.save_tree.reset();
  write_file(fx.dir / "q.txt", "Q\n");
  again.stream_path = fx.dir / "q.txt";
  const auto recs = replay(again);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].kind == RecordKind::Query);
}

TEST_CASE("stream referencing a missing factor is rejected") {
  Fixture fx("badfactor");
  write_file(fx.dir / "bad.txt", "U 4 B1.kmat\n");
  fx.sc.stream_path = fx.dir / "bad.txt";
  try {
    replay(fx.sc);
    FAIL("expected index error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IndexOutOfRange);
  }
}

TEST_CASE("sketch size defaults follow the solver") {
  Rng rng(3);
  ProblemInstance inst;
  inst.factors = {rng.matrix(4, 2), rng.matrix(4, 2)};
  inst.b = SparseVector(16);
  SketchSettings s;
  s.c_factor = 0.01;
  CHECK(sketch_size(inst, SolverKind::Regression, s) ==
        choose_m(s.cbase, s.tbase, 4, 2, s.eps, s.delta, s.c_factor));
  inst.rank = 1;
  CHECK(sketch_size(inst, SolverKind::LowRank, s) == choose_m(s.cbase, s.tbase, 1, 2, s.eps, s.delta, s.c_factor));
  s.m = 17;
  CHECK(sketch_size(inst, SolverKind::Spline, s) == 17);
  s.m.reset();
  CHECK_THROWS_AS(sketch_size(inst, SolverKind::Spline, s), Error);
  inst.spline = SplineSpec{first_difference(4), 1.0};
  const double sd = statistical_dimension(kron_chain(inst.factors), *inst.spline);
  CHECK(sd < 4.0);
  CHECK(sketch_size(inst, SolverKind::Spline, s) ==
        choose_m(s.cbase, s.tbase, sd, 2, s.eps, s.delta, s.c_factor, EpsPower::Inverse));
}
