#include <gtest/gtest.h>

#include <sslspec/experiments.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

using namespace sslspec;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream f(e.path(), std::ios::binary);
    out[e.path().filename().string()] = std::string(std::istreambuf_iterator<char>(f), {});
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sslspec_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentSpec small_convergence() {
  ExperimentSpec s;
  s.name = "convergence";
  s.params = {{"N", "48"},       {"D", "6"},         {"classes", "3"}, {"K", "2,4"},
              {"seeds", "2"},    {"max_steps", "150"}, {"min_pass", "0"}, {"record_every", "50"}};
  s.seed = 3;
  return s;
}

}  // namespace

TEST(GraphJson, RoundTrip) {
  const RelationGraph g = RelationGraph::from_edges(5, {{0, 1, 0.5}, {1, 4, 2.0}, {2, 3, 1.0 / 3.0}});
  const RelationGraph back = graph_from_json(json::parse(graph_to_json(g).dump()));
  EXPECT_EQ(back.n(), 5);
  EXPECT_EQ(back.to_dense(), g.to_dense());
  const fs::path p = scratch("graph.json");
  save_graph(g, p.string());
  EXPECT_EQ(load_graph(p.string()).to_dense(), g.to_dense());
  fs::remove(p);
}

TEST(GraphJson, Rejections) {
  EXPECT_THROW(graph_from_json(json::parse(R"({"n": 3})")), std::invalid_argument);
  EXPECT_THROW(graph_from_json(json::parse(R"({"n": 3, "edges": [[1, 1, 1.0]]})")), std::invalid_argument);
  EXPECT_THROW(graph_from_json(json::parse(R"({"n": 3, "edges": [[2, 1, 1.0]]})")), std::invalid_argument);
  EXPECT_THROW(graph_from_json(json::parse(R"({"n": 3, "edges": [[0, 1, -1.0]]})")), std::invalid_argument);
  EXPECT_THROW(graph_from_json(json::parse(R"({"n": 3, "edges": [[0, 1]]})")), std::invalid_argument);
  EXPECT_THROW(graph_from_json(json::parse(R"({"n": 2, "edges": [[0, 5, 1.0]]})")), std::invalid_argument);
  EXPECT_THROW(load_graph("/nonexistent/graph.json"), std::runtime_error);
}

TEST(FormatNumber, RoundTripsAndSpecials) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.125}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(TrajectoryCsv, Columns) {
  Trajectory t;
  TrajectoryPoint p;
  p.step = 0;
  p.loss = 1.5;
  p.gap_sq = 0.25;
  p.singular_values = Eigen::Vector2d(3.0, 1.0);
  t.steps.push_back(p);
  std::ostringstream os;
  write_trajectory_csv(os, t, 3);
  EXPECT_EQ(os.str(), "step,loss,gap_sq,sv_1,sv_2,sv_3\n0,1.5,0.25,3,1,nan\n");
}

TEST(SyntheticTask, Examples) {
  const SyntheticTask one = make_synthetic_task(10, 1, 3, 1);
  EXPECT_EQ(one.y, MatrixXd::Ones(10, 1));
  const SyntheticTask t = make_synthetic_task(256, 4, 8, 2);
  const VectorXd s = singular_values(t.y);
  EXPECT_LE((s.array() - 8.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(t.x.rows(), 256);
  EXPECT_EQ(t.x.cols(), 8);
  EXPECT_THROW(make_synthetic_task(3, 4, 2, 0), std::invalid_argument);
}

TEST(SyntheticTask, DeterministicPerSeed) {
  const SyntheticTask a = make_synthetic_task(60, 5, 4, 9), b = make_synthetic_task(60, 5, 4, 9);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.labels, b.labels);
  const SyntheticTask c = make_synthetic_task(60, 5, 4, 10);
  EXPECT_NE(a.labels, c.labels);
}

TEST(Experiments, RegistryNames) {
  const std::vector<std::string> expect{"vicreg-spectrum", "vicreg-landscape", "simclr-collapse",
                                        "bt-collapse",     "convergence",      "probe-optimality",
                                        "rank-bounds",     "graph-estimate-check"};
  EXPECT_EQ(registered_experiments(), expect);
}

TEST(Experiments, UnknownNameListsRegistered) {
  ExperimentSpec s;
  s.name = "no-such";
  try {
    run(s);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    for (const auto& n : registered_experiments()) EXPECT_NE(msg.find(n), std::string::npos) << n;
  }
}

TEST(Experiments, InvalidParams) {
  ExperimentSpec s;
  s.name = "rank-bounds";
  s.params = {{"bogus", "1"}};
  EXPECT_THROW(run(s), std::invalid_argument);
  s.params = {{"K", "sixteen"}};
  EXPECT_THROW(run(s), std::invalid_argument);
  s.params = {{"gamma", "-1"}};
  EXPECT_THROW(run(s), std::invalid_argument);
  s.params = {};
  s.jobs = 0;
  EXPECT_THROW(run(s), std::invalid_argument);
}

TEST(Experiments, RankBoundsReport) {
  ExperimentSpec s;
  s.name = "rank-bounds";
  const fs::path out = scratch("rank_bounds");
  s.output_dir = out.string();
  const ExperimentReport r = run(s);
  EXPECT_TRUE(r.passed());
  EXPECT_FALSE(r.checks.empty());
  const json summary = json::parse(std::ifstream(out / "summary.json"));
  EXPECT_EQ(summary.at("experiment"), "rank-bounds");
  EXPECT_TRUE(summary.at("pass").get<bool>());
  for (const auto& f : summary.at("files")) EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
  EXPECT_EQ(summary.at("spec").at("params").at("K"), r.spec.at("params").at("K"));
  fs::remove_all(out);
}

TEST(Experiments, RerunsAreByteIdentical) {
  for (const std::string name : {"rank-bounds", "graph-estimate-check"}) {
    ExperimentSpec s;
    s.name = name;
    const fs::path a = scratch(name + "_a"), b = scratch(name + "_b");
    s.output_dir = a.string();
    run(s);
    s.output_dir = b.string();
    run(s);
    EXPECT_EQ(read_dir(a), read_dir(b)) << name;
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

TEST(Experiments, JobsDoNotChangeOutput) {
  ExperimentSpec s = small_convergence();
  const fs::path a = scratch("conv_j1"), b = scratch("conv_j3");
  s.output_dir = a.string();
  s.jobs = 1;
  run(s);
  s.output_dir = b.string();
  s.jobs = 3;
  run(s);
  const auto da = read_dir(a), db = read_dir(b);
  EXPECT_GT(da.size(), 1u);
  EXPECT_EQ(da, db);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiments, SeedChangesOutput) {
  ExperimentSpec s = small_convergence();
  const ExperimentReport a = run(s);
  s.seed += 1;
  const ExperimentReport b = run(s);
  EXPECT_NE(a.measured.dump(), b.measured.dump());
}

TEST(Experiments, SpecFromJson) {
  const json j = json::parse(R"({"name": "vicreg-spectrum", "params": {"N": 128, "K": "16", "gamma": [0, 0.1]},
                                  "output_dir": "x", "seed": 4, "jobs": 2})");
  const ExperimentSpec s = spec_from_json(j);
  EXPECT_EQ(s.name, "vicreg-spectrum");
  EXPECT_EQ(s.params.at("N"), "128");
  EXPECT_EQ(s.params.at("K"), "16");
  EXPECT_EQ(s.params.at("gamma"), "0,0.1");
  EXPECT_EQ(s.output_dir, "x");
  EXPECT_EQ(s.seed, 4u);
  EXPECT_EQ(s.jobs, 2);
  EXPECT_THROW(spec_from_json(json::parse(R"({"params": {}})")), std::invalid_argument);
}
