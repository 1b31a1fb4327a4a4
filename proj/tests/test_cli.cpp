#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "lsdc/error.hpp"
#include "lsdc/experiment.hpp"

using namespace lsdc;

namespace {

const char* kSmall = R"(format = lsdc-config/1
# a quick chain experiment
[source]
kind = chain
count = 3
rho = 0.9
samples = 2000
seed = 5

[coder]
rates = 2
regions = 8

[design]
optimizer = greedy
lambdas = 0, 1e-3, 1e-2
restarts = 2

[baselines]
run = grouping
group_sizes = 1, 3
)";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("lsdc_cli_" + name);
  std::filesystem::remove_all(d);
  return d;
}

std::string replace_line(std::string text, const std::string& prefix, const std::string& line) {
  const auto at = text.find(prefix);
  REQUIRE(at != std::string::npos);
  const auto end = text.find('\n', at);
  return text.replace(at, end - at, line);
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(kSmall);
  CHECK(c.source.source_count == 3);
  CHECK(c.source.rho == 0.9);
  CHECK(c.lambdas == std::vector<double>{0, 1e-3, 1e-2});
  CHECK(c.optimizer == OptimizerChoice::greedy);
  CHECK(c.group_sizes == std::vector<int>{1, 3});
  CHECK(c.restarts == 2);
  CHECK(c.regions == std::vector<int>{8});
}

TEST_CASE("config errors name the field") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message(replace_line(kSmall, "lambdas", "lambdas =")).find("design.lambdas") != std::string::npos);
  CHECK(message(replace_line(kSmall, "lambdas", "lambdas = 1e-3, 0")).find("increasing") != std::string::npos);
  CHECK(message(replace_line(kSmall, "lambdas", "lambdas = -1")).find("nonnegative") != std::string::npos);
  CHECK(message(replace_line(kSmall, "restarts", "restarts = two")).find("design.restarts") != std::string::npos);
  CHECK(message(replace_line(kSmall, "restarts", "restart = 2")).find("design.restart") != std::string::npos);
  CHECK(message(replace_line(kSmall, "format", "format = other/9")).find("format") != std::string::npos);
  CHECK(message(replace_line(kSmall, "[baselines]", "[extras]")).find("extras") != std::string::npos);
  CHECK(message(replace_line(kSmall, "rates", "rates = 2, 2")).find("coder.rates") != std::string::npos);
  CHECK(message(replace_line(kSmall, "optimizer", "optimizer = sgd")).find("design.optimizer") != std::string::npos);
  CHECK(message(replace_line(kSmall, "run =", "run = magic")).find("magic") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/lsdc.ini"), ConfigError);
}

TEST_CASE("relative paths follow the config file") {
  const auto dir = temp_dir("paths");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.ini") << "format = lsdc-config/1\n[source]\nkind = csv\npath = data.csv\n[design]\nlambdas = 0\n";
  const ExperimentConfig c = load_config((dir / "c.ini").string());
  CHECK(c.source.path == (dir / "data.csv").string());
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty point sets give header-only files") {
  CHECK(curves_csv({}) ==
        "method,optimizer,set,lambda,measure_kind,measure,distortion,distortion_db,lagrangian,seed\n");
  CHECK(parse_curves_json(curves_json({})).empty());
  CHECK(timings_csv({}) == "method,optimizer,lambda,seed,wall_seconds\n");
  CHECK(monotonicity_report({}).empty());
}

TEST_CASE("curve JSON round trip and the dB column") {
  TradeoffPoint a;
  a.lambda = 1e-3;
  a.distortion = 0.0123456789012345;
  a.measure = 13.6;
  a.method = "grouping";
  a.optimizer = "da";
  a.set = "test";
  a.seed = 42;
  TradeoffPoint b = a;
  b.kind = MeasureKind::cost;
  b.method = "dir";
  b.distortion = 1.0 / 3.0;
  const auto back = parse_curves_json(curves_json({a, b}));
  REQUIRE(back.size() == 2);
  CHECK(back[0].distortion == a.distortion);
  CHECK(back[0].measure == a.measure);
  CHECK(back[0].lambda == a.lambda);
  CHECK(back[0].method == "grouping");
  CHECK(back[0].seed == 42);
  CHECK(back[1].kind == MeasureKind::cost);
  CHECK(back[1].distortion == b.distortion);
  CHECK_THROWS_AS(parse_curves_json("{\"schema\": \"other\"}"), ParseError);
  CHECK_THROWS_AS(parse_curves_json("not json"), ParseError);

  std::istringstream csv(curves_csv({a}));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  std::vector<std::string> cells;
  std::stringstream r(row);
  for (std::string cell; std::getline(r, cell, ',');) cells.push_back(cell);
  REQUIRE(cells.size() == 10);
  CHECK(std::stod(cells[6]) == a.distortion);
  CHECK(std::stod(cells[7]) == doctest::Approx(10.0 * std::log10(a.distortion)).epsilon(1e-14));
  CHECK(std::stod(cells[8]) == doctest::Approx(a.distortion + a.lambda * a.measure).epsilon(1e-14));
}

TEST_CASE("monotonicity flags") {
  auto point = [](double measure, double d) {
    TradeoffPoint p;
    p.method = "proposed";
    p.optimizer = "greedy";
    p.measure = measure;
    p.distortion = d;
    return p;
  };
  const auto flags = monotonicity_report({point(4, 0.5), point(8, 0.3), point(16, 0.4), point(32, 0.2)});
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].point.measure == 16);
  CHECK(flags[0].dominated_by.measure == 8);
  // Different series never interact.
  TradeoffPoint other = point(16, 0.9);
  other.set = "test";
  CHECK(monotonicity_report({point(4, 0.5), other}).empty());
}

TEST_CASE("sweep: rows, determinism and files") {
  const ExperimentConfig c = parse_config(kSmall);
  const ExperimentResult r = run_experiment(c, Verb::sweep);
  // 3 lambdas + 2 grouping partitions, each with a train and a test row.
  REQUIRE(r.points.size() == 10);
  int proposed = 0;
  for (const auto& p : r.points) {
    CHECK(p.distortion > 0.0);
    CHECK(p.optimizer == "greedy");
    if (p.method == "proposed") ++proposed;
  }
  CHECK(proposed == 6);
  CHECK(r.points[0].set == "train");
  CHECK(r.points[1].set == "test");

  ExperimentConfig threaded = c;
  threaded.threads = 3;
  const ExperimentResult again = run_experiment(threaded, Verb::sweep);
  CHECK(curves_csv(again.points) == curves_csv(r.points));
  CHECK(curves_json(again.points) == curves_json(r.points));

  const auto dir = temp_dir("emit");
  emit_curves(r.points, dir.string());
  const std::string first = read_file(dir / "curves.csv");
  emit_curves(again.points, dir.string());
  CHECK(read_file(dir / "curves.csv") == first);
  CHECK(parse_curves_json(read_file(dir / "curves.json")).size() == r.points.size());
  CHECK(std::filesystem::exists(dir / "timings.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("design and gen verbs") {
  ExperimentConfig c = parse_config(kSmall);
  CHECK(run_experiment(c, Verb::design).points.size() == 2);
  const auto dir = temp_dir("gen");
  c.output_dir = dir.string();
  const ExperimentResult g = run_experiment(c, Verb::gen);
  REQUIRE(g.files.size() == 1);
  CHECK(std::filesystem::exists(g.files[0]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("twelve-point grid at small scale") {
  ExperimentConfig c = parse_config(kSmall);
  c.source.source_count = 5;
  c.source.sample_count = 1000;
  c.regions = {8};
  c.restarts = 1;
  c.lambdas = {0, 3e-6, 1e-5, 2e-5, 3e-5, 5e-5, 1e-4, 2e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  c.group_sizes = {1, 2, 3, 4, 5};
  const ExperimentResult r = run_experiment(c, Verb::sweep);
  int proposed = 0, grouping = 0;
  for (const auto& p : r.points) {
    if (p.set != "test") continue;
    if (p.method == "proposed") ++proposed;
    if (p.method == "grouping") ++grouping;
  }
  CHECK(proposed >= 12);
  CHECK(grouping == 5);
  CHECK(r.summary.find("envelope gain") != std::string::npos);
}

TEST_CASE("network verb") {
  ExperimentConfig c = parse_config(kSmall);
  c.source.kind = SourceKind::gaussian_field;
  c.source.source_count = 3;
  c.source.rho = 0.8;
  c.source.sample_count = 1000;
  c.rates = {1};
  c.lambdas = {0, 1e-4};
  c.restarts = 1;
  c.dir.intermediates = 2;
  c.dir.requests_per_sink = 1;
  c.baselines = {"conventional"};
  const ExperimentResult r = run_experiment(c, Verb::dir);
  // Per lambda: DIR and conventional, train and test.
  REQUIRE(r.points.size() == 8);
  for (std::size_t k = 0; k < r.points.size(); k += 4) {
    CHECK(r.points[k].method == "dir");
    CHECK(r.points[k + 2].method == "conventional");
    CHECK(r.points[k].kind == MeasureKind::cost);
    CHECK(r.points[k].lagrangian() <= r.points[k + 2].lagrangian() + 1e-12);
  }
}

TEST_CASE("step envelopes") {
  auto point = [](double measure, double d) {
    TradeoffPoint p;
    p.measure = measure;
    p.distortion = d;
    return p;
  };
  const std::vector<TradeoffPoint> proposed = {point(0, 1.0), point(5, 0.1), point(20, 0.05)};
  const std::vector<TradeoffPoint> baseline = {point(0, 1.0), point(10, 0.2), point(20, 0.1)};
  CHECK(*step_envelope(proposed, 7) == 0.1);
  CHECK_FALSE(step_envelope(proposed, -1).has_value());
  const auto gaps = envelope_gaps(proposed, baseline);
  REQUIRE(gaps.size() == 4);
  CHECK(gaps[0].gain_db == 0.0);
  CHECK_FALSE(gaps[0].interior);
  CHECK(gaps[1].measure == 5);
  CHECK(gaps[1].gain_db == doctest::Approx(10.0));
  CHECK(gaps[1].interior);
  CHECK(gaps[2].gain_db == doctest::Approx(10.0 * std::log10(2.0)));
  CHECK_FALSE(gaps[3].interior);
}
