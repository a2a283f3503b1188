#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "capax/error.hpp"
#include "capax/io.hpp"
#include "capax/solver.hpp"
#include "support.hpp"

namespace capax {
namespace {

Dataset parse(const std::string& text, bool inputs_only = false) {
  std::istringstream in(text);
  return parse_dataset(in, inputs_only);
}

template <class F>
ParseError parse_failure(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError";
  return ParseError("none");
}

TEST(Csv, SmallFile) {
  const auto data = parse("x1,y1\n0.5,1\n-2,3.25\n");
  EXPECT_EQ(data.n(), 2);
  EXPECT_EQ(data.d(), 1);
  EXPECT_EQ(data.d_prime(), 1);
  EXPECT_DOUBLE_EQ(data.X(0, 1), -2.0);
  EXPECT_DOUBLE_EQ(data.Y(0, 1), 3.25);
}

TEST(Csv, InfersShapes) {
  const auto data = random_dataset(50, 5, 2, 3);
  const auto back = parse(dataset_to_csv(data));
  EXPECT_EQ(back.n(), 50);
  EXPECT_EQ(back.d(), 5);
  EXPECT_EQ(back.d_prime(), 2);
  EXPECT_EQ(back.X, data.X);
  EXPECT_EQ(back.Y, data.Y);
}

TEST(Csv, WhitespaceAndBlankLines) {
  const auto data = parse("\n x1 , x2 ,y1\n1, 2 ,3\n\n4,5,6\n");
  EXPECT_EQ(data.n(), 2);
  EXPECT_DOUBLE_EQ(data.X(1, 0), 2.0);
}

TEST(Csv, ConflictingDuplicatesNameBothLines) {
  const auto e = parse_failure([] { parse("x1,x2,y1\n1,2,3\n4,5,6\n1,2,7\n"); });
  EXPECT_NE(std::string(e.what()).find("lines 2 and 4"), std::string::npos) << e.what();
  EXPECT_EQ(e.row(), 4u);
}

TEST(Csv, ConsistentDuplicatesParse) {
  EXPECT_EQ(parse("x1,y1\n1,2\n1,2\n").n(), 2);
}

TEST(Csv, RaggedRow) {
  const auto e = parse_failure([] { parse("x1,x2,y1\n1,2,3\n4,5\n"); });
  EXPECT_EQ(e.row(), 3u);
  EXPECT_EQ(e.column(), 3u);
}

TEST(Csv, NonNumericCell) {
  const auto e = parse_failure([] { parse("x1,y1\n1,2\nabc,3\n"); });
  EXPECT_EQ(e.row(), 3u);
  EXPECT_EQ(e.column(), 1u);
  const auto f = parse_failure([] { parse("x1,y1\n1,nan\n"); });
  EXPECT_EQ(f.column(), 2u);
}

TEST(Csv, BadHeaders) {
  EXPECT_EQ(parse_failure([] { parse("x1,x3,y1\n1,2,3\n"); }).column(), 2u);
  EXPECT_EQ(parse_failure([] { parse("y1,x1\n1,2\n"); }).column(), 1u);
  EXPECT_EQ(parse_failure([] { parse("x1,y1,x2\n1,2,3\n"); }).column(), 3u);
  parse_failure([] { parse("x1,x2\n1,2\n"); });
  parse_failure([] { parse(""); });
  parse_failure([] { parse("x1,y1\n"); });
  EXPECT_EQ(parse("x1,x2\n1,2\n", true).d_prime(), 0);
}

TEST(Csv, MissingFile) { EXPECT_THROW(load_dataset("/nonexistent/capax.csv"), ParseError); }

TEST(Json, NonFiniteNumbers) {
  EXPECT_EQ(number(kInfinity), Json("inf"));
  EXPECT_EQ(number(-kInfinity), Json("-inf"));
  EXPECT_TRUE(number(std::nan("")).is_string());
  EXPECT_DOUBLE_EQ(read_number(Json("inf")), kInfinity);
  EXPECT_DOUBLE_EQ(read_number(Json(0.1)), 0.1);
}

TEST(Json, ModelRoundTrip) {
  Rng rng(8);
  const auto net = testing::random_network(rng, WidthSchedule{3, {4, 5}, 2}, {"tanh", "sigmoid"});
  const auto back = network_from_json(Json::parse(to_json(net).dump()));
  EXPECT_EQ(back.schedule.widths, net.schedule.widths);
  const Matrix x = testing::gaussian(rng, 3, 7, 1.0);
  EXPECT_EQ(forward(back, x), forward(net, x));

  const auto path = (std::filesystem::temp_directory_path() / "capax_io_model.json").string();
  save_model(path, net);
  EXPECT_EQ(to_json(load_model(path)).dump(), to_json(net).dump());
  std::filesystem::remove(path);
}

TEST(Json, MalformedModels) {
  Rng rng(1);
  auto j = to_json(testing::random_network(rng, WidthSchedule{2, {3, 3}, 1}, {"tanh", "tanh"}));
  auto bad = j;
  bad["weights"][0].erase(bad["weights"][0].begin());
  EXPECT_THROW(network_from_json(bad), Error);
  bad = j;
  bad["activations"][0] = "nope";
  EXPECT_THROW(network_from_json(bad), Error);
  EXPECT_THROW(read_json_file("/nonexistent/model.json"), Error);
}

TEST(Json, RationalMatrices) {
  RationalMatrix m(2, 2);
  m(0, 0) = Rational(1, 3);
  m(0, 1) = Rational(-2);
  m(1, 0) = Rational(0);
  m(1, 1) = Rational(7, 4);
  const Json j = to_json(m);
  EXPECT_EQ(j[0][0], Json("1/3"));
  EXPECT_EQ(rational_matrix_from_json(j), m);
  EXPECT_EQ(rational_matrix_from_json(Json{{"matrix", {{1, 2}, {3, 0.5}}}})(1, 1), Rational(1, 2));
  EXPECT_THROW(rational_matrix_from_json(Json::parse("[[1,2],[3]]")), Error);
}

TEST(Json, ReportLayout) {
  const Json r = make_report("bounds", Json{{"n", 3}}, 18446744073709551615ull, Json{{"x", 1}}, 0.25,
                             Json{{"report", "r.json"}}, 2);
  ASSERT_TRUE(r.contains("manifest"));
  ASSERT_TRUE(r.contains("payload"));
  const auto& m = r["manifest"];
  EXPECT_EQ(m["subcommand"], "bounds");
  EXPECT_EQ(m["seed"], "18446744073709551615");
  EXPECT_EQ(m["version"], "1.0.0");
  EXPECT_EQ(m["threads"], 2);
  EXPECT_EQ(m["outputs"]["report"], "r.json");
  EXPECT_EQ(r["payload"]["x"], 1);
}

TEST(Json, SolveReportSerializes) {
  const auto data = random_dataset(6, 2, 1, 2);
  SolveConfig cfg;
  cfg.activations = {"tanh", "tanh"};
  const auto [net, rep] = interpolate(data, cfg);
  const Json j = to_json(rep);
  EXPECT_EQ(j["converged"], true);
  EXPECT_EQ(j["schedule"]["widths"], to_json(rep.schedule)["widths"]);
}

}  // namespace
}  // namespace capax
