#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "popbp/cli.hpp"

using popbp::cli::run;
using doctest::Approx;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int status = run(args, out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

double column(const std::vector<std::vector<std::string>>& rows, std::size_t row,
              const std::string& name) {
  const auto& header = rows.at(0);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return std::stod(rows.at(row).at(i));
  }
  FAIL("missing column " << name);
  return 0.0;
}

}  // namespace

TEST_CASE("fi on a single observation") {
  const auto r = invoke({"fi", "--times", "1.0", "--lambda", "0.693147", "--p", "1.0"});
  REQUIRE(r.status == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == "n");
  CHECK(column(rows, 1, "fi") == Approx(2.0).epsilon(1e-6));

  const auto zero = invoke({"fi", "--times", "1.0", "--lambda", "0.693147", "--p", "0.0"});
  REQUIRE(zero.status == 0);
  CHECK(column(parse_csv(zero.out), 1, "fi") == 0.0);
}

TEST_CASE("fi at p = 1 equals the birth-process value") {
  const auto r = invoke({"fi", "--times", "0.5,1.0", "--lambda", "1.0", "--p", "1.0"});
  REQUIRE(r.status == 0);
  const auto rows = parse_csv(r.out);
  CHECK(column(rows, 1, "fi") == Approx(1.6829273589434312).epsilon(1e-13));
  CHECK(column(rows, 1, "t2") == 1.0);
}

TEST_CASE("fi with a larger initial population and a coefficient dump") {
  const auto path = std::filesystem::temp_directory_path() / "popbp_cli_coeffs.csv";
  const auto r = invoke({"fi", "--times", "0.5,1.0", "--lambda", "1.0", "--p", "0.5", "--x0", "2",
                         "--dump-coeffs", path.string()});
  REQUIRE(r.status == 0);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK_FALSE(first.empty());
  std::filesystem::remove(path);
}

TEST_CASE("invalid arguments are rejected") {
  CHECK(invoke({"fi", "--times", "1", "--lambda", "-1", "--p", "0.5"}).status != 0);
  CHECK(invoke({"fi", "--times", "1", "--lambda", "1", "--p", "1.5"}).status != 0);
  CHECK(invoke({"fi", "--times", "1,0.5", "--lambda", "1", "--p", "0.5"}).status != 0);
  CHECK(invoke({"fi", "--times", "-0.5,1", "--lambda", "1", "--p", "0.5"}).status != 0);
  CHECK(invoke({"fi", "--lambda", "1", "--p", "0.5"}).status != 0);
  CHECK(invoke({"optimize", "--n", "0", "--lambda", "1", "--p", "0.5"}).status != 0);
  CHECK(invoke({"no-such-command"}).status != 0);
  CHECK(invoke({}).status != 0);
  const auto e = invoke({"fi", "--times", "1,0.5", "--lambda", "1", "--p", "0.5"});
  CHECK(e.err.find("error") != std::string::npos);
}

TEST_CASE("optimize reports the schedule and region") {
  const auto r = invoke({"optimize", "--n", "2", "--lambda", "0.5", "--p", "0.9"});
  REQUIRE(r.status == 0);
  const auto rows = parse_csv(r.out);
  CHECK(rows[0].back() == "region");
  CHECK(column(rows, 1, "t1") >= 1.0 - 1e-6);
  CHECK(rows[1].back() == "t1=t2=1");
}

TEST_CASE("simulate writes one row per cell") {
  const auto r = invoke({"simulate", "--times", "1.0", "--lambda", "0.6931471805599453", "--p",
                         "0.5", "--runs", "20000", "--max-total", "3"});
  CHECK(r.status == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(column(rows, 1, "likelihood") == Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("compare-approx on an explicit list") {
  const auto r = invoke({"compare-approx", "--lambda", "1", "--p", "1.0"});
  REQUIRE(r.status == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(column(rows, 1, "fi_exact") == Approx(column(rows, 1, "fi_approx")).epsilon(1e-12));
}

TEST_CASE("output file option") {
  const auto path = std::filesystem::temp_directory_path() / "popbp_cli_out.csv";
  const auto r = invoke({"fi", "--times", "1.0", "--lambda", "1", "--p", "0.3", "--out",
                         path.string()});
  REQUIRE(r.status == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(column(parse_csv(buf.str()), 1, "fi") == Approx(0.70661477459229816).epsilon(1e-12));
  std::filesystem::remove(path);
}

TEST_CASE("worker resolution") {
  CHECK(popbp::cli::resolve_workers(4, 2) == 4);
  unsetenv("POPBP_WORKERS");
  CHECK(popbp::cli::resolve_workers(0, 2) == 1);
  CHECK(popbp::cli::resolve_workers(0, 3) >= 1);
  setenv("POPBP_WORKERS", "3", 1);
  CHECK(popbp::cli::resolve_workers(0, 2) == 3);
  unsetenv("POPBP_WORKERS");
}
