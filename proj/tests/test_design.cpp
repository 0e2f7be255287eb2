#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <vector>

#include "popbp/design.hpp"
#include "popbp/pbp.hpp"

using namespace popbp;
using namespace popbp::design;
using doctest::Approx;

namespace {

// Number of ways to cut 1..n into consecutive non-empty blocks.
int count_block_sequences(int n) {
  if (n == 0) return 1;
  int total = 0;
  for (int first = 1; first <= n; ++first) total += count_block_sequences(n - first);
  return total;
}

// Optimizer whose t_i* drops below 1 exactly when p > drops[i - 1].
Optimizer staircase(std::vector<double> drops, int* calls) {
  return [drops, calls](double p) {
    ++*calls;
    DesignResult r;
    const int n = static_cast<int>(drops.size()) + 1;
    r.times.assign(n, 1.0);
    for (int i = 0; i + 1 < n; ++i) {
      if (p > drops[i]) r.times[i] = 0.5 * (i + 1) / n;
    }
    std::sort(r.times.begin(), r.times.end());
    r.fi = p;
    return r;
  };
}

}  // namespace

TEST_CASE("tie patterns") {
  const auto one = enumerate_tie_patterns(1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].label() == "t1=1");
  CHECK(one[0].free_blocks() == 0);

  const auto two = enumerate_tie_patterns(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].label() == "t1|t2=1");
  CHECK(two[1].label() == "t1=t2=1");

  const auto three = enumerate_tie_patterns(3);
  std::vector<std::string> labels;
  for (const auto& p : three) labels.push_back(p.label());
  CHECK(labels.size() == 4);
  CHECK(labels[0] == "t1|t2|t3=1");
  CHECK(std::find(labels.begin(), labels.end(), "t1=t2|t3=1") != labels.end());
  CHECK(std::find(labels.begin(), labels.end(), "t1|t2=t3=1") != labels.end());
  CHECK(std::find(labels.begin(), labels.end(), "t1=t2=t3=1") != labels.end());

  for (int n = 1; n <= 8; ++n) {
    CHECK(static_cast<int>(enumerate_tie_patterns(n).size()) == count_block_sequences(n));
  }
  const std::vector<double> s{0.25, 0.6};
  CHECK(three[0].expand(s) == std::vector<double>{0.25, 0.6, 1.0});
  const std::vector<double> tied{0.4};
  for (const auto& p : three) {
    if (p.label() == "t1=t2|t3=1") CHECK(p.expand(tied) == std::vector<double>{0.4, 0.4, 1.0});
    if (p.label() == "t1|t2=t3=1") CHECK(p.expand(tied) == std::vector<double>{0.4, 1.0, 1.0});
  }
}

TEST_CASE("optimiser recovers the fully observed optimum") {
  for (int n : {2, 3}) {
    const double lambda = 1.5;
    auto fi = [lambda](std::span<const double> t) {
      return pbp::fisher_info_merged(1, t, lambda);
    };
    const auto r = optimize_times(n, lambda, fi);
    const auto ref = pbp::optimal_times(n, lambda);
    CHECK(r.region == enumerate_tie_patterns(n)[0].label());
    CHECK(r.fi == Approx(ref.fi).epsilon(1e-10));
    for (int i = 0; i < n; ++i) CHECK(r.times[i] == Approx(ref.times[i]).epsilon(1e-4));
  }
}

TEST_CASE("optimiser result dominates its seeds") {
  const double lambda = 0.9;
  const auto approx = pbp::optimal_times_approx(3, lambda);
  auto fi = exact_evaluator(lambda, 0.99);
  const auto r = optimize_times(3, lambda, fi);
  CHECK(r.fi >= fi(approx));
  const std::vector<double> centroid{1.0 / 3, 2.0 / 3, 1.0};
  CHECK(r.fi >= fi(centroid));
}

TEST_CASE("evaluator failures name the pattern") {
  auto bad = [](std::span<const double> t) -> double {
    if (t[0] < 1.0) throw std::runtime_error("boom");
    return 1.0;
  };
  try {
    optimize_times(2, 1.0, bad);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("t1|t2=1") != std::string::npos);
  }
}

TEST_CASE("below and above the first drop at lambda = 0.5") {
  const auto optimize = exact_optimizer(2, 0.5);
  CHECK(optimize(0.9).times[0] >= kAtHorizon);
  const auto after = optimize(0.982097);
  CHECK(after.times[0] == Approx(0.65952).epsilon(5e-3 / 0.65952));
}

TEST_CASE("drop search on a known staircase") {
  int calls = 0;
  const auto report = drop_values(3, staircase({0.3, 0.7}, &calls), 1e-6);
  REQUIRE(report.intervals.size() == 2);
  CHECK(report.violations.empty());
  CHECK(report.non_overlapping);
  for (int i = 0; i < 2; ++i) {
    const auto& d = report.intervals[i];
    CHECK(d.index == i + 1);
    CHECK(d.width() < 1e-6);
    CHECK(d.lower < (i == 0 ? 0.3 : 0.7));
    CHECK(d.upper >= (i == 0 ? 0.3 : 0.7));
  }
  // The second search starts from bounds shared by the first one.
  CHECK(report.optimizations == calls);
  CHECK(calls < 2 + 2 * 20);
}

TEST_CASE("identical drops share one interval") {
  int calls = 0;
  const auto report = drop_values(3, staircase({0.4, 0.4}, &calls), 1e-6);
  CHECK(report.intervals[0].lower == report.intervals[1].lower);
  CHECK(report.intervals[0].upper == report.intervals[1].upper);
  CHECK(report.non_overlapping);
  CHECK(calls == 2 + 20);
}

TEST_CASE("bracket violations are reported") {
  int calls = 0;
  auto never = staircase({2.0}, &calls);  // t_1* = 1 even at p = 1
  const auto report = drop_values(2, never, 1e-3);
  CHECK_FALSE(report.violations.empty());
  auto always = staircase({-1.0}, &calls);  // t_1* < 1 even as p -> 0
  CHECK_FALSE(drop_values(2, always, 1e-3).violations.empty());
}

TEST_CASE("overlap check") {
  std::vector<DropInterval> a{{1, 0.1, 0.2}, {2, 0.2, 0.3}};
  CHECK(intervals_non_overlapping(a));
  std::vector<DropInterval> b{{1, 0.1, 0.2}, {2, 0.1, 0.2}};
  CHECK(intervals_non_overlapping(b));
  std::vector<DropInterval> c{{1, 0.1, 0.25}, {2, 0.2, 0.3}};
  CHECK_FALSE(intervals_non_overlapping(c));
  std::vector<DropInterval> d{{1, 0.1, 0.3}, {2, 0.15, 0.2}};
  CHECK_FALSE(intervals_non_overlapping(d));
}

TEST_CASE("approximate objective has its own drop") {
  // Oracle: dense scan of t1 for the argmax, bisected on p.
  auto leaves_horizon = [](double p) {
    const double at_one = fisher::fisher_info_approx_n2(1.0, 1.0, 0.5, p);
    for (int k = 1; k < 20000; ++k) {
      if (fisher::fisher_info_approx_n2(k / 20000.0, 1.0, 0.5, p) > at_one) return true;
    }
    return false;
  };
  double lo = 0.9;
  double hi = 1.0;
  REQUIRE_FALSE(leaves_horizon(lo));
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    (leaves_horizon(mid) ? hi : lo) = mid;
  }
  const auto report = drop_values(2, approx_optimizer(0.5), 1e-6);
  const auto& d = report.intervals[0];
  CHECK(d.lower <= hi + 1e-6);
  CHECK(d.upper >= lo - 1e-6);
  CHECK(d.midpoint() == Approx(0.977422).epsilon(1e-5));
}

TEST_CASE("part grids") {
  const auto g = part_grid(0.2, 0.3, 0.005, 3);
  CHECK(g.front() == 0.2);
  CHECK(g.back() == 0.3);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] - g[i - 1] <= 0.005 + 1e-15);
  CHECK(part_grid(0.5, 0.501, 0.005, 3).size() == 3);
  CHECK_THROWS_AS(part_grid(0.5, 0.4, 0.005, 3), std::invalid_argument);
}

TEST_CASE("sweep layout and checkpoint") {
  int calls = 0;
  const auto optimize = staircase({0.3, 0.7}, &calls);
  auto fi_at = [](double p, std::span<const double>) { return p; };
  std::vector<DropInterval> drops{{1, 0.299, 0.301}, {2, 0.699, 0.701}};
  const auto path = std::filesystem::temp_directory_path() / "popbp_sweep_checkpoint.csv";
  std::filesystem::remove(path);
  SweepOptions options;
  options.checkpoint = path.string();

  const auto rows = sweep(3, drops, optimize, fi_at, options);
  const int first_calls = calls;
  int sentinels = 0;
  std::vector<int> per_part(3, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.sentinel) {
      ++sentinels;
      CHECK(std::isnan(r.fi));
      continue;
    }
    ++per_part[r.part];
    if (r.part == 0) CHECK(r.times == std::vector<double>(3, 1.0));
    if (i > 0 && !rows[i - 1].sentinel && rows[i - 1].part == r.part) {
      CHECK(r.p - rows[i - 1].p <= 0.005 + 1e-12);
    }
    CHECK(std::is_sorted(r.times.begin(), r.times.end()));
    CHECK(r.times.back() == 1.0);
  }
  CHECK(sentinels == 2);
  for (int count : per_part) CHECK(count >= 3);
  CHECK(rows.front().p == 0.0);
  CHECK(rows.back().p == 1.0);
  CHECK(first_calls > 0);

  const auto again = sweep(3, drops, optimize, fi_at, options);
  CHECK(calls == first_calls);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].sentinel) continue;
    CHECK(again[i].p == rows[i].p);
    CHECK(again[i].times == rows[i].times);
  }
  std::filesystem::remove(path);
}

TEST_CASE("sweep for two observations at lambda = 1") {
  const auto optimize = exact_optimizer(2, 1.0);
  const auto report = drop_values(2, optimize, 1e-6);
  CHECK(report.intervals[0].midpoint() == Approx(0.91136).epsilon(1e-3));
  auto fi_at = [](double p, std::span<const double> t) { return exact_evaluator(1.0, p)(t); };
  const auto rows = sweep(2, report.intervals, optimize, fi_at);
  int jumps = 0;
  double prev_t = 1.0;
  double prev_fi = -1.0;
  for (const auto& r : rows) {
    if (r.sentinel) continue;
    if (r.part == 0) CHECK(r.times[0] == 1.0);
    if (std::abs(r.times[0] - prev_t) > 0.1) ++jumps;
    prev_t = r.times[0];
    CHECK(r.fi >= prev_fi - 1e-12);
    prev_fi = r.fi;
  }
  CHECK(jumps == 1);
  CHECK(rows.back().p == 1.0);
  CHECK(rows.back().times[0] == pbp::optimal_times(2, 1.0).times[0]);
}
