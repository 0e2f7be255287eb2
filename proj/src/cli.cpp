#include "popbp/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "popbp/design.hpp"
#include "popbp/fisher.hpp"
#include "popbp/genpoly.hpp"
#include "popbp/likelihood.hpp"
#include "popbp/pbp.hpp"
#include "popbp/sim.hpp"

namespace popbp::cli {

int resolve_workers(int requested, int n) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("POPBP_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (n == 2) return 1;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

struct Config {
  int n = 2;
  int x0 = 1;
  double lambda = 1.0;
  std::vector<double> p;
  std::vector<double> times;
  double width = 1e-6;
  double spacing = 0.005;
  int smax = 100000;
  int consecutive = 2;
  int workers = 0;
  std::uint64_t seed = 20240601ULL;
  long long runs = 100000;
  int max_total = 4;
  std::string out;
  std::string checkpoint;
  std::string dump_coeffs;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) { os_ << std::setprecision(17); }
  template <typename... Ts>
  void row(const Ts&... fields) {
    bool first = true;
    ((os_ << (first ? "" : ",") << fields, first = false), ...);
    os_ << '\n';
  }
  std::ostream& stream() { return os_; }

 private:
  std::ostream& os_;
};

std::string time_header(const char* prefix, int count) {
  std::ostringstream h;
  for (int i = 1; i <= count; ++i) h << (i > 1 ? "," : "") << prefix << i;
  return h.str();
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

fisher::TerminationPolicy policy_of(const Config& c, int n) {
  return {c.smax, c.consecutive, resolve_workers(c.workers, n)};
}

double single_p(const Config& c) {
  if (c.p.size() != 1) throw std::invalid_argument("--p takes exactly one value here");
  return c.p.front();
}

int cmd_fi(const Config& c, std::ostream& os, std::ostream& err) {
  if (c.times.empty()) throw std::invalid_argument("--times is required");
  const double p = single_p(c);
  const ObservationSchedule schedule(c.times, c.lambda);
  const ModelParams params(c.lambda, p, c.x0);
  const int n = schedule.size();
  if (!c.dump_coeffs.empty()) {
    std::ofstream dump(c.dump_coeffs);
    if (!dump) throw std::runtime_error("cannot open " + c.dump_coeffs);
    const auto mode = c.x0 == 1 ? genpoly::Mode::FixedX0One : genpoly::Mode::GeneralX0;
    genpoly::write_coefficients_csv(dump, genpoly::assemble<double>(schedule, params, mode));
  }
  const auto r = fisher::fisher_info(schedule, params, policy_of(c, n));
  if (r.terminated == fisher::Termination::SliceCap) {
    err << "warning: slice cap reached before convergence\n";
  }
  CsvWriter csv(os);
  csv.row("n,lambda,p," + time_header("t", n) + ",fi,slices,terminated");
  csv.row(n, c.lambda, p, join(c.times), r.value, r.slices_used, fisher::to_string(r.terminated));
  return 0;
}

int cmd_optimize(const Config& c, std::ostream& os) {
  const double p = single_p(c);
  const auto result = design::exact_optimizer(c.n, c.lambda, policy_of(c, c.n))(p);
  CsvWriter csv(os);
  csv.row("n,lambda,p," + time_header("t", c.n) + ",fi,region");
  csv.row(c.n, c.lambda, p, join(result.times), result.fi, result.region);
  return 0;
}

void report_search(const design::DropSearchReport& report, std::ostream& err) {
  for (const auto& v : report.violations) err << "warning: bracket violation: " << v << '\n';
  if (!report.non_overlapping) err << "warning: drop intervals partially overlap\n";
}

int cmd_drop_values(const Config& c, std::ostream& os, std::ostream& err) {
  const auto report =
      design::drop_values(c.n, design::exact_optimizer(c.n, c.lambda, policy_of(c, c.n)), c.width);
  report_search(report, err);
  CsvWriter csv(os);
  csv.row("i,lower,upper");
  for (const auto& d : report.intervals) csv.row(d.index, d.lower, d.upper);
  return report.non_overlapping ? 0 : 2;
}

int cmd_sweep(const Config& c, std::ostream& os, std::ostream& err) {
  const auto policy = policy_of(c, c.n);
  const auto optimize = design::exact_optimizer(c.n, c.lambda, policy);
  const auto report = design::drop_values(c.n, optimize, c.width);
  report_search(report, err);
  design::SweepOptions options;
  options.spacing = c.spacing;
  if (!c.checkpoint.empty()) options.checkpoint = c.checkpoint;
  const double lambda = c.lambda;
  auto fi_at = [lambda, policy](double p, std::span<const double> times) {
    return design::exact_evaluator(lambda, p, policy)(times);
  };
  const auto rows = design::sweep(c.n, report.intervals, optimize, fi_at, options);
  CsvWriter csv(os);
  csv.row("p," + time_header("t", c.n - 1) + ",fi");
  for (const auto& row : rows) {
    std::vector<double> head(row.times.begin(), row.times.end() - 1);
    if (head.empty()) {
      csv.row(row.p, row.fi);
    } else {
      csv.row(row.p, join(head), row.fi);
    }
  }
  return 0;
}

int cmd_simulate(const Config& c, std::ostream& os) {
  if (c.times.empty()) throw std::invalid_argument("--times is required");
  const double p = single_p(c);
  const ObservationSchedule schedule(c.times, c.lambda);
  const ModelParams params(c.lambda, p, c.x0);
  const auto report = sim::empirical_check(schedule, params, c.runs, c.seed, c.max_total,
                                           resolve_workers(c.workers, schedule.size()));
  CsvWriter csv(os);
  csv.row(time_header("y", schedule.size()) + ",count,frequency,likelihood,sigma,within");
  for (const auto& cell : report.cells) {
    std::ostringstream y;
    for (std::size_t i = 0; i < cell.y.size(); ++i) y << (i ? "," : "") << cell.y[i];
    csv.row(y.str(), cell.count, cell.frequency, cell.likelihood, cell.sigma,
            cell.within ? 1 : 0);
  }
  return report.all_within ? 0 : 3;
}

int cmd_compare_approx(const Config& c, std::ostream& os) {
  if (c.n != 2) throw std::invalid_argument("compare-approx supports n = 2 only");
  const auto policy = policy_of(c, 2);
  std::vector<double> grid = c.p;
  if (grid.empty()) grid = design::part_grid(0.0, 1.0, c.spacing, 3);
  const auto exact = design::exact_optimizer(2, c.lambda, policy);
  const auto approx = design::approx_optimizer(c.lambda);
  CsvWriter csv(os);
  csv.row("p,t1_exact,fi_exact,t1_approx,fi_approx,fi_exact_at_approx");
  for (double p : grid) {
    if (p <= 0.0) {
      csv.row(p, 1.0, 0.0, 1.0, 0.0, 0.0);
      continue;
    }
    const auto e = exact(p);
    const auto a = approx(p);
    const double cross = design::exact_evaluator(c.lambda, p, policy)(a.times);
    csv.row(p, e.times[0], e.fi, a.times[0], a.fi, cross);
  }
  return 0;
}

void add_common(CLI::App* sub, Config& c) {
  sub->add_option("--lambda", c.lambda, "birth rate")->check(CLI::PositiveNumber);
  sub->add_option("--smax", c.smax, "maximum number of slices")->check(CLI::PositiveNumber);
  sub->add_option("--consecutive", c.consecutive, "unchanged slices before stopping")
      ->check(CLI::PositiveNumber);
  sub->add_option("--workers", c.workers, "parallel workers (default: POPBP_WORKERS)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "write CSV to this file instead of stdout");
}

void add_p(CLI::App* sub, Config& c, bool list) {
  auto* opt = sub->add_option("--p", c.p, list ? "detection probabilities" : "detection probability")
                  ->check(CLI::Range(0.0, 1.0));
  if (list) {
    opt->delimiter(',');
  } else {
    opt->required()->expected(1);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Fisher information and optimal observation times for a partially observed "
               "pure birth process"};
  app.require_subcommand(1);

  auto* fi = app.add_subcommand("fi", "Fisher information at a fixed schedule");
  add_common(fi, c);
  add_p(fi, c, false);
  fi->add_option("--times", c.times, "observation times")->delimiter(',')->required();
  fi->add_option("--x0", c.x0, "initial population")->check(CLI::PositiveNumber);
  fi->add_option("--dump-coeffs", c.dump_coeffs, "write recurrence coefficients as CSV");

  auto* opt = app.add_subcommand("optimize", "optimal schedule on the unit horizon");
  add_common(opt, c);
  add_p(opt, c, false);
  opt->add_option("--n", c.n, "number of observations")->check(CLI::Range(1, 30));

  auto* drops = app.add_subcommand("drop-values", "bounding intervals for the drop values");
  add_common(drops, c);
  drops->add_option("--n", c.n, "number of observations")->check(CLI::Range(2, 30));
  drops->add_option("--width", c.width, "target interval width")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "optimal schedules over a grid of p");
  add_common(sweep, c);
  sweep->add_option("--n", c.n, "number of observations")->check(CLI::Range(2, 30));
  sweep->add_option("--width", c.width, "drop interval width")->check(CLI::PositiveNumber);
  sweep->add_option("--spacing", c.spacing, "largest gap between grid points")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--checkpoint", c.checkpoint, "resume file for completed optimisations");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the likelihood");
  add_common(simulate, c);
  add_p(simulate, c, false);
  simulate->add_option("--times", c.times, "observation times")->delimiter(',')->required();
  simulate->add_option("--x0", c.x0, "initial population")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", c.seed, "random seed");
  simulate->add_option("--runs", c.runs, "number of simulated runs")->check(CLI::PositiveNumber);
  simulate->add_option("--max-total", c.max_total, "largest observed total tabulated")
      ->check(CLI::NonNegativeNumber);

  auto* compare = app.add_subcommand("compare-approx",
                                     "exact versus approximate optima for two observations");
  add_common(compare, c);
  add_p(compare, c, true);
  compare->add_option("--n", c.n, "number of observations (2)")->check(CLI::Range(2, 2));
  compare->add_option("--spacing", c.spacing, "grid spacing when --p is absent")
      ->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) {
      err << "error: cannot open " << c.out << '\n';
      return 1;
    }
  }
  std::ostream& os = c.out.empty() ? out : file;

  try {
    if (fi->parsed()) return cmd_fi(c, os, err);
    if (opt->parsed()) return cmd_optimize(c, os);
    if (drops->parsed()) return cmd_drop_values(c, os, err);
    if (sweep->parsed()) return cmd_sweep(c, os, err);
    if (simulate->parsed()) return cmd_simulate(c, os);
    if (compare->parsed()) return cmd_compare_approx(c, os);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace popbp::cli
