#pragma once

// Command implementations behind the smc_lab executable. Each returns the
// process exit status and writes diagnostics to the given streams.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smclab/csv.hpp"
#include "smclab/metrics.hpp"
#include "smclab/scenarios.hpp"
#include "smclab/svg.hpp"

namespace smclab::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kConfigError = 2,
  kDiverged = 3,
  kPartialSuite = 4,
};

inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("SMC_LAB_OUT"); env && *env) return env;
  return "smc_lab_out";
}

struct RunOptions {
  /// Scenario JSON path, or a built-in name when `builtin` is set.
  std::string scenario;
  bool builtin = false;
  std::vector<std::string> overrides;
  std::optional<double> dt;
  std::filesystem::path out_dir = default_out_dir();
  bool svg = false;
};

inline void write_run_svg(const std::filesystem::path& path,
                          const std::string& name, const TimeSeries& ts) {
  std::vector<Trace> traces;
  const bool multi = ts.nodes.size() > 1;
  for (std::size_t i = 0; i < ts.nodes.size(); ++i) {
    traces.push_back({multi ? "x_" + std::to_string(i + 1) : "x", ts.t,
                      ts.nodes[i].x});
  }
  std::ofstream out(path, std::ios::binary);
  write_svg(out, traces, "t (s)", column_label("x"), name);
}

inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  json raw;
  try {
    if (opt.builtin) {
      auto sc = find_builtin(opt.scenario);
      if (!sc) {
        err << "error: no built-in scenario named '" << opt.scenario << "'\n";
        return kConfigError;
      }
      raw = to_json(*sc);
    } else {
      if (!std::filesystem::exists(opt.scenario)) {
        err << "error: file not found: " << opt.scenario << '\n';
        return kIoError;
      }
      raw = load_scenario_json(opt.scenario);
    }
    for (const auto& o : opt.overrides) apply_override(raw, o);
    if (opt.dt) apply_override(raw, "sim.dt=" + format_double(*opt.dt));
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) err << "error: " << p << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }

  Validated v = validate(raw);
  if (!v.scenario) {
    for (const auto& p : v.errors) err << "error: " << p << '\n';
    return kConfigError;
  }
  const Scenario& sc = *v.scenario;

  RunOutcome o = run_one(sc);
  if (!o.error.empty()) {
    err << "error: " << o.error << '\n';
    return kConfigError;
  }
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  {
    std::ofstream csv(opt.out_dir / (sc.name + ".csv"), std::ios::binary);
    if (!csv) {
      err << "error: cannot write to " << opt.out_dir.string() << '\n';
      return kIoError;
    }
    write_csv(csv, o.run->series);
    std::ofstream txt(opt.out_dir / (sc.name + ".metrics.txt"),
                      std::ios::binary);
    write_metrics_text(txt, sc.name, o.metrics);
    if (o.run->diverged) {
      txt << "divergence_time=" << format_double(o.run->divergence_time)
          << '\n';
    }
  }
  if (opt.svg) {
    write_run_svg(opt.out_dir / (sc.name + ".svg"), sc.name, o.run->series);
  }
  out << sc.name << ": settling_time="
      << detail::format_optional(o.metrics.settling_time)
      << " chattering_index=" << format_double(o.metrics.chattering_index)
      << " max_abs_u=" << format_double(o.metrics.max_abs_u) << '\n';
  if (o.run->diverged) {
    err << "error: run diverged: " << o.run->message << '\n';
    return kDiverged;
  }
  return kOk;
}

namespace detail {

inline std::string cell_text(Property p, const MatrixCell& c) {
  std::string s = c.pass ? "+" : "--";
  if (p == Property::ObserverFree) return s;
  if (std::isnan(c.measured)) return s + " (none)";
  char buf[48];
  std::snprintf(buf, sizeof(buf), " (%.3g)", c.measured);
  return s + buf;
}

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace detail

/// Table-style print of a comparison matrix with measured values:
/// chattering index, -, max|u|, delayed settling time, max slew.
inline void print_matrix(std::ostream& out, const std::string& group,
                         const ComparisonMatrix& m) {
  out << "== " << group << " ==\n" << detail::pad("Property", 16);
  for (const auto& c : m.controllers) out << detail::pad(c, 20);
  out << '\n';
  for (Property p : kProperties) {
    std::string name = property_name(p);
    if (ComparisonMatrix::informational(p)) name += "*";
    out << detail::pad(name, 16);
    for (const auto& cell : m.cells[static_cast<std::size_t>(p)]) {
      out << detail::pad(detail::cell_text(p, cell), 20);
    }
    out << '\n';
  }
}

inline int cmd_suite(const std::filesystem::path& out_dir,
                     std::size_t parallelism, std::ostream& out,
                     std::ostream& err) {
  if (parallelism == 0) {
    err << "error: parallelism must be >= 1\n";
    return kConfigError;
  }
  const SuiteResult result = run_suite(builtin_suite(), parallelism);
  try {
    write_suite_outputs(result, out_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }

  out << "runs (" << result.runs.size() << ")\n";
  out << detail::pad("scenario", 34) << detail::pad("settling_s", 12)
      << detail::pad("chattering", 14) << detail::pad("max|u|", 10) << '\n';
  for (const auto& o : result.runs) {
    char settle[32], chat[32], umax[32];
    if (o.metrics.settling_time) {
      std::snprintf(settle, sizeof(settle), "%.3f", *o.metrics.settling_time);
    } else {
      std::snprintf(settle, sizeof(settle), "none");
    }
    std::snprintf(chat, sizeof(chat), "%.4g", o.metrics.chattering_index);
    std::snprintf(umax, sizeof(umax), "%.4g", o.metrics.max_abs_u);
    out << detail::pad(o.name, 34) << detail::pad(settle, 12)
        << detail::pad(chat, 14) << detail::pad(umax, 10)
        << (o.error.empty() ? "" : "FAILED") << '\n';
  }
  out << "\ncomparison matrices (measured: chattering index, -, max|u|, "
         "settling time under 10 ms delay, max |du/dt|)\n";
  for (const auto& [group, m] : result.matrices) {
    out << '\n';
    print_matrix(out, group, m);
  }
  out << "\n* informational: a sign law is bounded by construction\n";

  if (!result.failures.empty()) {
    for (const auto& f : result.failures) err << "failed: " << f << '\n';
    return kPartialSuite;
  }
  return kOk;
}

inline int cmd_plot(const std::vector<std::string>& csv_paths,
                    const std::vector<std::string>& columns,
                    const std::filesystem::path& svg_path, std::ostream& out,
                    std::ostream& err) {
  if (csv_paths.empty() || columns.empty()) {
    err << "error: need at least one CSV and one column\n";
    return kConfigError;
  }
  std::vector<Trace> traces;
  for (const auto& path : csv_paths) {
    CsvTable table;
    try {
      table = read_csv_file(path);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kIoError;
    }
    const auto* t = table.find("t");
    if (!t) {
      err << "error: " << path << " has no 't' column\n";
      return kConfigError;
    }
    for (const auto& col : columns) {
      const auto* y = table.find(col);
      if (!y) {
        err << "error: unknown column '" << col << "' in " << path
            << "; available:";
        for (const auto& n : table.names) err << ' ' << n;
        err << '\n';
        return kConfigError;
      }
      std::string label = std::filesystem::path(path).stem().string();
      if (columns.size() > 1 || csv_paths.size() == 1) label += ":" + col;
      traces.push_back({label, *t, *y});
    }
  }
  std::string y_label =
      columns.size() == 1 ? column_label(columns.front()) : std::string();
  if (y_label.empty()) {
    for (const auto& c : columns) y_label += (y_label.empty() ? "" : ", ") + c;
  }
  if (svg_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(svg_path.parent_path(), ec);
  }
  std::ofstream os(svg_path, std::ios::binary);
  if (!os) {
    err << "error: cannot write " << svg_path.string() << '\n';
    return kIoError;
  }
  write_svg(os, traces, column_label("t"), y_label);
  out << "wrote " << svg_path.string() << '\n';
  return kOk;
}

/// Writes every built-in scenario as <name>.json.
inline int cmd_export(const std::filesystem::path& dir, std::ostream& out,
                      std::ostream& err) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  for (const auto& sc : builtin_suite()) {
    std::ofstream f(dir / (sc.name + ".json"), std::ios::binary);
    if (!f) {
      err << "error: cannot write to " << dir.string() << '\n';
      return kIoError;
    }
    f << serialize(sc) << '\n';
  }
  out << "wrote " << builtin_suite().size() << " scenarios to " << dir.string()
      << '\n';
  return kOk;
}

/// Parses argv and dispatches. Exit codes: 0 ok, 1 I/O, 2 config,
/// 3 divergence, 4 partial suite failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Sliding mode control simulation lab"};
  app.require_subcommand(1);
  app.footer(
      "Examples:\n"
      "  smc_lab run scenarios/fig1_pendulum_observer_free.json --svg\n"
      "  smc_lab suite --out results -j 4\n"
      "  smc_lab plot results/fig6_vdp_noise.csv --columns u --out u.svg\n"
      "  smc_lab export --out scenarios\n"
      "Environment: SMC_LAB_OUT overrides the default output directory.");

  RunOptions ropt;
  std::string run_out;
  double dt = 0.0;
  auto* run = app.add_subcommand(
      "run", "Simulate one scenario.\n  e.g. smc_lab run fig1.json --set "
             "controller.lambda=5 --svg");
  run->add_option("scenario", ropt.scenario,
                  "Scenario JSON file (or built-in name with --builtin)")
      ->required();
  run->add_flag("--builtin", ropt.builtin, "Treat SCENARIO as a built-in name");
  run->add_option("--set", ropt.overrides,
                  "Dotted-path override, e.g. --set controller.lambda=5");
  auto* dt_opt = run->add_option("--dt", dt, "Override the integration step");
  run->add_option("--out", run_out, "Output directory");
  run->add_flag("--svg", ropt.svg, "Also write <name>.svg of the positions");

  std::string suite_out;
  std::size_t parallelism = 1;
  auto* suite = app.add_subcommand(
      "suite", "Run the built-in benchmark suite.\n  e.g. smc_lab suite --out "
               "results --jobs 4");
  suite->add_option("--out", suite_out, "Output directory");
  suite->add_option("-j,--jobs", parallelism, "Concurrent runs")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> csvs;
  std::vector<std::string> columns;
  std::string svg_out = "plot.svg";
  auto* plot = app.add_subcommand(
      "plot", "Plot CSV columns against t as SVG.\n  e.g. smc_lab plot a.csv "
              "b.csv --columns u --out u.svg");
  plot->add_option("csv", csvs, "Run CSV file(s)")->required();
  plot->add_option("--columns", columns, "Columns to plot")
      ->required()
      ->delimiter(',');
  plot->add_option("--out", svg_out, "Output SVG path");

  std::string export_dir = "scenarios";
  auto* exp = app.add_subcommand(
      "export", "Write the built-in scenarios as JSON files.\n  e.g. smc_lab "
                "export --out scenarios");
  exp->add_option("--out", export_dir, "Destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) {
    if (!run_out.empty()) ropt.out_dir = run_out;
    if (dt_opt->count() > 0) ropt.dt = dt;
    return cmd_run(ropt, out, err);
  }
  if (*suite) {
    return cmd_suite(suite_out.empty() ? default_out_dir()
                                       : std::filesystem::path(suite_out),
                     parallelism, out, err);
  }
  if (*exp) return cmd_export(export_dir, out, err);
  return cmd_plot(csvs, columns, svg_out, out, err);
}

}  // namespace smclab::cli
