// nadine: run, generate, report and ablate prequential experiments.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nadine/report.hpp"

namespace fs = std::filesystem;
using namespace nadine;

namespace {

enum class Level { Error, Warn, Info, Debug };

Level log_level() {
  const char* env = std::getenv("NADINE_LOG_LEVEL");
  const std::string v = env ? env : "warn";
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

void log(Level at, const std::string& msg) {
  static const Level current = log_level();
  if (at > current) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(at)] << "] " << msg << '\n';
}

/// Flags shared by every subcommand; each one overrides the config file.
struct Options {
  std::string config;
  std::string mode, data, seeds, out, ablate;
  std::optional<int> precision;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--mode", mode, "current-batch or one-step-ahead");
    cmd->add_option("--data", data, "input CSV; switches the source to csv");
    cmd->add_option("--seeds", seeds, "seed list such as 1-10 or 1,4,7");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--ablate", ablate, "comma-separated toggles");
    cmd->add_option("--precision", precision, "32 or 64");
    cmd->add_option("--set", sets, "extra key=value override, repeatable");
  }

  RunConfig build() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config_file(config);
    if (!mode.empty()) set_config_value(cfg, "mode", mode);
    if (!data.empty()) {
      set_config_value(cfg, "source", "csv");
      set_config_value(cfg, "data", data);
    }
    if (!seeds.empty()) set_config_value(cfg, "seeds", seeds);
    if (!out.empty()) set_config_value(cfg, "out", out);
    if (!ablate.empty()) set_config_value(cfg, "ablate", ablate);
    if (precision) set_config_value(cfg, "precision", std::to_string(*precision));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    if (cfg.source == Source::Csv && !fs::is_regular_file(cfg.csv_path)) {
      throw ConfigError("data: no such file '" + cfg.csv_path + "'");
    }
    return cfg;
  }
};

int cmd_run(const Options& opt) {
  const RunConfig cfg = opt.build();
  const fs::path out = cfg.out_dir;
  log(Level::Info, "running " + std::to_string(cfg.seeds.size()) + " seed(s) in " +
                       std::string(to_string(cfg.harness.mode)) + " mode");
  const auto runs = run_all(cfg, (out / "checkpoints").string());
  write_run_artifacts(out, cfg, runs);
  for (const auto& r : runs) {
    log(Level::Debug, "seed " + std::to_string(r.seed) + ": accuracy " + detail::fmt_double(r.accuracy()) + ", depth " +
                          std::to_string(r.final_depth()));
  }
  write_summary_table(std::cout, {summarize(runs)});
  log(Level::Info, "wrote " + out.string());
  return 0;
}

int cmd_generate(const Options& opt) {
  const RunConfig cfg = opt.build();
  if (cfg.source != Source::Synthetic) throw ConfigError("source: generate needs the synthetic source");
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  for (auto seed : cfg.seeds) {
    const auto batches = load_batches(cfg, seed);
    const fs::path path = out / ("stream_seed_" + std::to_string(seed) + ".csv");
    std::ofstream os(path);
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    for (std::size_t j = 0; j < cfg.synthetic.features; ++j) os << 'f' << j << ',';
    os << "label\n" << std::setprecision(17);
    for (const auto& b : batches)
      for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j < cfg.synthetic.features; ++j) os << b.sensors(i, j) << ',';
        os << b.labels[i] << '\n';
      }
    log(Level::Info, "wrote " + path.string());
  }
  write_text_file(out / "config.txt", emit_config(cfg));
  return 0;
}

/// Rebuilds per-seed summaries from metrics CSV files written by `run`.
std::vector<Summary> summaries_from_metrics(const std::vector<std::string>& files) {
  std::vector<Summary> rows;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open metrics file '" + file + "'");
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(file + ": empty metrics file");
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
    for (const char* need : {"seed", "cumulative_accuracy", "depth"})
      if (!col.count(need)) throw SchemaError(file + ": missing column '" + std::string(need) + "'");

    std::map<std::uint64_t, std::vector<std::pair<double, double>>> per_seed;  // (cumulative, depth)
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const auto cells = detail::split_csv_line(line);
      if (cells.size() != header.size()) throw ParseError(row, cells.size() + 1, "wrong number of cells");
      double seed = 0, acc = 0, depth = 0;
      if (!detail::parse_double(cells[col["seed"]], seed) ||
          !detail::parse_double(cells[col["cumulative_accuracy"]], acc) ||
          !detail::parse_double(cells[col["depth"]], depth)) {
        throw ParseError(row, 1, "non-numeric metrics row");
      }
      per_seed[static_cast<std::uint64_t>(seed)].emplace_back(acc, depth);
    }
    Summary s;
    s.label = fs::path(file).parent_path().filename().string();
    if (s.label.empty()) s.label = file;
    for (const auto& [seed, recs] : per_seed) {
      s.seeds.push_back(seed);
      s.accuracy.push_back(recs.back().first);
      s.final_depth.push_back(recs.back().second);
      double md = 0.0;
      for (const auto& r : recs) md += r.second;
      s.mean_depth.push_back(md / static_cast<double>(recs.size()));
    }
    rows.push_back(std::move(s));
  }
  return rows;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out) {
  const auto rows = summaries_from_metrics(files);
  write_summary_table(std::cout, rows);
  if (!out.empty()) {
    std::ostringstream csv;
    write_summary_csv(csv, rows);
    Json j = Json::array();
    for (const auto& s : rows) j.push_back(summary_json(s));
    write_text_file(fs::path(out) / "report.csv", csv.str());
    write_text_file(fs::path(out) / "report.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_ablate(const Options& opt) {
  const RunConfig cfg = opt.build();
  const fs::path out = cfg.out_dir;
  log(Level::Info, "baseline plus " + std::to_string(cfg.ablations.size()) + " toggle(s)");
  const auto rows = ablation_study(cfg, cfg.ablations);
  write_summary_table(std::cout, rows);
  std::ostringstream csv;
  write_summary_csv(csv, rows);
  Json j = Json::array();
  for (const auto& s : rows) j.push_back(summary_json(s));
  write_text_file(out / "ablation.csv", csv.str());
  write_text_file(out / "ablation.json", j.dump(2) + "\n");
  write_text_file(out / "config.txt", emit_config(cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving prequential stream classifier"};
  app.require_subcommand(1);

  Options run_opt, gen_opt, ablate_opt;
  run_opt.attach(app.add_subcommand("run", "prequential runs over one or more seeds"));
  gen_opt.attach(app.add_subcommand("generate", "write synthetic drift streams as CSV"));
  ablate_opt.attach(app.add_subcommand("ablate", "baseline against each ablation toggle"));
  auto* report = app.add_subcommand("report", "summarize metrics CSV files");
  std::vector<std::string> metrics;
  std::string report_out;
  report->add_option("metrics", metrics, "metrics.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "directory for report.csv and report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(run_opt);
    if (app.got_subcommand("generate")) return cmd_generate(gen_opt);
    if (app.got_subcommand("ablate")) return cmd_ablate(ablate_opt);
    return cmd_report(metrics, report_out);
  } catch (const ConfigError& e) {
    log(Level::Error, std::string("config: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return 1;
  }
}
