#ifndef NADINE_REPORT_HPP
#define NADINE_REPORT_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nadine/checkpoint.hpp"
#include "nadine/config.hpp"
#include "nadine/harness.hpp"

namespace nadine {

struct MeanStd {
  double mean = 0.0;
  /// Sample standard deviation; 0 for a single run.
  double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

struct Summary {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracy, final_depth, mean_depth;
  MeanStd accuracy_stats() const { return mean_std(accuracy); }
  MeanStd final_depth_stats() const { return mean_std(final_depth); }
  MeanStd mean_depth_stats() const { return mean_std(mean_depth); }
};

inline Summary summarize(const std::vector<RunResult>& runs, std::string label = "baseline") {
  Summary s;
  s.label = std::move(label);
  for (const auto& r : runs) {
    s.seeds.push_back(r.seed);
    s.accuracy.push_back(r.accuracy());
    s.final_depth.push_back(static_cast<double>(r.final_depth()));
    s.mean_depth.push_back(r.mean_depth());
  }
  return s;
}

namespace detail {

inline std::string join_reals(const std::vector<double>& xs) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? ";" : "") << xs[i];
  return os.str();
}

inline std::string join_events(const std::vector<StructuralEvent>& evs) {
  std::string out;
  for (const auto& e : evs) {
    if (!out.empty()) out += ';';
    out += std::string(to_string(e.kind)) + "@" + std::to_string(e.sample);
    if (e.kind == EventKind::NodePruned) out += "#" + std::to_string(e.node);
  }
  return out;
}

inline Json mean_std_json(const MeanStd& m) { return Json{{"mean", m.mean}, {"std", m.std}}; }

}  // namespace detail

/// One row per batch. List-valued fields are `;`-separated.
inline void write_metrics_csv(std::ostream& os, const std::vector<RunResult>& runs) {
  os << "seed,batch,size,correct,batch_accuracy,cumulative_accuracy,depth,width,state,events,rates,memory_size,"
        "precision,recall,f1\n";
  os << std::setprecision(17);
  for (const auto& run : runs) {
    for (const auto& r : run.records) {
      os << run.seed << ',' << r.batch << ',' << r.size << ',' << r.correct << ',' << r.batch_accuracy << ','
         << r.cumulative_accuracy << ',' << r.depth << ',' << r.width << ',' << to_string(r.state) << ','
         << detail::join_events(r.events) << ',' << detail::join_reals(r.rates) << ',' << r.memory_size << ','
         << detail::join_reals(r.precision) << ',' << detail::join_reals(r.recall) << ','
         << detail::join_reals(r.f1) << '\n';
    }
  }
}

inline Json summary_json(const Summary& s) {
  return Json{{"label", s.label},
              {"runs", s.seeds.size()},
              {"seeds", s.seeds},
              {"accuracy", detail::mean_std_json(s.accuracy_stats())},
              {"final_depth", detail::mean_std_json(s.final_depth_stats())},
              {"mean_depth", detail::mean_std_json(s.mean_depth_stats())},
              {"per_run", {{"accuracy", s.accuracy}, {"final_depth", s.final_depth}, {"mean_depth", s.mean_depth}}}};
}

/// Stream-level confusion and per-class scores of each run.
inline Json class_report_json(const std::vector<RunResult>& runs) {
  Json out = Json::array();
  for (const auto& r : runs) {
    Json classes = Json::array();
    for (std::size_t c = 0; c < r.confusion.classes(); ++c) {
      classes.push_back(Json{{"class", c},
                             {"support", r.confusion.support(c)},
                             {"precision", r.confusion.precision(c)},
                             {"recall", r.confusion.recall(c)},
                             {"f1", r.confusion.f1(c)}});
    }
    out.push_back(Json{{"seed", r.seed}, {"confusion", r.confusion.counts()}, {"classes", std::move(classes)}});
  }
  return out;
}

/// Side-by-side table, one line per summary.
inline void write_summary_csv(std::ostream& os, const std::vector<Summary>& rows) {
  os << "label,runs,accuracy_mean,accuracy_std,final_depth_mean,final_depth_std,mean_depth_mean,mean_depth_std\n";
  os << std::setprecision(10);
  for (const auto& s : rows) {
    const auto a = s.accuracy_stats(), d = s.final_depth_stats(), md = s.mean_depth_stats();
    os << s.label << ',' << s.seeds.size() << ',' << a.mean << ',' << a.std << ',' << d.mean << ',' << d.std << ','
       << md.mean << ',' << md.std << '\n';
  }
}

inline void write_summary_table(std::ostream& os, const std::vector<Summary>& rows) {
  os << std::left << std::setw(16) << "variant" << std::setw(24) << "accuracy" << "final depth\n";
  for (const auto& s : rows) {
    const auto a = s.accuracy_stats(), d = s.final_depth_stats();
    std::ostringstream acc, dep;
    acc << std::fixed << std::setprecision(2) << 100.0 * a.mean << " +- " << 100.0 * a.std;
    dep << std::fixed << std::setprecision(2) << d.mean << " +- " << d.std;
    os << std::left << std::setw(16) << s.label << std::setw(24) << acc.str() << dep.str() << '\n';
  }
}

/// Copy of `cfg` with its ablation toggles applied.
inline RunConfig resolved(RunConfig cfg) {
  for (auto a : cfg.ablations) apply_ablation(cfg, a);
  return cfg;
}

inline std::size_t scored_batches(const RunConfig& cfg, std::size_t stream_batches) {
  return cfg.harness.mode == Mode::OneStepAhead && stream_batches > 0 ? stream_batches - 1 : stream_batches;
}

/// One isolated learner per seed, run concurrently; results in seed order.
/// With a checkpoint directory the final state of each seed is written there.
template <typename T = double>
std::vector<RunResult> run_seeds(const RunConfig& config, const std::string& checkpoint_dir = {}) {
  const RunConfig cfg = resolved(config);
  cfg.validate();
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);
  auto one = [&cfg, &checkpoint_dir](std::uint64_t seed) {
    const auto batches = load_batches(cfg, seed);
    RunHooks<T> hooks;
    if (!checkpoint_dir.empty()) {
      const std::size_t last = scored_batches(cfg, batches.size());
      hooks.after_batch = [&checkpoint_dir, last, seed, done = std::size_t{0}](const MetricsRecord&,
                                                                              const Prequential<T>& learner) mutable {
        if (++done == last) {
          save_checkpoint(learner, (std::filesystem::path(checkpoint_dir) / ("seed_" + std::to_string(seed) + ".json")).string());
        }
      };
    }
    return run<T>(cfg.harness, batches, seed, hooks);
  };
  std::vector<std::future<RunResult>> jobs;
  jobs.reserve(cfg.seeds.size());
  for (auto seed : cfg.seeds) jobs.push_back(std::async(std::launch::async, one, seed));
  std::vector<RunResult> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

/// Dispatches on `cfg.precision`.
inline std::vector<RunResult> run_all(const RunConfig& cfg, const std::string& checkpoint_dir = {}) {
  return cfg.precision == 32 ? run_seeds<float>(cfg, checkpoint_dir) : run_seeds<double>(cfg, checkpoint_dir);
}

/// Baseline plus one variant per toggle, all on the same seeds. Toggles
/// already set in `cfg` are ignored for the baseline.
inline std::vector<Summary> ablation_study(RunConfig cfg, const std::vector<Ablation>& toggles) {
  cfg.ablations.clear();
  std::vector<Summary> rows{summarize(run_all(cfg), "baseline")};
  for (auto a : toggles) {
    RunConfig variant = cfg;
    variant.ablations = {a};
    rows.push_back(summarize(run_all(variant), std::string(to_string(a))));
  }
  return rows;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << body;
}

/// metrics.csv, summary.json, summary.csv and config.txt under `dir`.
inline void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& cfg,
                                const std::vector<RunResult>& runs, const std::string& label = "baseline") {
  std::ostringstream metrics, csv;
  write_metrics_csv(metrics, runs);
  const Summary s = summarize(runs, label);
  write_summary_csv(csv, {s});
  Json j = summary_json(s);
  j["classes"] = class_report_json(runs);
  write_text_file(dir / "metrics.csv", metrics.str());
  write_text_file(dir / "summary.json", j.dump(2) + "\n");
  write_text_file(dir / "summary.csv", csv.str());
  write_text_file(dir / "config.txt", emit_config(cfg));
}

}  // namespace nadine

#endif  // NADINE_REPORT_HPP
