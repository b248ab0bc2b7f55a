#ifndef NADINE_CONFIG_HPP
#define NADINE_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nadine/harness.hpp"
#include "nadine/stream.hpp"

namespace nadine {

enum class Source { Synthetic, Csv };

inline std::string_view to_string(Source s) { return s == Source::Synthetic ? "synthetic" : "csv"; }

inline Source source_from_string(std::string_view s) {
  if (s == "synthetic") return Source::Synthetic;
  if (s == "csv") return Source::Csv;
  throw ConfigError("unknown source '" + std::string(s) + "' (expected synthetic or csv)");
}

enum class Ablation { Shrink2dCnn, No1dCnn, NoEvolve, NoReplay, NoSoftForget };

inline std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::Shrink2dCnn: return "shrink-2dcnn";
    case Ablation::No1dCnn: return "no-1dcnn";
    case Ablation::NoEvolve: return "no-evolve";
    case Ablation::NoReplay: return "no-replay";
    case Ablation::NoSoftForget: return "no-softforget";
  }
  return "no-evolve";
}

inline Ablation ablation_from_string(std::string_view s) {
  for (Ablation a : {Ablation::Shrink2dCnn, Ablation::No1dCnn, Ablation::NoEvolve, Ablation::NoReplay,
                     Ablation::NoSoftForget}) {
    if (to_string(a) == s) return a;
  }
  throw ConfigError("unknown ablation '" + std::string(s) +
                    "' (expected shrink-2dcnn, no-1dcnn, no-evolve, no-replay or no-softforget)");
}

/// Everything a run needs besides the CLI subcommand.
struct RunConfig {
  HarnessConfig harness;
  Source source = Source::Synthetic;
  std::string csv_path;
  CsvSchema csv;
  /// Two abrupt drifts over the default 60 batches.
  SyntheticDriftConfig synthetic = [] {
    SyntheticDriftConfig s;
    s.schedule = {{20, DriftType::Abrupt}, {40, DriftType::Abrupt}};
    return s;
  }();
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "nadine_out";
  /// 64 runs in double, 32 in float.
  int precision = 64;
  std::vector<Ablation> ablations;

  void validate() const {
    harness.validate();
    if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
    if (precision != 32 && precision != 64) throw ConfigError("precision: expected 32 or 64");
    if (source == Source::Csv) {
      if (csv_path.empty()) throw ConfigError("data: csv source requires a file path");
      if (csv.features != harness.network.extractor.sensor_features * harness.network.extractor.window) {
        throw ConfigError("csv.features must equal extractor.sensor_features * extractor.window");
      }
      if (csv.classes != harness.network.classes) throw ConfigError("csv.classes must equal network.classes");
    } else {
      synthetic.validate();
      if (harness.network.extractor.uses_sensors() &&
          synthetic.features != harness.network.extractor.sensor_features * harness.network.extractor.window) {
        throw ConfigError("synthetic.features must equal extractor.sensor_features * extractor.window");
      }
      if (harness.network.extractor.uses_images() && !synthetic.images) {
        throw ConfigError("synthetic.images must be true for image or concat fusion");
      }
      if (synthetic.classes != harness.network.classes) {
        throw ConfigError("synthetic.classes must equal network.classes");
      }
    }
  }
};

inline void apply_ablation(RunConfig& cfg, Ablation a) {
  auto& ex = cfg.harness.network.extractor;
  switch (a) {
    case Ablation::Shrink2dCnn:
      if (ex.conv2d_channels.size() > 2) ex.conv2d_channels = {ex.conv2d_channels.front(), ex.conv2d_channels.back()};
      break;
    case Ablation::No1dCnn: ex.bypass_sensor_conv = true; break;
    case Ablation::NoEvolve: cfg.harness.network.evolve = false; break;
    case Ablation::NoReplay: cfg.harness.replay = false; break;
    case Ablation::NoSoftForget: cfg.harness.soft_forgetting = false; break;
  }
}

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename U>
U parse_unsigned(std::string_view s) {
  s = trim(s);
  U v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  if (!parse_double(s, v)) throw ConfigError("expected a number, got '" + std::string(s) + "'");
  return v;
}

inline bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected true or false, got '" + std::string(s) + "'");
}

inline std::string join(const std::vector<std::string>& parts, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

}  // namespace detail

/// "1,2,5" or ranges like "1-10".
inline std::vector<std::uint64_t> parse_seeds(std::string_view s) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : detail::split(s, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = detail::parse_unsigned<std::uint64_t>(std::string_view(part).substr(0, dash));
      const auto hi = detail::parse_unsigned<std::uint64_t>(std::string_view(part).substr(dash + 1));
      if (hi < lo) throw ConfigError("seed range '" + part + "' is reversed");
      for (auto v = lo; v <= hi; ++v) seeds.push_back(v);
    } else {
      seeds.push_back(detail::parse_unsigned<std::uint64_t>(part));
    }
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

inline std::vector<Ablation> parse_ablations(std::string_view s) {
  std::vector<Ablation> out;
  for (const auto& part : detail::split(s, ','))
    if (!part.empty()) out.push_back(ablation_from_string(part));
  return out;
}

/// One typed, named configuration entry.
struct ConfigField {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

namespace detail {

template <typename Get>
ConfigField real_field(std::string key, Get member) {
  return {std::move(key), [member](RunConfig& c, std::string_view v) { member(c) = parse_real(v); },
          [member](const RunConfig& c) { return fmt_double(member(c)); }};
}

template <typename Get>
ConfigField size_field(std::string key, Get member) {
  return {std::move(key), [member](RunConfig& c, std::string_view v) { member(c) = parse_unsigned<std::size_t>(v); },
          [member](const RunConfig& c) { return std::to_string(member(c)); }};
}

template <typename Get>
ConfigField bool_field(std::string key, Get member) {
  return {std::move(key), [member](RunConfig& c, std::string_view v) { member(c) = parse_bool(v); },
          [member](const RunConfig& c) { return std::string(member(c) ? "true" : "false"); }};
}

template <typename Get, typename From>
ConfigField enum_field(std::string key, Get member, From from) {
  return {std::move(key), [member, from](RunConfig& c, std::string_view v) { member(c) = from(trim(v)); },
          [member](const RunConfig& c) { return std::string(to_string(member(c))); }};
}

}  // namespace detail

/// All keys in emission order.
inline const std::vector<ConfigField>& config_fields() {
  using namespace detail;
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    f.push_back(enum_field("mode", [](auto& c) -> auto& { return c.harness.mode; }, mode_from_string));
    f.push_back(enum_field("source", [](auto& c) -> auto& { return c.source; }, source_from_string));
    f.push_back({"data", [](RunConfig& c, std::string_view v) { c.csv_path = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.csv_path; }});
    f.push_back({"seeds", [](RunConfig& c, std::string_view v) { c.seeds = parse_seeds(v); },
                 [](const RunConfig& c) {
                   std::vector<std::string> s;
                   for (auto v : c.seeds) s.push_back(std::to_string(v));
                   return join(s);
                 }});
    f.push_back({"out", [](RunConfig& c, std::string_view v) { c.out_dir = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.out_dir; }});
    f.push_back({"precision",
                 [](RunConfig& c, std::string_view v) { c.precision = static_cast<int>(parse_unsigned<unsigned>(v)); },
                 [](const RunConfig& c) { return std::to_string(c.precision); }});
    f.push_back({"ablate", [](RunConfig& c, std::string_view v) { c.ablations = parse_ablations(v); },
                 [](const RunConfig& c) {
                   std::vector<std::string> s;
                   for (auto a : c.ablations) s.emplace_back(to_string(a));
                   return join(s);
                 }});

    f.push_back(enum_field("extractor.fusion", [](auto& c) -> auto& { return c.harness.network.extractor.fusion; },
                           fusion_from_string));
    f.push_back(size_field("extractor.sensor_features",
                           [](auto& c) -> auto& { return c.harness.network.extractor.sensor_features; }));
    f.push_back(size_field("extractor.window", [](auto& c) -> auto& { return c.harness.network.extractor.window; }));
    f.push_back(enum_field("extractor.layout",
                           [](auto& c) -> auto& { return c.harness.network.extractor.layout; },
                           layout_from_string));
    f.push_back({"extractor.conv1d_channels",
                 [](RunConfig& c, std::string_view v) {
                   std::vector<std::pair<std::size_t, std::size_t>> plan;
                   for (const auto& part : split(v, ',')) {
                     const auto io = split(part, ':');
                     if (io.size() != 2) throw ConfigError("expected in:out pairs, got '" + part + "'");
                     plan.emplace_back(parse_unsigned<std::size_t>(io[0]), parse_unsigned<std::size_t>(io[1]));
                   }
                   c.harness.network.extractor.conv1d_channels = plan;
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> s;
                   for (auto [i, o] : c.harness.network.extractor.conv1d_channels)
                     s.push_back(std::to_string(i) + ":" + std::to_string(o));
                   return join(s);
                 }});
    f.push_back(size_field("extractor.conv1d_kernel",
                           [](auto& c) -> auto& { return c.harness.network.extractor.conv1d_kernel; }));
    f.push_back(size_field("extractor.conv1d_stride",
                           [](auto& c) -> auto& { return c.harness.network.extractor.conv1d_stride; }));
    f.push_back(size_field("extractor.conv1d_padding",
                           [](auto& c) -> auto& { return c.harness.network.extractor.conv1d_padding; }));
    f.push_back(bool_field("extractor.conv1d_residual",
                           [](auto& c) -> auto& { return c.harness.network.extractor.conv1d_residual; }));
    f.push_back(bool_field("extractor.bypass_sensor_conv",
                           [](auto& c) -> auto& { return c.harness.network.extractor.bypass_sensor_conv; }));
    f.push_back(size_field("extractor.image_channels",
                           [](auto& c) -> auto& { return c.harness.network.extractor.image_channels; }));
    f.push_back(size_field("extractor.image_height",
                           [](auto& c) -> auto& { return c.harness.network.extractor.image_height; }));
    f.push_back(size_field("extractor.image_width",
                           [](auto& c) -> auto& { return c.harness.network.extractor.image_width; }));
    f.push_back({"extractor.conv2d_channels",
                 [](RunConfig& c, std::string_view v) {
                   std::vector<std::size_t> plan;
                   for (const auto& part : split(v, ',')) plan.push_back(parse_unsigned<std::size_t>(part));
                   c.harness.network.extractor.conv2d_channels = plan;
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> s;
                   for (auto v : c.harness.network.extractor.conv2d_channels) s.push_back(std::to_string(v));
                   return join(s);
                 }});
    f.push_back(size_field("extractor.conv2d_kernel",
                           [](auto& c) -> auto& { return c.harness.network.extractor.conv2d_kernel; }));
    f.push_back(size_field("extractor.conv2d_stride",
                           [](auto& c) -> auto& { return c.harness.network.extractor.conv2d_stride; }));
    f.push_back(real_field("extractor.rate", [](auto& c) -> auto& { return c.harness.extractor_rate; }));

    f.push_back(size_field("network.classes", [](auto& c) -> auto& { return c.harness.network.classes; }));
    f.push_back(size_field("network.initial_width",
                           [](auto& c) -> auto& { return c.harness.network.initial_width; }));
    f.push_back(enum_field("network.activation",
                           [](auto& c) -> auto& { return c.harness.network.hidden_activation; },
                           activation_from_string));
    f.push_back(real_field("network.momentum", [](auto& c) -> auto& { return c.harness.network.momentum; }));
    f.push_back(bool_field("network.evolve", [](auto& c) -> auto& { return c.harness.network.evolve; }));
    f.push_back(real_field("ns.decay", [](auto& c) -> auto& { return c.harness.network.ns.decay; }));
    f.push_back(bool_field("ns.cumulative", [](auto& c) -> auto& { return c.harness.network.ns.cumulative; }));
    f.push_back(size_field("ns.warmup", [](auto& c) -> auto& { return c.harness.network.ns.warmup; }));

    f.push_back(real_field("drift.alpha_drift", [](auto& c) -> auto& { return c.harness.drift.alpha_drift; }));
    f.push_back(real_field("drift.alpha_warning", [](auto& c) -> auto& { return c.harness.drift.alpha_warning; }));
    f.push_back({"drift.cut_fractions",
                 [](RunConfig& c, std::string_view v) {
                   std::vector<double> fr;
                   for (const auto& part : split(v, ',')) fr.push_back(parse_real(part));
                   c.harness.drift.cut_fractions = fr;
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> s;
                   for (double v : c.harness.drift.cut_fractions) s.push_back(fmt_double(v));
                   return join(s);
                 }});
    f.push_back(size_field("drift.window_batches",
                           [](auto& c) -> auto& { return c.harness.drift.window_batches; }));
    f.push_back({"drift.cut_rule",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "first-hit") c.harness.drift.cut_rule = CutRule::FirstHit;
                   else if (v == "lowest-bound") c.harness.drift.cut_rule = CutRule::LowestUpperBound;
                   else throw ConfigError("expected first-hit or lowest-bound, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.harness.drift.cut_rule == CutRule::FirstHit ? "first-hit" : "lowest-bound");
                 }});
    f.push_back({"drift.guard",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "none") c.harness.drift.guard = CutGuard::None;
                   else if (v == "prefix-below") c.harness.drift.guard = CutGuard::PrefixBelow;
                   else if (v == "prefix-above") c.harness.drift.guard = CutGuard::PrefixAbove;
                   else throw ConfigError("expected none, prefix-below or prefix-above, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) {
                   switch (c.harness.drift.guard) {
                     case CutGuard::None: return std::string("none");
                     case CutGuard::PrefixBelow: return std::string("prefix-below");
                     case CutGuard::PrefixAbove: return std::string("prefix-above");
                   }
                   return std::string("none");
                 }});
    f.push_back({"drift.statistic",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "overall-vs-prefix") c.harness.drift.statistic = GapStatistic::OverallVsPrefix;
                   else if (v == "prefix-vs-suffix") c.harness.drift.statistic = GapStatistic::PrefixVsSuffix;
                   else throw ConfigError("expected overall-vs-prefix or prefix-vs-suffix, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.harness.drift.statistic == GapStatistic::OverallVsPrefix ? "overall-vs-prefix"
                                                                                                : "prefix-vs-suffix");
                 }});

    f.push_back(size_field("memory.capacity", [](auto& c) -> auto& { return c.harness.memory_capacity; }));
    f.push_back(real_field("memory.hard_delta", [](auto& c) -> auto& { return c.harness.hard_delta; }));
    f.push_back(real_field("memory.edge_lower", [](auto& c) -> auto& { return c.harness.band.lower_confidence; }));
    f.push_back(real_field("memory.edge_upper", [](auto& c) -> auto& { return c.harness.band.upper_confidence; }));
    f.push_back(bool_field("memory.replay", [](auto& c) -> auto& { return c.harness.replay; }));
    f.push_back(real_field("memory.replay_rate", [](auto& c) -> auto& { return c.harness.replay_rate; }));

    f.push_back(bool_field("forgetting.enabled", [](auto& c) -> auto& { return c.harness.soft_forgetting; }));
    f.push_back(enum_field("forgetting.target", [](auto& c) -> auto& { return c.harness.rate_target; },
                           rate_target_from_string));
    f.push_back(real_field("forgetting.floor", [](auto& c) -> auto& { return c.harness.rate_floor; }));
    f.push_back(real_field("forgetting.cap", [](auto& c) -> auto& { return c.harness.rate_cap; }));
    f.push_back(size_field("train.epochs", [](auto& c) -> auto& { return c.harness.epochs; }));

    f.push_back(size_field("csv.batch_size", [](auto& c) -> auto& { return c.csv.batch_size; }));
    f.push_back(size_field("csv.features", [](auto& c) -> auto& { return c.csv.features; }));
    f.push_back(size_field("csv.classes", [](auto& c) -> auto& { return c.csv.classes; }));
    f.push_back({"csv.label_column", [](RunConfig& c, std::string_view v) { c.csv.label_column = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.csv.label_column; }});
    f.push_back(enum_field("csv.normalization", [](auto& c) -> auto& { return c.csv.normalization; },
                           normalization_from_string));

    f.push_back(size_field("synthetic.features", [](auto& c) -> auto& { return c.synthetic.features; }));
    f.push_back(size_field("synthetic.classes", [](auto& c) -> auto& { return c.synthetic.classes; }));
    f.push_back(size_field("synthetic.batch_size", [](auto& c) -> auto& { return c.synthetic.batch_size; }));
    f.push_back(size_field("synthetic.batches", [](auto& c) -> auto& { return c.synthetic.batches; }));
    f.push_back(real_field("synthetic.separation", [](auto& c) -> auto& { return c.synthetic.separation; }));
    f.push_back(real_field("synthetic.noise", [](auto& c) -> auto& { return c.synthetic.noise; }));
    f.push_back(real_field("synthetic.shift", [](auto& c) -> auto& { return c.synthetic.shift; }));
    f.push_back(bool_field("synthetic.rotate", [](auto& c) -> auto& { return c.synthetic.rotate; }));
    f.push_back({"synthetic.drifts",
                 [](RunConfig& c, std::string_view v) {
                   std::vector<ScheduledDrift> s;
                   for (const auto& part : split(v, ',')) {
                     if (part.empty()) continue;
                     const auto bt = split(part, ':');
                     ScheduledDrift d;
                     d.batch = parse_unsigned<std::size_t>(bt[0]);
                     if (bt.size() > 1) d.type = drift_type_from_string(bt[1]);
                     s.push_back(d);
                   }
                   c.synthetic.schedule = s;
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> s;
                   for (const auto& d : c.synthetic.schedule)
                     s.push_back(std::to_string(d.batch) + ":" + std::string(to_string(d.type)));
                   return join(s);
                 }});
    f.push_back(size_field("synthetic.gradual_span", [](auto& c) -> auto& { return c.synthetic.gradual_span; }));
    f.push_back(bool_field("synthetic.images", [](auto& c) -> auto& { return c.synthetic.images; }));
    f.push_back(real_field("synthetic.image_noise", [](auto& c) -> auto& { return c.synthetic.image_noise; }));
    return f;
  }();
  return fields;
}

/// Applies one key=value assignment; errors name the key.
inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& f : config_fields()) {
    if (f.key == key) {
      try {
        f.set(cfg, value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Flat `key = value` lines; `#` starts a comment.
inline void load_config(RunConfig& cfg, std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    std::string_view body = detail::trim(std::string_view(line).substr(0, hash));
    if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(cfg, detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  load_config(base, in);
  return base;
}

/// Effective configuration; loading it back reproduces `cfg`.
inline std::string emit_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : config_fields()) os << f.key << " = " << f.get(cfg) << '\n';
  return os.str();
}

/// Generator settings for one seed: the stream seed follows the run seed and
/// shapes follow the network.
inline SyntheticDriftConfig synthetic_for(const RunConfig& cfg, std::uint64_t seed) {
  SyntheticDriftConfig s = cfg.synthetic;
  s.seed = seed;
  s.classes = cfg.harness.network.classes;
  s.image_channels = cfg.harness.network.extractor.image_channels;
  s.image_height = cfg.harness.network.extractor.image_height;
  s.image_width = cfg.harness.network.extractor.image_width;
  return s;
}

inline std::vector<StreamBatch> load_batches(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.source == Source::Csv) return ingest_csv(cfg.csv_path, cfg.csv);
  return generate_stream(synthetic_for(cfg, seed));
}

}  // namespace nadine

#endif  // NADINE_CONFIG_HPP
