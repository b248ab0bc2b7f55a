#ifndef NADINE_STREAM_HPP
#define NADINE_STREAM_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nadine/batch.hpp"
#include "nadine/errors.hpp"
#include "nadine/random.hpp"

namespace nadine {

enum class DriftType { Abrupt, Gradual };

inline std::string_view to_string(DriftType t) { return t == DriftType::Abrupt ? "abrupt" : "gradual"; }

inline DriftType drift_type_from_string(std::string_view s) {
  if (s == "abrupt") return DriftType::Abrupt;
  if (s == "gradual") return DriftType::Gradual;
  throw ConfigError("unknown drift type '" + std::string(s) + "' (expected abrupt or gradual)");
}

struct ScheduledDrift {
  std::size_t batch = 0;
  DriftType type = DriftType::Abrupt;
};

/// Class-conditional isotropic Gaussians; one set of class means per concept.
struct Concept {
  std::vector<std::vector<double>> means;  // [classes][features]
  double noise = 0.1;
  /// Per-class image templates [C*H*W], empty without images.
  std::vector<std::vector<double>> image_means;
};

struct SyntheticDriftConfig {
  std::size_t features = 48;
  std::size_t classes = 3;
  std::size_t batch_size = 50;
  std::size_t batches = 60;
  /// Spread of the class means around 0.5 per feature.
  double separation = 0.2;
  double noise = 0.1;
  /// Each generated concept after the first moves every class mean by
  /// `shift * noise` per feature with a random sign.
  double shift = 0.0;
  /// Also hand every class the means of the next class, so the decision
  /// boundary itself moves (a real change of P(y | x)).
  bool rotate = true;
  std::vector<ScheduledDrift> schedule;
  std::uint64_t seed = 1;
  /// Generated when empty: one concept per scheduled drift plus the initial one.
  std::vector<Concept> concepts;
  bool images = false;
  std::size_t image_channels = 3;
  std::size_t image_height = 12;
  std::size_t image_width = 12;
  double image_noise = 0.2;
  /// Batches over which a gradual drift interpolates the class means.
  std::size_t gradual_span = 5;

  void validate() const {
    if (features == 0 || classes < 2 || batch_size == 0 || batches == 0) {
      throw ConfigError("synthetic stream needs features >= 1, classes >= 2, batch_size >= 1, batches >= 1");
    }
    if (!concepts.empty() && concepts.size() < schedule.size() + 1) {
      throw ConfigError("drift schedule with " + std::to_string(schedule.size()) + " entries needs " +
                        std::to_string(schedule.size() + 1) + " concepts");
    }
    for (const auto& c : concepts) {
      if (c.means.size() != classes) throw ConfigError("concept needs one mean row per class");
      for (const auto& m : c.means)
        if (m.size() != features) throw ConfigError("concept mean length differs from the feature count");
      if (images && c.image_means.size() != classes) throw ConfigError("concept needs one image template per class");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
      if (schedule[i].batch <= schedule[i - 1].batch) throw ConfigError("drift schedule must be strictly increasing");
    }
    if (gradual_span == 0) throw ConfigError("gradual_span must be >= 1");
  }
};

namespace detail {

inline Concept shifted_concept(const Concept& prev, const SyntheticDriftConfig& cfg, Rng& rng) {
  Concept c = prev;
  std::vector<double> sign(cfg.features);
  for (auto& v : sign) v = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  for (auto& m : c.means)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += cfg.shift * cfg.noise * sign[j];
  if (cfg.images) {
    std::vector<double> isign(c.image_means.front().size());
    for (auto& v : isign) v = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    for (auto& m : c.image_means)
      for (std::size_t j = 0; j < m.size(); ++j) m[j] += cfg.shift * cfg.image_noise * isign[j];
  }
  if (cfg.rotate) {
    std::rotate(c.means.begin(), c.means.begin() + 1, c.means.end());
    if (!c.image_means.empty()) std::rotate(c.image_means.begin(), c.image_means.begin() + 1, c.image_means.end());
  }
  return c;
}

inline Concept random_concept(const SyntheticDriftConfig& cfg, Rng& rng) {
  Concept c;
  c.noise = cfg.noise;
  c.means.assign(cfg.classes, std::vector<double>(cfg.features));
  for (auto& m : c.means)
    for (auto& v : m) v = 0.5 + cfg.separation * rng.normal();
  if (cfg.images) {
    // Per-channel class intensity plus a fixed texture, so pooled features
    // still carry the class.
    const std::size_t plane = cfg.image_height * cfg.image_width;
    c.image_means.assign(cfg.classes, std::vector<double>(cfg.image_channels * plane));
    for (auto& m : c.image_means)
      for (std::size_t ch = 0; ch < cfg.image_channels; ++ch) {
        const double level = rng.uniform(0.2, 0.8);
        for (std::size_t p = 0; p < plane; ++p) m[ch * plane + p] = level + 0.1 * rng.normal();
      }
  }
  return c;
}

inline std::vector<double> lerp(const std::vector<double>& a, const std::vector<double>& b, double t) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - t) * a[i] + t * b[i];
  return out;
}

}  // namespace detail

/// Deterministic stream of `batches` batches under the drift schedule.
/// Abrupt drifts switch concept at the scheduled batch; gradual drifts
/// interpolate class means linearly over `gradual_span` batches.
inline std::vector<StreamBatch> generate_stream(const SyntheticDriftConfig& cfg);

/// The concept sequence of a stream, one more than the drifts. Draws from
/// `rng` exactly as `generate_stream` does before its first sample.
inline std::vector<Concept> stream_concepts(const SyntheticDriftConfig& cfg, Rng& rng) {
  std::vector<Concept> concepts = cfg.concepts;
  if (concepts.empty()) concepts.push_back(detail::random_concept(cfg, rng));
  while (concepts.size() < cfg.schedule.size() + 1) concepts.push_back(detail::shifted_concept(concepts.back(), cfg, rng));
  return concepts;
}

/// Concepts of the stream `generate_stream(cfg)` produces.
inline std::vector<Concept> stream_concepts(const SyntheticDriftConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  return stream_concepts(cfg, rng);
}

/// `n` fresh samples of one concept, e.g. a held-out set for an old concept.
inline StreamBatch sample_concept(const Concept& c, const SyntheticDriftConfig& cfg, std::size_t n, Rng& rng) {
  const std::size_t img_len = cfg.image_channels * cfg.image_height * cfg.image_width;
  StreamBatch batch;
  std::vector<double> sensors;
  sensors.reserve(n * cfg.features);
  if (cfg.images) batch.images.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = rng.index(cfg.classes);
    for (double m : c.means[y]) sensors.push_back(m + c.noise * rng.normal());
    if (cfg.images) {
      std::vector<double> px(img_len);
      for (std::size_t p = 0; p < img_len; ++p) px[p] = c.image_means[y][p] + cfg.image_noise * rng.normal();
      batch.images->emplace_back(Shape{cfg.image_channels, cfg.image_height, cfg.image_width}, std::move(px));
    }
    batch.labels.push_back(y);
  }
  batch.sensors = Tensor<double>({n, cfg.features}, std::move(sensors));
  return batch;
}

inline std::vector<StreamBatch> generate_stream(const SyntheticDriftConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::vector<Concept> concepts = stream_concepts(cfg, rng);

  // Mixing weight of concept i+1 over concept i at batch k.
  auto concept_at = [&](std::size_t k) {
    std::size_t from = 0;
    double t = 0.0;
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
      const auto& d = cfg.schedule[i];
      if (k < d.batch) break;
      const double span = d.type == DriftType::Abrupt ? 1.0 : static_cast<double>(cfg.gradual_span);
      const double progress = std::min(1.0, (static_cast<double>(k - d.batch) + 1.0) / span);
      if (progress >= 1.0) {
        from = i + 1;
        t = 0.0;
      } else {
        from = i;
        t = progress;
      }
    }
    return std::pair{from, t};
  };

  std::vector<StreamBatch> out;
  out.reserve(cfg.batches);
  const std::size_t img_len = cfg.image_channels * cfg.image_height * cfg.image_width;
  for (std::size_t k = 0; k < cfg.batches; ++k) {
    const auto [from, t] = concept_at(k);
    const Concept& a = concepts[from];
    const Concept& b = concepts[std::min(from + 1, concepts.size() - 1)];
    StreamBatch batch;
    batch.index = k;
    std::vector<double> sensors;
    sensors.reserve(cfg.batch_size * cfg.features);
    if (cfg.images) batch.images.emplace();
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      const std::size_t y = rng.index(cfg.classes);
      const auto mean = detail::lerp(a.means[y], b.means[y], t);
      const double noise = (1.0 - t) * a.noise + t * b.noise;
      for (double m : mean) sensors.push_back(m + noise * rng.normal());
      if (cfg.images) {
        const auto im = detail::lerp(a.image_means[y], b.image_means[y], t);
        std::vector<double> px(img_len);
        for (std::size_t p = 0; p < img_len; ++p) px[p] = im[p] + cfg.image_noise * rng.normal();
        batch.images->emplace_back(Shape{cfg.image_channels, cfg.image_height, cfg.image_width}, std::move(px));
      }
      batch.labels.push_back(y);
    }
    batch.sensors = Tensor<double>({cfg.batch_size, cfg.features}, std::move(sensors));
    out.push_back(std::move(batch));
  }
  return out;
}

enum class Normalization { Running, Global, None };

inline std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::Running: return "running";
    case Normalization::Global: return "global";
    case Normalization::None: return "none";
  }
  return "running";
}

inline Normalization normalization_from_string(std::string_view s) {
  if (s == "running") return Normalization::Running;
  if (s == "global") return Normalization::Global;
  if (s == "none") return Normalization::None;
  throw ConfigError("unknown normalization '" + std::string(s) + "' (expected running, global or none)");
}

struct CsvSchema {
  std::size_t features = 48;
  std::string label_column = "label";
  std::size_t classes = 3;
  std::size_t batch_size = 50;
  Normalization normalization = Normalization::Running;
};

/// Raw table: feature rows in file order and their labels.
struct CsvTable {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads header + rows. Rows and columns in errors are 1-based file positions.
inline CsvTable read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("csv input is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  std::size_t label_col = header.size();
  CsvTable table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (detail::trim(header[c]) == schema.label_column) {
      label_col = c;
    } else {
      table.feature_names.emplace_back(detail::trim(header[c]));
    }
  }
  if (label_col == header.size()) throw SchemaError("csv header has no '" + schema.label_column + "' column");
  if (table.feature_names.size() != schema.features) {
    throw SchemaError("csv header has " + std::to_string(table.feature_names.size()) + " feature columns, expected " +
                      std::to_string(schema.features));
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(row, std::min(cells.size(), header.size()) + 1,
                       "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> values;
    values.reserve(schema.features);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v)) {
        throw ParseError(row, c + 1, "non-numeric cell '" + cells[c] + "'");
      }
      if (c == label_col) {
        if (v != std::floor(v) || v < 0.0 || v >= static_cast<double>(schema.classes)) {
          throw SchemaError("row " + std::to_string(row) + ": unknown label '" + cells[c] + "'");
        }
        table.labels.push_back(static_cast<std::size_t>(v));
      } else {
        values.push_back(v);
      }
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

/// Min-max scaling to [0, 1]. Running mode folds each row into the column
/// ranges before scaling it (no lookahead); zero ranges map to 0.
inline void normalize(CsvTable& table, Normalization mode) {
  if (mode == Normalization::None || table.rows.empty()) return;
  const std::size_t u = table.rows.front().size();
  std::vector<double> lo(u, std::numeric_limits<double>::infinity()), hi(u, -std::numeric_limits<double>::infinity());
  auto scale = [&](std::vector<double>& r) {
    for (std::size_t j = 0; j < u; ++j) {
      const double range = hi[j] - lo[j];
      r[j] = range > 0.0 ? (r[j] - lo[j]) / range : 0.0;
    }
  };
  auto fold = [&](const std::vector<double>& r) {
    for (std::size_t j = 0; j < u; ++j) {
      lo[j] = std::min(lo[j], r[j]);
      hi[j] = std::max(hi[j], r[j]);
    }
  };
  if (mode == Normalization::Global) {
    for (const auto& r : table.rows) fold(r);
    for (auto& r : table.rows) scale(r);
    return;
  }
  for (auto& r : table.rows) {
    fold(r);
    scale(r);
  }
}

/// Cuts rows into batches of `batch_size` in file order; the last batch
/// keeps whatever rows remain.
inline std::vector<StreamBatch> to_batches(const CsvTable& table, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<StreamBatch> out;
  const std::size_t n = table.rows.size();
  const std::size_t u = n > 0 ? table.rows.front().size() : 0;
  for (std::size_t start = 0, k = 0; start < n; start += batch_size, ++k) {
    const std::size_t end = std::min(n, start + batch_size);
    StreamBatch b;
    b.index = k;
    std::vector<double> data;
    data.reserve((end - start) * u);
    for (std::size_t i = start; i < end; ++i) {
      data.insert(data.end(), table.rows[i].begin(), table.rows[i].end());
      b.labels.push_back(table.labels[i]);
    }
    b.sensors = Tensor<double>({end - start, u}, std::move(data));
    out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<StreamBatch> ingest_csv(std::istream& in, const CsvSchema& schema = {}) {
  CsvTable table = read_csv(in, schema);
  normalize(table, schema.normalization);
  return to_batches(table, schema.batch_size);
}

inline std::vector<StreamBatch> ingest_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open csv file '" + path + "'");
  return ingest_csv(in, schema);
}

}  // namespace nadine

#endif  // NADINE_STREAM_HPP
