#include "lace/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "lace/errors.hpp"

namespace lace {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value \"" + std::string(text) + "\" for " + std::string(key));
  }
  return value;
}

std::size_t parse_count(std::string_view key, std::string_view text) {
  return parse_number<std::size_t>(key, text);
}

double parse_real(std::string_view key, std::string_view text) {
  return parse_number<double>(key, text);
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

struct KeyHandler {
  ConfigKey key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define LACE_COUNT(name, field, help)                                                          \
  KeyHandler {                                                                                 \
    {name, help}, [](ExperimentConfig& c, std::string_view v) { c.field = parse_count(name, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                      \
  }
#define LACE_REAL(name, field, help)                                                          \
  KeyHandler {                                                                                \
    {name, help}, [](ExperimentConfig& c, std::string_view v) { c.field = parse_real(name, v); }, \
        [](const ExperimentConfig& c) { return format_real(c.field); }                        \
  }

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = {
      {{"experiment", "exp1|exp2|exp3|exp4|exp5|cluster-sweep|real-embed"},
       [](ExperimentConfig& c, std::string_view v) { c.experiment = parse_experiment(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); }},
      {{"seed", "master seed"},
       [](ExperimentConfig& c, std::string_view v) { c.train.seed = parse_number<std::uint64_t>("seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.train.seed); }},
      LACE_COUNT("d_base", train.d_base, "initial active projection dimensions"),
      LACE_COUNT("d_max", train.d_max, "projection capacity"),
      LACE_COUNT("d_emb", train.d_emb, "embedding width"),
      LACE_COUNT("batch_size", train.batch_size, "samples per step"),
      LACE_REAL("lr", train.lr, "Adam learning rate"),
      LACE_REAL("sigma", train.sigma, "std of a newly activated projection row"),
      LACE_REAL("current_fraction", train.current_fraction,
                "share of each batch drawn from the newest domain"),
      LACE_COUNT("num_domains", train.num_domains, "domains in the synthetic schedule"),
      LACE_COUNT("phase_length", train.phase_length, "steps per synthetic domain"),
      LACE_COUNT("eval_interval", train.eval_interval, "steps between evaluations"),
      LACE_COUNT("eval_per_domain", train.eval_per_domain, "held-out samples per synthetic domain"),
      LACE_COUNT("window", train.detector.window, "detector baseline window W"),
      LACE_REAL("spike_ratio", train.detector.spike_ratio, "spike threshold tau"),
      LACE_COUNT("confirm", train.detector.confirm, "consecutive spikes K"),
      LACE_COUNT("cooldown", train.detector.cooldown, "steps between expansions C"),
      LACE_COUNT("warmup", train.detector.warmup, "steps before the detector arms"),
      {{"sustained_threshold", "sustained-loss threshold theta, or none"},
       [](ExperimentConfig& c, std::string_view v) {
         c.train.detector.sustained_threshold =
             v == "none" ? std::nullopt : std::optional(parse_real("sustained_threshold", v));
       },
       [](const ExperimentConfig& c) {
         const auto& t = c.train.detector.sustained_threshold;
         return t ? format_real(*t) : std::string("none");
       }},
      {{"sustained_steps", "sustained-loss steps S, or none"},
       [](ExperimentConfig& c, std::string_view v) {
         c.train.detector.sustained_steps =
             v == "none" ? std::nullopt : std::optional(parse_count("sustained_steps", v));
       },
       [](const ExperimentConfig& c) {
         const auto& s = c.train.detector.sustained_steps;
         return s ? std::to_string(*s) : std::string("none");
       }},
      LACE_REAL("init_embed", train.init.embed, "embedding init std"),
      LACE_REAL("init_proj", train.init.proj, "projection init std (0: sqrt(2/d_in))"),
      LACE_REAL("init_head", train.init.head, "head init std (0: sqrt(1/d_max))"),
      {{"confirm_values", "comma-separated K values compared by exp4"},
       [](ExperimentConfig& c, std::string_view v) {
         c.confirm_values.clear();
         for (auto part : split_list(v)) c.confirm_values.push_back(parse_count("confirm_values", part));
       },
       [](const ExperimentConfig& c) { return join(c.confirm_values); }},
      LACE_COUNT("d_pca", d_pca, "PCA output width for clustering"),
      LACE_REAL("delta", delta, "cosine distance threshold for clustering"),
      {{"inputs", "comma-separated LACT files"},
       [](ExperimentConfig& c, std::string_view v) {
         c.inputs.clear();
         for (auto part : split_list(v)) c.inputs.emplace_back(part);
       },
       [](const ExperimentConfig& c) { return join(c.inputs); }},
      {{"phases", "comma-separated phase lengths for real-embed, one per input"},
       [](ExperimentConfig& c, std::string_view v) {
         c.phases.clear();
         for (auto part : split_list(v)) c.phases.push_back(parse_number<long>("phases", part));
       },
       [](const ExperimentConfig& c) { return join(c.phases); }},
      LACE_REAL("holdout_fraction", holdout_fraction, "held-out share per real-embed domain"),
  };
  return table;
}

#undef LACE_COUNT
#undef LACE_REAL

const KeyHandler& handler(std::string_view key) {
  for (const auto& h : handlers()) {
    if (h.key.name == key) return h;
  }
  throw ConfigError("unknown key \"" + std::string(key) + "\"");
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::exp1:
      return "exp1";
    case Experiment::exp2:
      return "exp2";
    case Experiment::exp3:
      return "exp3";
    case Experiment::exp4:
      return "exp4";
    case Experiment::exp5:
      return "exp5";
    case Experiment::cluster_sweep:
      return "cluster-sweep";
    case Experiment::real_embed:
      return "real-embed";
  }
  return "exp1";
}

Experiment parse_experiment(std::string_view id) {
  for (auto e : {Experiment::exp1, Experiment::exp2, Experiment::exp3, Experiment::exp4,
                 Experiment::exp5, Experiment::cluster_sweep, Experiment::real_embed}) {
    if (to_string(e) == id) return e;
  }
  throw ConfigError("unknown experiment \"" + std::string(id) +
                    "\" (expected exp1..exp5, cluster-sweep or real-embed)");
}

void ExperimentConfig::validate() const {
  train.validate();
  if (experiment == Experiment::exp4 && confirm_values.size() < 2) {
    throw ConfigError("confirm_values needs at least two entries");
  }
  for (const auto k : confirm_values) {
    if (k == 0) throw ConfigError("confirm_values entries must be >= 1");
  }
  if (d_pca == 0) throw ConfigError("d_pca must be positive");
  if (!(delta >= 0.0 && delta <= 2.0)) throw ConfigError("delta must lie in [0, 2]");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in (0, 1)");
  }
  for (const long p : phases) {
    if (p <= 0) throw ConfigError("phases must be positive");
  }
  if (experiment == Experiment::real_embed || experiment == Experiment::cluster_sweep) {
    if (inputs.empty()) throw ConfigError(std::string(to_string(experiment)) + " needs inputs");
  }
  if (experiment == Experiment::real_embed && !phases.empty() && phases.size() != inputs.size()) {
    throw ConfigError("phases needs one entry per input");
  }
}

ExperimentConfig preset(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::exp1:
    case Experiment::exp2:
    case Experiment::exp3:
    case Experiment::exp4:
    case Experiment::cluster_sweep:
      break;
    case Experiment::exp5:
      c.train.num_domains = 50;
      c.train.d_base = 8;
      c.train.d_max = 48;
      // A model this narrow never settles enough for clean spikes, so the
      // sustained-loss signal is enabled.
      c.train.detector.sustained_threshold = 1.0;
      c.train.detector.sustained_steps = 50;
      c.train.init.head = 0.06;
      break;
    case Experiment::real_embed:
      c.train.d_base = 32;
      c.train.d_max = 128;
      break;
  }
  return c;
}

std::span<const ConfigKey> config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& h : handlers()) out.push_back(h.key);
    return out;
  }();
  return keys;
}

void set_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  handler(key).set(config, trim(value));
}

std::string get_value(const ExperimentConfig& config, std::string_view key) {
  return handler(key).get(config);
}

std::vector<ConfigEntry> parse_config(std::istream& in, std::string_view source) {
  std::vector<ConfigEntry> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(line) + ": ";
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    ConfigEntry entry{std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1))),
                      line};
    if (entry.key.empty()) throw ConfigError(where + "missing key");
    try {
      handler(entry.key);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

void apply_entries(ExperimentConfig& config, std::span<const ConfigEntry> entries,
                   std::string_view source) {
  for (const auto& entry : entries) {
    try {
      set_value(config, entry.key, entry.value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(source) + ":" + std::to_string(entry.line) + ": " + e.what());
    }
  }
}

std::string to_text(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const auto& h : handlers()) out << h.key.name << " = " << h.get(config) << "\n";
  return out.str();
}

}  // namespace lace
