#include "gplfm/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

namespace gplfm {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& reason) {
  throw ConfigError(path + ": " + reason);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Strict object reader: every key must be consumed exactly once, unknown keys
// are reported with their full dotted path.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  ~ObjectReader() = default;

  bool has(const std::string& key) {
    if (node_.contains(key)) {
      seen_.push_back(key);
      return true;
    }
    return false;
  }

  const json& at(const std::string& key) {
    if (!node_.contains(key)) fail(join(path_, key), "missing required field");
    seen_.push_back(key);
    return node_.at(key);
  }

  double number(const std::string& key, double fallback) {
    return has_value(key) ? to_number(node_.at(key), join(path_, key)) : fallback;
  }

  double required_number(const std::string& key) {
    return to_number(at(key), join(path_, key));
  }

  long integer(const std::string& key, long fallback) {
    if (!has_value(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      fail(join(path_, key), "expected an integer");
    }
    return v.get<long>();
  }

  unsigned required_seed(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long>() >= 0)) {
      fail(join(path_, key), "expected a non-negative integer seed");
    }
    return v.get<unsigned>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has_value(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) fail(join(path_, key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has_value(key)) return fallback;
    return required_string(key);
  }

  std::string required_string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(join(path_, key), "expected a string");
    return v.get<std::string>();
  }

  const std::string& path() const { return path_; }

  void finish() {
    for (const auto& item : node_.items()) {
      bool known = false;
      for (const auto& k : seen_) {
        if (k == item.key()) {
          known = true;
          break;
        }
      }
      if (!known) fail(join(path_, item.key()), "unknown field");
    }
  }

 private:
  bool has_value(const std::string& key) {
    if (!node_.contains(key)) return false;
    seen_.push_back(key);
    return true;
  }

  static double to_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  const json& node_;
  std::string path_;
  std::vector<std::string> seen_;
};

SystemParams parse_system(const json& node, const std::string& path) {
  ObjectReader obj(node, path);
  SystemParams out;
  out.mass = obj.required_number("mass");
  out.damping = obj.required_number("damping");
  out.stiffness = obj.required_number("stiffness");
  obj.finish();
  try {
    out.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return out;
}

FrictionParams parse_friction(const json& node, const std::string& path) {
  ObjectReader obj(node, path);
  FrictionParams out;
  out.f_star = obj.number("f_star", out.f_star);
  out.a = obj.number("a", out.a);
  out.b = obj.number("b", out.b);
  out.c = obj.number("c", out.c);
  out.v_star = obj.number("v_star", out.v_star);
  out.epsilon = obj.number("epsilon", out.epsilon);
  obj.finish();
  try {
    out.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return out;
}

void parse_prior_entry(ObjectReader& parent, const std::string& key, double& mean, double& var) {
  if (!parent.has(key)) return;
  ObjectReader obj(parent.at(key), join(parent.path(), key));
  mean = obj.number("mean", mean);
  var = obj.number("var", var);
  obj.finish();
}

HyperPrior parse_kernel(const json& node, const std::string& path) {
  ObjectReader obj(node, path);
  HyperPrior prior;
  if (obj.has("smoothness")) {
    const json& v = obj.at("smoothness");
    if (!v.is_string() || v.get<std::string>() != "matern12") {
      fail(join(path, "smoothness"), "only 'matern12' is supported");
    }
  }
  if (obj.has("prior")) {
    ObjectReader p(obj.at("prior"), join(path, "prior"));
    parse_prior_entry(p, "force_variance", prior.force_variance_mean, prior.force_variance_var);
    parse_prior_entry(p, "lengthscale", prior.lengthscale_mean, prior.lengthscale_var);
    parse_prior_entry(p, "noise_variance", prior.noise_variance_mean, prior.noise_variance_var);
    p.finish();
  }
  obj.finish();
  try {
    prior.validate();
  } catch (const std::exception& e) {
    fail(join(path, "prior"), e.what());
  }
  return prior;
}

SyntheticSignalConfig parse_signal_source(const json& node, const std::string& path) {
  ObjectReader obj(node, path);
  SyntheticSignalConfig out;
  const std::string type = obj.required_string("type");
  if (type == "jonswap") {
    out.type = SyntheticSignalConfig::Type::Jonswap;
    JonswapParams& p = out.jonswap;
    p.significant_wave_height = obj.number("significant_wave_height", p.significant_wave_height);
    p.peak_period = obj.number("peak_period", p.peak_period);
    p.sigma_below = obj.number("sigma_below", p.sigma_below);
    p.sigma_above = obj.number("sigma_above", p.sigma_above);
    p.grid_start = obj.number("grid_start", p.grid_start);
    p.grid_step = obj.number("grid_step", p.grid_step);
    p.grid_stop = obj.number("grid_stop", p.grid_stop);
    p.amplitude_scale = obj.number("amplitude_scale", p.amplitude_scale);
  } else if (type == "harmonic") {
    out.type = SyntheticSignalConfig::Type::Harmonic;
    out.harmonic_amplitude = obj.number("amplitude", out.harmonic_amplitude);
    out.harmonic_frequency_hz = obj.number("frequency_hz", out.harmonic_frequency_hz);
    out.harmonic_phase = obj.number("phase", out.harmonic_phase);
  } else {
    fail(join(path, "type"), "expected 'jonswap' or 'harmonic'");
  }
  obj.finish();
  return out;
}

ExcitationConfig parse_excitation(const json& node, const std::string& path) {
  ObjectReader obj(node, path);
  ExcitationConfig out;
  const std::string kind = obj.required_string("kind");
  if (kind == "direct_force") {
    out.kind = ExcitationKind::DirectForce;
  } else if (kind == "base_motion") {
    out.kind = ExcitationKind::BaseMotion;
  } else {
    fail(join(path, "kind"), "expected 'direct_force' or 'base_motion'");
  }

  ObjectReader source(obj.at("source"), join(path, "source"));
  const std::string type = source.required_string("type");
  if (type == "synthetic") {
    out.synthetic = true;
    out.signal = parse_signal_source(source.at("signal"), join(join(path, "source"), "signal"));
  } else if (type == "csv") {
    out.synthetic = false;
    CsvSourceConfig& c = out.csv;
    c.path = source.required_string("path");
    c.time_column = source.string("time_column", c.time_column);
    c.input_column = source.required_string("input_column");
    c.observation_column = source.required_string("observation_column");
    c.input_velocity_column = source.string("input_velocity_column", "");
  } else {
    fail(join(join(path, "source"), "type"), "expected 'synthetic' or 'csv'");
  }
  source.finish();
  obj.finish();
  return out;
}

SwitchingConfig parse_switching(const json& node, const std::string& path) {
  ObjectReader obj(node, path);
  SwitchingConfig out;
  out.enabled = obj.boolean("enabled", out.enabled);
  out.persistence = obj.number("persistence", out.persistence);
  out.reset_prior_variance = obj.number("reset_prior_variance", out.reset_prior_variance);
  out.filter_components = static_cast<int>(obj.integer("filter_components", out.filter_components));
  out.smoother_components =
      static_cast<int>(obj.integer("smoother_components", out.smoother_components));
  out.compare_standard = obj.boolean("compare_standard", out.compare_standard);
  obj.finish();
  if (!(out.persistence > 0.0) || !(out.persistence < 1.0)) {
    fail(join(path, "persistence"), "must lie strictly between 0 and 1");
  }
  if (!(out.reset_prior_variance > 0.0)) {
    fail(join(path, "reset_prior_variance"), "must be positive");
  }
  if (out.filter_components < 1) fail(join(path, "filter_components"), "must be >= 1");
  if (out.smoother_components < 1) fail(join(path, "smoother_components"), "must be >= 1");
  return out;
}

SignalSpec parse_signal_spec(const json& node, const std::string& path) {
  ObjectReader obj(node, path);
  SignalSpec out;
  out.final_time = obj.number("final_time", out.final_time);
  out.sampling_frequency = obj.number("sampling_frequency", out.sampling_frequency);
  if (obj.has("snr_db")) {
    const json& v = obj.at("snr_db");
    if (v.is_string()) {
      if (v.get<std::string>() != "inf") {
        fail(join(path, "snr_db"), "expected a number or the string 'inf'");
      }
      out.snr_db = std::numeric_limits<double>::infinity();
    } else if (v.is_number()) {
      out.snr_db = v.get<double>();
    } else {
      fail(join(path, "snr_db"), "expected a number or the string 'inf'");
    }
  }
  obj.finish();
  try {
    out.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return out;
}

ExperimentConfig parse_document(const json& doc, const std::string& base_dir) {
  ObjectReader obj(doc, "");
  ExperimentConfig config;
  config.base_dir = base_dir;

  config.system = parse_system(obj.at("system"), "system");
  if (obj.has("guesses")) config.guesses = parse_system(obj.at("guesses"), "guesses");
  config.excitation = parse_excitation(obj.at("excitation"), "excitation");
  if (obj.has("friction")) config.friction = parse_friction(obj.at("friction"), "friction");
  if (obj.has("kernel")) config.prior = parse_kernel(obj.at("kernel"), "kernel");
  if (obj.has("switching")) config.switching = parse_switching(obj.at("switching"), "switching");
  config.signal = parse_signal_spec(obj.at("signal"), "signal");

  if (obj.has("observed")) {
    const json& v = obj.at("observed");
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "displacement") {
      config.observed = ObservedQuantity::Displacement;
    } else if (s == "acceleration") {
      config.observed = ObservedQuantity::Acceleration;
    } else {
      fail("observed", "expected 'displacement' or 'acceleration'");
    }
  }

  {
    ObjectReader seeds(obj.at("seeds"), "seeds");
    config.seeds.input = seeds.required_seed("input");
    config.seeds.noise = seeds.required_seed("noise");
    seeds.finish();
  }

  if (obj.has("optimizer")) {
    ObjectReader opt(obj.at("optimizer"), "optimizer");
    config.optimizer.budget = opt.integer("budget", config.optimizer.budget);
    config.optimizer.seed = opt.required_seed("seed");
    opt.finish();
    if (config.optimizer.budget < 50) fail("optimizer.budget", "must be >= 50");
  }

  if (obj.has("post")) {
    ObjectReader post(obj.at("post"), "post");
    config.reinfer_after_correction =
        post.boolean("reinfer_after_correction", config.reinfer_after_correction);
    post.finish();
  }

  config.output_dir = obj.string("output_dir", config.output_dir);
  obj.finish();

  // The synthetic phase seed flows from the seeds block, never from the
  // signal sub-config.
  config.excitation.signal.jonswap.seed = config.seeds.input;

  config.validate();
  return config;
}

void append_system(ordered_json& out, const char* key, const SystemParams& params) {
  out[key] = ordered_json{
      {"mass", params.mass}, {"damping", params.damping}, {"stiffness", params.stiffness}};
}

}  // namespace

std::string ExperimentConfig::resolved_csv_path() const {
  const std::filesystem::path p(excitation.csv.path);
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(base_dir) / p).string();
}

void ExperimentConfig::validate() const {
  if (excitation.synthetic) {
    if (excitation.signal.type == SyntheticSignalConfig::Type::Jonswap) {
      try {
        excitation.signal.jonswap.validate();
      } catch (const std::exception& e) {
        fail("excitation.source.signal", e.what());
      }
    } else if (!(excitation.signal.harmonic_frequency_hz > 0.0)) {
      fail("excitation.source.signal.frequency_hz", "must be positive");
    }
  } else {
    if (excitation.csv.path.empty()) fail("excitation.source.path", "must not be empty");
    if (!std::filesystem::exists(resolved_csv_path())) {
      fail("excitation.source.path", "file '" + resolved_csv_path() + "' does not exist");
    }
  }
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  if (observed == ObservedQuantity::Acceleration) {
    fail("observed", "acceleration observations are not wired into the pipeline yet");
  }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin,
                                   const std::string& base_dir,
                                   const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  for (const std::string& assignment : overrides) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + assignment + "': expected key.path=value");
    }
    const std::string key_path = assignment.substr(0, eq);
    const std::string value_text = assignment.substr(eq + 1);

    // Dotted path -> JSON pointer; the value parses as JSON when possible and
    // falls back to a plain string (so snr_db=inf works unquoted).
    std::string pointer = "/";
    for (char ch : key_path) pointer += ch == '.' ? '/' : ch;
    json value;
    try {
      value = json::parse(value_text);
    } catch (const json::parse_error&) {
      value = value_text;
    }
    try {
      doc[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
      throw ConfigError("override '" + assignment + "': " + e.what());
    }
  }

  return parse_document(doc, base_dir);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream file(path);
  if (!file) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_config_text(buffer.str(), path, dir.empty() ? "." : dir, overrides);
}

std::string canonical_config_text(const ExperimentConfig& config) {
  ordered_json out;
  append_system(out, "system", config.system);
  if (config.guesses) append_system(out, "guesses", *config.guesses);

  ordered_json excitation;
  excitation["kind"] =
      config.excitation.kind == ExcitationKind::DirectForce ? "direct_force" : "base_motion";
  ordered_json source;
  if (config.excitation.synthetic) {
    source["type"] = "synthetic";
    ordered_json signal;
    if (config.excitation.signal.type == SyntheticSignalConfig::Type::Jonswap) {
      const JonswapParams& p = config.excitation.signal.jonswap;
      signal = ordered_json{{"type", "jonswap"},
                            {"significant_wave_height", p.significant_wave_height},
                            {"peak_period", p.peak_period},
                            {"sigma_below", p.sigma_below},
                            {"sigma_above", p.sigma_above},
                            {"grid_start", p.grid_start},
                            {"grid_step", p.grid_step},
                            {"grid_stop", p.grid_stop},
                            {"amplitude_scale", p.amplitude_scale}};
    } else {
      signal = ordered_json{{"type", "harmonic"},
                            {"amplitude", config.excitation.signal.harmonic_amplitude},
                            {"frequency_hz", config.excitation.signal.harmonic_frequency_hz},
                            {"phase", config.excitation.signal.harmonic_phase}};
    }
    source["signal"] = signal;
  } else {
    const CsvSourceConfig& c = config.excitation.csv;
    source = ordered_json{{"type", "csv"},
                          {"path", c.path},
                          {"time_column", c.time_column},
                          {"input_column", c.input_column},
                          {"observation_column", c.observation_column}};
    if (!c.input_velocity_column.empty()) {
      source["input_velocity_column"] = c.input_velocity_column;
    }
  }
  excitation["source"] = source;
  out["excitation"] = excitation;

  out["friction"] = ordered_json{{"f_star", config.friction.f_star}, {"a", config.friction.a},
                                 {"b", config.friction.b},           {"c", config.friction.c},
                                 {"v_star", config.friction.v_star}, {"epsilon", config.friction.epsilon}};

  out["kernel"] = ordered_json{
      {"smoothness", "matern12"},
      {"prior",
       ordered_json{
           {"force_variance", ordered_json{{"mean", config.prior.force_variance_mean},
                                           {"var", config.prior.force_variance_var}}},
           {"lengthscale", ordered_json{{"mean", config.prior.lengthscale_mean},
                                        {"var", config.prior.lengthscale_var}}},
           {"noise_variance", ordered_json{{"mean", config.prior.noise_variance_mean},
                                           {"var", config.prior.noise_variance_var}}}}}};

  out["switching"] = ordered_json{{"enabled", config.switching.enabled},
                                  {"persistence", config.switching.persistence},
                                  {"reset_prior_variance", config.switching.reset_prior_variance},
                                  {"filter_components", config.switching.filter_components},
                                  {"smoother_components", config.switching.smoother_components},
                                  {"compare_standard", config.switching.compare_standard}};

  ordered_json signal_spec;
  signal_spec["final_time"] = config.signal.final_time;
  signal_spec["sampling_frequency"] = config.signal.sampling_frequency;
  if (std::isinf(config.signal.snr_db)) {
    signal_spec["snr_db"] = "inf";
  } else {
    signal_spec["snr_db"] = config.signal.snr_db;
  }
  out["signal"] = signal_spec;

  out["observed"] = "displacement";
  out["seeds"] = ordered_json{{"input", config.seeds.input}, {"noise", config.seeds.noise}};
  out["optimizer"] =
      ordered_json{{"budget", config.optimizer.budget}, {"seed", config.optimizer.seed}};
  out["post"] = ordered_json{{"reinfer_after_correction", config.reinfer_after_correction}};
  out["output_dir"] = config.output_dir;
  return out.dump(2) + "\n";
}

}  // namespace gplfm
