#include "fedids/config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedids/error.h"
#include "fedids/rng.h"

namespace fedids {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string_view Unquote(std::string_view s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

template <typename T>
bool ParseUnsigned(std::string_view text, T& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool ParseSigned(std::string_view text, std::int64_t& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool ParseDouble(std::string_view text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() &&
         std::isfinite(out);
}

bool ParseBool(std::string_view text, bool& out) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") {
    out = true;
    return true;
  }
  if (text == "false" || text == "0" || text == "no" || text == "off") {
    out = false;
    return true;
  }
  return false;
}

// Shortest text that parses back to the same double.
std::string FormatDouble(double v) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) break;
  }
  return buf;
}

const char* ModeName(MatchMode mode) {
  return mode == MatchMode::kRawPort ? "raw" : "scaled";
}

std::string Bool(bool b) { return b ? "true" : "false"; }

std::string Throwing(const std::vector<std::string>& problems,
                     std::string_view origin) {
  std::string msg = "invalid configuration";
  if (!origin.empty()) msg += " (" + std::string(origin) + ")";
  msg += ":";
  for (const auto& p : problems) msg += "\n  " + p;
  return msg;
}

}  // namespace

const std::vector<std::string_view>& ConfigKeys() {
  static const std::vector<std::string_view> keys = {
      "input",
      "rows_per_group",
      "test_fraction",
      "seed",
      "n_clients",
      "batch_size",
      "epochs",
      "iterations",
      "learning_rate",
      "repetitions",
      "server_pretrain_fraction",
      "overlap",
      "fit_scaler_on_train",
      "attack.enabled",
      "attack.client",
      "attack.port",
      "attack.mode",
      "attack.value",
      "attack.decimals",
      "output_dir",
      "checkpoint",
  };
  return keys;
}

std::string SetConfigValue(ExperimentConfig& c, std::string_view key,
                           std::string_view raw) {
  const std::string_view value = Unquote(Trim(raw));
  const std::string k(key);
  bool ok = true;
  if (key == "input") {
    c.input = std::string(value);
  } else if (key == "output_dir") {
    c.output_dir = std::string(value);
  } else if (key == "rows_per_group") {
    ok = ParseUnsigned(value, c.rows_per_group);
  } else if (key == "test_fraction") {
    ok = ParseDouble(value, c.test_fraction);
  } else if (key == "seed") {
    ok = ParseUnsigned(value, c.seed);
  } else if (key == "n_clients") {
    ok = ParseUnsigned(value, c.n_clients);
  } else if (key == "batch_size") {
    ok = ParseUnsigned(value, c.batch_size);
  } else if (key == "epochs") {
    ok = ParseUnsigned(value, c.epochs);
  } else if (key == "iterations") {
    ok = ParseUnsigned(value, c.iterations);
  } else if (key == "learning_rate") {
    ok = ParseDouble(value, c.learning_rate);
  } else if (key == "repetitions") {
    ok = ParseUnsigned(value, c.repetitions);
  } else if (key == "server_pretrain_fraction") {
    if (value == "auto" || value.empty()) {
      c.server_pretrain_fraction.reset();
    } else {
      double f = 0.0;
      ok = ParseDouble(value, f);
      if (ok) c.server_pretrain_fraction = f;
    }
  } else if (key == "overlap") {
    ok = ParseBool(value, c.overlap);
  } else if (key == "fit_scaler_on_train") {
    ok = ParseBool(value, c.fit_scaler_on_train);
  } else if (key == "attack.enabled") {
    ok = ParseBool(value, c.attack_enabled);
  } else if (key == "attack.client") {
    ok = ParseUnsigned(value, c.attack_client);
  } else if (key == "attack.port") {
    ok = ParseSigned(value, c.attack_port);
  } else if (key == "attack.mode") {
    if (value == "raw") {
      c.attack_mode = MatchMode::kRawPort;
    } else if (value == "scaled") {
      c.attack_mode = MatchMode::kScaledValue;
    } else {
      return k + ": expected 'raw' or 'scaled', got '" + std::string(value) +
             "'";
    }
  } else if (key == "attack.value") {
    if (value == "auto" || value.empty()) {
      c.attack_value.reset();
    } else {
      double v = 0.0;
      ok = ParseDouble(value, v);
      if (ok) c.attack_value = v;
    }
  } else if (key == "attack.decimals") {
    std::int64_t d = 0;
    ok = ParseSigned(value, d) && d >= 0 && d <= 15;
    if (ok) c.attack_decimals = static_cast<int>(d);
  } else if (key == "checkpoint") {
    ok = ParseBool(value, c.checkpoint);
  } else {
    return "unknown key '" + k + "'";
  }
  if (!ok) return k + ": cannot parse '" + std::string(value) + "'";
  return {};
}

void ApplyConfigText(ExperimentConfig& config, std::string_view text,
                     std::string_view origin) {
  std::vector<std::string> problems;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = Trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back("line " + std::to_string(line_no) +
                         ": expected 'key = value'");
      continue;
    }
    const std::string err =
        SetConfigValue(config, Trim(view.substr(0, eq)), view.substr(eq + 1));
    if (!err.empty()) {
      problems.push_back("line " + std::to_string(line_no) + ": " + err);
    }
  }
  if (!problems.empty()) throw UsageError(Throwing(problems, origin));
}

void ApplyConfigFile(ExperimentConfig& config,
                     const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ApplyConfigText(config, buffer.str(), path.string());
}

void ApplyOverrides(
    ExperimentConfig& config,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<std::string> problems;
  for (const auto& [key, value] : overrides) {
    const std::string err = SetConfigValue(config, key, value);
    if (!err.empty()) problems.push_back("--" + err);
  }
  if (!problems.empty()) throw UsageError(Throwing(problems, "command line"));
}

void ValidateConfig(const ExperimentConfig& c) {
  std::vector<std::string> problems;
  if (c.input.empty()) problems.push_back("input: no dataset given");
  if (c.rows_per_group < 1) problems.push_back("rows_per_group must be >= 1");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    problems.push_back("test_fraction must lie in (0, 1)");
  }
  if (c.n_clients < 1) problems.push_back("n_clients must be >= 1");
  if (c.batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (c.epochs < 1) problems.push_back("epochs must be >= 1");
  if (c.iterations < 1) problems.push_back("iterations must be >= 1");
  if (!(c.learning_rate > 0.0)) problems.push_back("learning_rate must be > 0");
  if (c.repetitions < 1) problems.push_back("repetitions must be >= 1");
  if (c.server_pretrain_fraction && !(*c.server_pretrain_fraction >= 0.0 &&
                                      *c.server_pretrain_fraction < 1.0)) {
    problems.push_back("server_pretrain_fraction must lie in [0, 1)");
  }
  if (c.attack_enabled && c.attack_client >= c.n_clients) {
    problems.push_back("attack.client must be < n_clients");
  }
  if (c.attack_port < 0 || c.attack_port > 65535) {
    problems.push_back("attack.port must lie in [0, 65535]");
  }
  if (!problems.empty()) throw UsageError(Throwing(problems, ""));
}

std::string ConfigToText(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "input = \"" << c.input << "\"\n"
      << "rows_per_group = " << c.rows_per_group << '\n'
      << "test_fraction = " << FormatDouble(c.test_fraction) << '\n'
      << "seed = " << c.seed << '\n'
      << "n_clients = " << c.n_clients << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "epochs = " << c.epochs << '\n'
      << "iterations = " << c.iterations << '\n'
      << "learning_rate = " << FormatDouble(c.learning_rate) << '\n'
      << "repetitions = " << c.repetitions << '\n'
      << "server_pretrain_fraction = "
      << (c.server_pretrain_fraction
              ? FormatDouble(*c.server_pretrain_fraction)
              : std::string("auto"))
      << '\n'
      << "overlap = " << Bool(c.overlap) << '\n'
      << "fit_scaler_on_train = " << Bool(c.fit_scaler_on_train) << '\n'
      << "attack.enabled = " << Bool(c.attack_enabled) << '\n'
      << "attack.client = " << c.attack_client << '\n'
      << "attack.port = " << c.attack_port << '\n'
      << "attack.mode = " << ModeName(c.attack_mode) << '\n'
      << "attack.value = "
      << (c.attack_value ? FormatDouble(*c.attack_value) : std::string("auto"))
      << '\n'
      << "attack.decimals = " << c.attack_decimals << '\n';
  return out.str();
}

nlohmann::json ConfigToJson(const ExperimentConfig& c) {
  nlohmann::json j = {
      {"input", c.input},
      {"rows_per_group", c.rows_per_group},
      {"test_fraction", c.test_fraction},
      {"seed", c.seed},
      {"n_clients", c.n_clients},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"iterations", c.iterations},
      {"learning_rate", c.learning_rate},
      {"repetitions", c.repetitions},
      {"server_pretrain_fraction", nullptr},
      {"overlap", c.overlap},
      {"fit_scaler_on_train", c.fit_scaler_on_train},
      {"attack",
       {{"enabled", c.attack_enabled},
        {"client", c.attack_client},
        {"port", c.attack_port},
        {"mode", ModeName(c.attack_mode)},
        {"value", nullptr},
        {"decimals", c.attack_decimals}}},
  };
  if (c.server_pretrain_fraction) {
    j["server_pretrain_fraction"] = *c.server_pretrain_fraction;
  }
  if (c.attack_value) j["attack"]["value"] = *c.attack_value;
  return j;
}

std::string ConfigHash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : ConfigToText(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t RepetitionSeed(std::uint64_t base_seed, std::size_t index) {
  return MixSeed(
      MixSeed(base_seed, static_cast<std::uint64_t>(StreamId::kRepetition)),
      index);
}

fed::FederationConfig ToFederationConfig(const ExperimentConfig& c,
                                         std::uint64_t seed) {
  fed::FederationConfig f;
  f.n_clients = c.n_clients;
  f.iterations = c.iterations;
  f.local.epochs = c.epochs;
  f.local.batch_size = c.batch_size;
  f.local.adam.learning_rate = c.learning_rate;
  f.server_pretrain_fraction = c.server_pretrain_fraction;
  f.overlap_server_reserve = c.overlap;
  f.seed = seed;
  f.config_hash = ConfigHash(c);
  return f;
}

std::optional<AttackSpec> ToAttackSpec(const ExperimentConfig& c) {
  if (!c.attack_enabled) return std::nullopt;
  AttackSpec spec;
  spec.target_client = c.attack_client;
  spec.match_port = c.attack_port;
  spec.mode = c.attack_mode;
  spec.scaled_value = c.attack_value;
  spec.decimals = c.attack_decimals;
  return spec;
}

}  // namespace fedids
