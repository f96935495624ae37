/*
 Copyright 2026 The lqmhpe Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "lqmhpe/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "lqmhpe/report.hpp"

namespace lqmhpe {
namespace {

struct Value {
  enum class Kind { kBool, kInt, kFloat, kString, kArray };
  Kind kind = Kind::kInt;
  bool b = false;
  long long i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> items;
};

struct Entry {
  Value value;
  int line = 0;
};

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_bare_key(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

class Parser {
 public:
  Parser(std::string_view text, const std::string& source) : text_(text), source_(source) {}

  std::map<std::string, Entry> parse() {
    std::map<std::string, Entry> out;
    std::string section;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      ++line_;
      const std::size_t end = std::min(text_.find('\n', pos), text_.size());
      std::string_view raw = text_.substr(pos, end - pos);
      pos = end + 1;
      cur_ = strip_comment(raw);
      cur_ = trim(cur_);
      if (cur_.empty()) continue;
      if (cur_.front() == '[') {
        if (cur_.back() != ']') fail("", "unterminated section header");
        const std::string_view name = trim(cur_.substr(1, cur_.size() - 2));
        if (!is_bare_key(name)) fail("", "invalid section name '" + std::string(name) + "'");
        section = std::string(name);
        continue;
      }
      const std::size_t eq = cur_.find('=');
      if (eq == std::string_view::npos) fail("", "expected key = value");
      const std::string_view key = trim(cur_.substr(0, eq));
      if (!is_bare_key(key)) fail("", "invalid key '" + std::string(key) + "'");
      const std::string dotted = section.empty() ? std::string(key) : section + "." + std::string(key);
      rest_ = trim(cur_.substr(eq + 1));
      Value v = parse_value(dotted);
      rest_ = trim(rest_);
      if (!rest_.empty()) fail(dotted, "unexpected text after value");
      if (out.count(dotted) != 0) fail(dotted, "duplicate key");
      out[dotted] = Entry{std::move(v), line_};
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream os;
    os << source_ << ":" << line_ << ": ";
    if (!key.empty()) os << key << ": ";
    os << what;
    throw ConfigError(key, os.str());
  }

  // Removes a '#' comment that is not inside a string.
  static std::string_view strip_comment(std::string_view s) {
    bool in_string = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] == '\\' && in_string) {
        ++k;
      } else if (s[k] == '"') {
        in_string = !in_string;
      } else if (s[k] == '#' && !in_string) {
        return s.substr(0, k);
      }
    }
    return s;
  }

  Value parse_value(const std::string& key) {
    rest_ = trim(rest_);
    if (rest_.empty()) fail(key, "missing value");
    Value v;
    if (rest_.front() == '"') {
      v.kind = Value::Kind::kString;
      std::size_t k = 1;
      for (; k < rest_.size() && rest_[k] != '"'; ++k) {
        if (rest_[k] == '\\') {
          if (++k >= rest_.size()) break;
          switch (rest_[k]) {
            case '"': v.s += '"'; break;
            case '\\': v.s += '\\'; break;
            case 'n': v.s += '\n'; break;
            case 't': v.s += '\t'; break;
            default: fail(key, "unsupported escape sequence");
          }
        } else {
          v.s += rest_[k];
        }
      }
      if (k >= rest_.size()) fail(key, "unterminated string");
      rest_.remove_prefix(k + 1);
      return v;
    }
    if (rest_.front() == '[') {
      v.kind = Value::Kind::kArray;
      rest_.remove_prefix(1);
      rest_ = trim(rest_);
      while (!rest_.empty() && rest_.front() != ']') {
        Value item = parse_value(key);
        if (item.kind == Value::Kind::kArray) fail(key, "nested arrays are not supported");
        v.items.push_back(std::move(item));
        rest_ = trim(rest_);
        if (!rest_.empty() && rest_.front() == ',') {
          rest_.remove_prefix(1);
          rest_ = trim(rest_);
        } else {
          break;
        }
      }
      if (rest_.empty() || rest_.front() != ']') fail(key, "unterminated array");
      rest_.remove_prefix(1);
      return v;
    }
    std::size_t len = 0;
    while (len < rest_.size() && rest_[len] != ',' && rest_[len] != ']' && rest_[len] != ' ' &&
           rest_[len] != '\t') {
      ++len;
    }
    const std::string_view tok = rest_.substr(0, len);
    rest_.remove_prefix(len);
    if (tok == "true" || tok == "false") {
      v.kind = Value::Kind::kBool;
      v.b = tok == "true";
      return v;
    }
    std::string digits;
    for (char c : tok) {
      if (c != '_') digits += c;
    }
    if (digits == "inf" || digits == "+inf" || digits == "-inf" || digits == "nan" ||
        digits == "+nan" || digits == "-nan") {
      fail(key, "non-finite numbers are not allowed");
    }
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (!digits.empty() && *first == '+') ++first;
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      v.kind = Value::Kind::kFloat;
      const auto [ptr, ec] = std::from_chars(first, last, v.d);
      if (ec != std::errc() || ptr != last) fail(key, "invalid value '" + std::string(tok) + "'");
    } else {
      v.kind = Value::Kind::kInt;
      const auto [ptr, ec] = std::from_chars(first, last, v.i);
      if (ec != std::errc() || ptr != last || first == last) {
        fail(key, "invalid value '" + std::string(tok) + "'");
      }
    }
    return v;
  }

  std::string_view text_;
  std::string source_;
  int line_ = 0;
  std::string_view cur_;
  std::string_view rest_;
};

class Binder {
 public:
  Binder(const std::string& source, const std::map<std::string, Entry>& entries)
      : source_(source), entries_(entries) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream os;
    os << source_;
    const auto it = entries_.find(key);
    if (it != entries_.end()) os << ":" << it->second.line;
    os << ": " << key << ": " << what;
    throw ConfigError(key, os.str());
  }

  double as_double(const std::string& key, const Value& v) const {
    if (v.kind == Value::Kind::kFloat) return v.d;
    if (v.kind == Value::Kind::kInt) return static_cast<double>(v.i);
    fail(key, "expected a number");
  }

  int as_int(const std::string& key, const Value& v) const {
    if (v.kind != Value::Kind::kInt) fail(key, "expected an integer");
    if (v.i < std::numeric_limits<int>::min() || v.i > std::numeric_limits<int>::max()) {
      fail(key, "integer out of range");
    }
    return static_cast<int>(v.i);
  }

  std::uint64_t as_seed(const std::string& key, const Value& v) const {
    if (v.kind != Value::Kind::kInt || v.i < 0) fail(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v.i);
  }

  bool as_bool(const std::string& key, const Value& v) const {
    if (v.kind != Value::Kind::kBool) fail(key, "expected true or false");
    return v.b;
  }

  std::string as_string(const std::string& key, const Value& v) const {
    if (v.kind != Value::Kind::kString) fail(key, "expected a quoted string");
    return v.s;
  }

 private:
  std::string source_;
  const std::map<std::string, Entry>& entries_;
};

using Setter = std::function<void(const Binder&, const std::string&, const Value&, BatteryConfig&)>;

Setter set_double(double TrialConfig::*field) {
  return [field](const Binder& b, const std::string& k, const Value& v, BatteryConfig& c) {
    c.base.*field = b.as_double(k, v);
  };
}

Setter set_int(int TrialConfig::*field) {
  return [field](const Binder& b, const std::string& k, const Value& v, BatteryConfig& c) {
    c.base.*field = b.as_int(k, v);
  };
}

Setter set_bool(bool TrialConfig::*field) {
  return [field](const Binder& b, const std::string& k, const Value& v, BatteryConfig& c) {
    c.base.*field = b.as_bool(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["trial.duration"] = set_double(&TrialConfig::duration);
    t["trial.dt"] = set_double(&TrialConfig::dt);
    t["randomization.param_lower_factor"] = set_double(&TrialConfig::param_lower_factor);
    t["randomization.param_upper_factor"] = set_double(&TrialConfig::param_upper_factor);
    t["randomization.noise_bound"] = set_double(&TrialConfig::noise_bound);
    t["randomization.position_bound"] = set_double(&TrialConfig::position_bound);
    t["randomization.velocity_bound"] = set_double(&TrialConfig::velocity_bound);
    t["randomization.rate_bound"] = set_double(&TrialConfig::rate_bound);
    t["randomization.random_attitude"] = set_bool(&TrialConfig::random_attitude);
    t["randomization.disturbance_channels"] = [](const Binder& b, const std::string& k,
                                                 const Value& v, BatteryConfig& c) {
      const std::string s = b.as_string(k, v);
      if (s == "all") {
        c.base.disturbance_channels = DisturbanceChannels::kAll;
      } else if (s == "translational_and_rates") {
        c.base.disturbance_channels = DisturbanceChannels::kTranslationalAndRates;
      } else {
        b.fail(k, "expected \"all\" or \"translational_and_rates\"");
      }
    };
    t["nmpc.horizon_n"] = set_int(&TrialConfig::horizon_n);
    t["nmpc.position_weight"] = set_double(&TrialConfig::position_weight);
    t["nmpc.attitude_weight"] = set_double(&TrialConfig::attitude_weight);
    t["nmpc.velocity_weight"] = set_double(&TrialConfig::velocity_weight);
    t["nmpc.rate_weight"] = set_double(&TrialConfig::rate_weight);
    t["nmpc.terminal_factor"] = set_double(&TrialConfig::terminal_factor);
    t["nmpc.input_weight"] = set_double(&TrialConfig::input_weight);
    t["nmpc.max_iter"] = set_int(&TrialConfig::nmpc_max_iter);
    t["nmpc.tolerance"] = set_double(&TrialConfig::nmpc_tolerance);
    t["mhpe.horizon_m"] = set_int(&TrialConfig::horizon_m);
    t["mhpe.disturbance_weight"] = set_double(&TrialConfig::disturbance_weight);
    t["mhpe.include_quaternion_rows"] = set_bool(&TrialConfig::include_quaternion_rows);
    t["output.record_timing"] = set_bool(&TrialConfig::record_timing);
    t["output.record_trace"] = set_bool(&TrialConfig::record_trace);
    t["output.divergence_cost"] = set_double(&TrialConfig::divergence_cost);
    t["output.divergence_state_bound"] = set_double(&TrialConfig::divergence_state_bound);
    t["battery.schemes"] = [](const Binder& b, const std::string& k, const Value& v,
                              BatteryConfig& c) {
      if (v.kind != Value::Kind::kArray || v.items.empty()) {
        b.fail(k, "expected a non-empty array of scheme names");
      }
      c.schemes.clear();
      for (const Value& item : v.items) {
        const std::string name = b.as_string(k, item);
        try {
          c.schemes.push_back(parse_scheme(name));
        } catch (const std::invalid_argument&) {
          b.fail(k, "unknown scheme '" + name + "' (expected none, lq_mhpe or nmhpe)");
        }
      }
    };
    t["battery.trials"] = [](const Binder& b, const std::string& k, const Value& v,
                             BatteryConfig& c) {
      c.trials = b.as_int(k, v);
      if (c.trials < 1) b.fail(k, "must be >= 1");
    };
    t["battery.seed"] = [](const Binder& b, const std::string& k, const Value& v,
                           BatteryConfig& c) { c.first_seed = b.as_seed(k, v); };
    t["battery.jobs"] = [](const Binder& b, const std::string& k, const Value& v,
                           BatteryConfig& c) {
      c.jobs = b.as_int(k, v);
      if (c.jobs < 1) b.fail(k, "must be >= 1");
    };
    return t;
  }();
  return table;
}

// Maps TrialConfig::validate() field names to their config keys.
std::string key_for_field(const std::string& field) {
  for (const auto& [key, setter] : setters()) {
    const std::size_t dot = key.find('.');
    const std::string leaf = key.substr(dot + 1);
    if (leaf == field || "nmpc_" + leaf == field) return key;
  }
  if (field == "weights") return "nmpc";
  return field;
}

}  // namespace

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(message), key_(std::move(key)) {}

BatteryConfig parse_config(std::string_view text, const std::string& source) {
  const std::map<std::string, Entry> entries = Parser(text, source).parse();
  const Binder binder(source, entries);

  BatteryConfig cfg;
  const auto model = entries.find("trial.model");
  if (model != entries.end()) {
    const std::string name = binder.as_string(model->first, model->second.value);
    try {
      cfg.base = TrialConfig::for_model(name);
    } catch (const std::invalid_argument&) {
      binder.fail(model->first, "unknown model '" + name + "' (expected crazyflie or fusion1)");
    }
  }
  for (const auto& [key, entry] : entries) {
    if (key == "trial.model") continue;
    const auto it = setters().find(key);
    if (it == setters().end()) binder.fail(key, "unknown key");
    it->second(binder, key, entry.value, cfg);
  }
  try {
    cfg.base.validate();
  } catch (const std::invalid_argument& e) {
    // Messages look like "trial config: <field> <reason>".
    const std::string msg = e.what();
    const std::string prefix = "trial config: ";
    std::string field = msg.rfind(prefix, 0) == 0 ? msg.substr(prefix.size()) : msg;
    field = field.substr(0, field.find(' '));
    throw ConfigError(key_for_field(field), source + ": " + msg);
  }
  return cfg;
}

BatteryConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_config_text(const BatteryConfig& cfg) {
  const TrialConfig& c = cfg.base;
  const auto num = [](double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
  };
  const auto flag = [](bool b) { return b ? "true" : "false"; };
  std::ostringstream os;
  os << "[trial]\n"
     << "model = \"" << c.model << "\"\n"
     << "duration = " << num(c.duration) << "\n"
     << "dt = " << num(c.dt) << "\n\n"
     << "[randomization]\n"
     << "param_lower_factor = " << num(c.param_lower_factor) << "\n"
     << "param_upper_factor = " << num(c.param_upper_factor) << "\n"
     << "noise_bound = " << num(c.noise_bound) << "\n"
     << "position_bound = " << num(c.position_bound) << "\n"
     << "velocity_bound = " << num(c.velocity_bound) << "\n"
     << "rate_bound = " << num(c.rate_bound) << "\n"
     << "random_attitude = " << flag(c.random_attitude) << "\n"
     << "disturbance_channels = \""
     << (c.disturbance_channels == DisturbanceChannels::kAll ? "all" : "translational_and_rates")
     << "\"\n\n"
     << "[nmpc]\n"
     << "horizon_n = " << c.horizon_n << "\n"
     << "position_weight = " << num(c.position_weight) << "\n"
     << "attitude_weight = " << num(c.attitude_weight) << "\n"
     << "velocity_weight = " << num(c.velocity_weight) << "\n"
     << "rate_weight = " << num(c.rate_weight) << "\n"
     << "terminal_factor = " << num(c.terminal_factor) << "\n"
     << "input_weight = " << num(c.input_weight) << "\n"
     << "max_iter = " << c.nmpc_max_iter << "\n"
     << "tolerance = " << num(c.nmpc_tolerance) << "\n\n"
     << "[mhpe]\n"
     << "horizon_m = " << c.horizon_m << "\n"
     << "disturbance_weight = " << num(c.disturbance_weight) << "\n"
     << "include_quaternion_rows = " << flag(c.include_quaternion_rows) << "\n\n"
     << "[battery]\n"
     << "schemes = [";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
    os << (i ? ", " : "") << '"' << to_string(cfg.schemes[i]) << '"';
  }
  os << "]\n"
     << "trials = " << cfg.trials << "\n"
     << "seed = " << cfg.first_seed << "\n"
     << "jobs = " << cfg.jobs << "\n\n"
     << "[output]\n"
     << "record_timing = " << flag(c.record_timing) << "\n"
     << "record_trace = " << flag(c.record_trace) << "\n"
     << "divergence_cost = " << num(c.divergence_cost) << "\n"
     << "divergence_state_bound = " << num(c.divergence_state_bound) << "\n";
  return os.str();
}

}  // namespace lqmhpe
