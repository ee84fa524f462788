#include "rdae/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rdae/bytes.hpp"
#include "rdae/error.hpp"

namespace rdae {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& key, const std::string& what) {
  throw Error(Errc::kConfig,
              "config line " + std::to_string(line) + ": key '" + key + "': " + what);
}

template <typename T>
T parse_number(const std::string& v, std::size_t line, const std::string& key) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(line, key, "bad number '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, std::size_t line, const std::string& key) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  fail(line, key, "expected true/false, got '" + v + "'");
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(Errc::kConfig, "batch_size must be at least 1");
  if (epochs_m1 < 1 || epochs_m2 < 1 || epochs_m3 < 1) {
    throw Error(Errc::kConfig, "epochs per phase must be at least 1");
  }
  try {
    adam.validate();
  } catch (const Error& e) {
    throw Error(Errc::kConfig, e.what());
  }
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig cfg;
  using Setter = std::function<void(const std::string&, std::size_t, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"dataset_root", [&](auto& v, auto, auto&) { cfg.dataset_root = v; }},
      {"model_out", [&](auto& v, auto, auto&) { cfg.model_out = v; }},
      {"epochs_m1", [&](auto& v, auto l, auto& k) { cfg.epochs_m1 = parse_number<std::size_t>(v, l, k); }},
      {"epochs_m2", [&](auto& v, auto l, auto& k) { cfg.epochs_m2 = parse_number<std::size_t>(v, l, k); }},
      {"epochs_m3", [&](auto& v, auto l, auto& k) { cfg.epochs_m3 = parse_number<std::size_t>(v, l, k); }},
      {"batch_size", [&](auto& v, auto l, auto& k) { cfg.batch_size = parse_number<std::size_t>(v, l, k); }},
      {"learning_rate", [&](auto& v, auto l, auto& k) { cfg.adam.learning_rate = parse_number<double>(v, l, k); }},
      {"beta1", [&](auto& v, auto l, auto& k) { cfg.adam.beta1 = parse_number<double>(v, l, k); }},
      {"beta2", [&](auto& v, auto l, auto& k) { cfg.adam.beta2 = parse_number<double>(v, l, k); }},
      {"epsilon", [&](auto& v, auto l, auto& k) { cfg.adam.epsilon = parse_number<double>(v, l, k); }},
      {"seed", [&](auto& v, auto l, auto& k) { cfg.seed = parse_number<std::uint64_t>(v, l, k); }},
      {"whitening", [&](auto& v, auto l, auto& k) { cfg.whitening = parse_bool(v, l, k); }},
      {"m3_warm_start", [&](auto& v, auto l, auto& k) { cfg.m3_warm_start = parse_bool(v, l, k); }},
  };

  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::kConfig, "config line " + std::to_string(line_no) +
                                     ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) fail(line_no, key, "unknown key");
    if (!seen.insert(key).second) fail(line_no, key, "duplicate key");
    if (value.empty()) fail(line_no, key, "empty value");
    it->second(value, line_no, key);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

}  // namespace rdae
