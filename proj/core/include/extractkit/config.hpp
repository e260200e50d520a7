#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "extractkit/evasion.hpp"
#include "extractkit/extraction.hpp"

namespace extractkit {

std::string_view version() noexcept;

enum class KeyType { integer, real, boolean, text, int_list, real_list };

struct KeySpec {
  std::string_view name;
  KeyType type;
  std::string_view default_value;
  std::string_view help;
};

// Flat `key = value` document with `#` comments. Every key is known up front;
// unknown keys and ill-typed values raise ConfigError.
class ExperimentConfig {
 public:
  static const std::vector<KeySpec>& keys();
  static const KeySpec& spec(std::string_view key);

  ExperimentConfig();  // all defaults

  static ExperimentConfig parse(std::string_view text, std::string_view origin = "config");
  static ExperimentConfig load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);
  // Applies every key of `text` on top of this config.
  void merge(std::string_view text, std::string_view origin = "config");

  const std::string& get(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  double get_real(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::int64_t> get_int_list(std::string_view key) const;
  std::vector<double> get_real_list(std::string_view key) const;

  // Seeds to run: `seeds` when non-empty, else `seed`.
  std::vector<std::uint64_t> seed_list() const;

  ExtractionConfig extraction(std::uint64_t seed) const;
  EvasionConfig evasion() const;

  // Resolved document, one line per key in registry order.
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace extractkit
