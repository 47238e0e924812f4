#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bizlens {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}
  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Line-oriented key/value file used for grammar tables, response templates,
/// guardrail lexicons and eval templates.
///
///   # comment
///   [section]
///   key = value          keyed entry (keys may repeat)
///   bare line            unkeyed entry (used for lexicon phrases)
///
/// Leading/trailing whitespace is trimmed. A line is keyed when it contains
/// " = "; everything after the first " = " is the value, verbatim. A value
/// may continue onto following lines that start with "  | " (the marker is
/// replaced by a single space).
struct ConfigEntry {
  std::string key;  // empty for bare entries
  std::string value;
  std::size_t line = 0;
};

struct ConfigSection {
  std::string name;
  std::vector<ConfigEntry> entries;

  /// First value for `key`, if any.
  std::optional<std::string> get(std::string_view key) const;
  /// Required value; throws ConfigError naming the section.
  const std::string& require(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;
  std::vector<std::string> bare() const;

  std::string source;
  std::size_t line = 0;
};

class ConfigFile {
 public:
  static ConfigFile parse(std::string_view content, std::string source_name);
  static ConfigFile load(const std::filesystem::path& path);

  const std::vector<ConfigSection>& sections() const { return sections_; }
  const ConfigSection* find(std::string_view name) const;
  const ConfigSection& require(std::string_view name) const;
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<ConfigSection> sections_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace bizlens
