#include "bizlens/config_file.hpp"

#include <fstream>
#include <sstream>

#include "bizlens/text.hpp"

namespace bizlens {

std::optional<std::string> ConfigSection::get(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return e.value;
  }
  return std::nullopt;
}

const std::string& ConfigSection::require(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return e.value;
  }
  throw ConfigError(source, line, "section [" + name + "] is missing key '" + std::string(key) + "'");
}

std::vector<std::string> ConfigSection::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.key == key) out.push_back(e.value);
  }
  return out;
}

std::vector<std::string> ConfigSection::bare() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.key.empty()) out.push_back(e.value);
  }
  return out;
}

ConfigFile ConfigFile::parse(std::string_view content, std::string source_name) {
  ConfigFile file;
  file.source_ = std::move(source_name);
  // Entries before the first header land in an unnamed section.
  file.sections_.push_back(ConfigSection{"", {}, file.source_, 0});

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    std::string_view raw = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;

    if (raw.starts_with("  | ")) {
      auto& entries = file.sections_.back().entries;
      if (entries.empty()) throw ConfigError(file.source_, line_no, "continuation line without an entry");
      entries.back().value += ' ';
      entries.back().value += text::trim(raw.substr(4));
      continue;
    }
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(file.source_, line_no, "malformed section header");
      file.sections_.push_back(
          ConfigSection{std::string(text::trim(line.substr(1, line.size() - 2))), {}, file.source_, line_no});
      continue;
    }
    ConfigEntry entry;
    entry.line = line_no;
    auto eq = line.find(" = ");
    if (eq == std::string_view::npos) {
      entry.value = std::string(line);
    } else {
      entry.key = std::string(text::trim(line.substr(0, eq)));
      entry.value = std::string(text::trim(line.substr(eq + 3)));
      if (entry.key.empty()) throw ConfigError(file.source_, line_no, "empty key");
    }
    file.sections_.back().entries.push_back(std::move(entry));
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

const ConfigSection* ConfigFile::find(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const ConfigSection& ConfigFile::require(std::string_view name) const {
  if (const auto* s = find(name)) return *s;
  throw ConfigError(source_, 0, "missing section [" + std::string(name) + "]");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace bizlens
