#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bizlens::text {

/// ASCII-only lowercase copy; bytes >= 0x80 are passed through untouched.
std::string lower(std::string_view s);

std::string_view trim(std::string_view s);

bool is_alnum(char c);

/// Index tokenizer shared by retrieval and trend matching: lowercase ASCII,
/// split on anything that is not [a-z0-9], drop tokens shorter than 2 bytes.
/// No stemming and no stopword list.
std::vector<std::string> tokenize(std::string_view s);

/// Same splitting rule as tokenize() but keeps single-character tokens.
std::vector<std::string> words(std::string_view s);

/// Splits on `sep`, keeping empty fields.
std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// "three" -> 3, "12" -> 12. Words cover zero..twenty; digit strings up to
/// three characters.
std::optional<int> count_word(std::string_view w);

/// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Formats with thousands separators and a fixed number of decimals,
/// e.g. format_grouped(648125.04, 1) == "648,125.0".
std::string format_grouped(double value, int decimals);

/// Shortest decimal string that round-trips to the same double.
std::string shortest_double(double value);

}  // namespace bizlens::text
