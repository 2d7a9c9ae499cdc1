#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace racg {

/// Lowercases and splits on every character outside [A-Za-z0-9_]; empty
/// pieces are dropped. Shared by BM25, the hashing embedder and CrystalBLEU.
std::vector<std::string> tokenize(std::string_view text);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view text);

/// Lines that are non-empty once surrounding whitespace is removed.
std::size_t count_nonblank_lines(std::string_view code);

/// Name of the function defined by `code`: the identifier directly before the
/// first '(' on the first non-blank line that contains one. Empty when no
/// such identifier exists.
std::string function_name(std::string_view code);

bool icontains(std::string_view haystack, std::string_view needle);

}  // namespace racg
