#include "racg/text.hpp"

#include <algorithm>
#include <cctype>

namespace racg {
namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string_view trim(std::string_view s)
{
    auto first = s.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::size_t count_nonblank_lines(std::string_view code)
{
    auto lines = split_lines(code);
    return static_cast<std::size_t>(
        std::count_if(lines.begin(), lines.end(), [](auto l) { return !trim(l).empty(); }));
}

std::string function_name(std::string_view code)
{
    for (auto line : split_lines(code)) {
        if (trim(line).empty()) continue;
        auto paren = line.find('(');
        if (paren == std::string_view::npos) continue;
        auto end = paren;
        while (end > 0 && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
        auto begin = end;
        while (begin > 0 && is_word_char(static_cast<unsigned char>(line[begin - 1]))) --begin;
        if (begin == end || std::isdigit(static_cast<unsigned char>(line[begin]))) return {};
        return std::string(line.substr(begin, end - begin));
    }
    return {};
}

bool icontains(std::string_view haystack, std::string_view needle)
{
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](char a, char b) {
                              return std::tolower(static_cast<unsigned char>(a)) ==
                                     std::tolower(static_cast<unsigned char>(b));
                          });
    return it != haystack.end();
}

}  // namespace racg
