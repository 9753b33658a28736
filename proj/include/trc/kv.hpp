#pragma once

#include <map>
#include <string>
#include <vector>

namespace trc {

//! Flat key=value file: one pair per line, '#' starts a comment, blank lines
//! ignored. Values keep internal spaces; keys and values are trimmed.
std::map<std::string, std::string> read_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_lines(const std::string& text);

//! "a,b,c" -> trimmed tokens; empty string -> empty list
std::vector<std::string> split_list(const std::string& value);

//! "4x4x3" -> {4,4,3}; throws on junk
std::vector<long long> parse_dims(const std::string& value);

}  // namespace trc
