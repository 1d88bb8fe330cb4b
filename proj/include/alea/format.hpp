#pragma once

#include <cstdint>
#include <string>
#include <string_view>

// Locale-independent number formatting and parsing shared by all file formats.
namespace alea::fmt {

// Shortest representation that parses back to the same double.
std::string shortest(double value);

// Fixed-point with `digits` decimals.
std::string fixed(double value, int digits);

std::string hex(std::uint64_t value);

bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, std::int64_t& out);
bool parse_uint(std::string_view text, std::uint64_t& out);
// Accepts an optional 0x/0X prefix.
bool parse_hex(std::string_view text, std::uint64_t& out);

std::string_view trim(std::string_view text);

}  // namespace alea::fmt
