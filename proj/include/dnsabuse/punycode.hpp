#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace dnsabuse::punycode {

// Bootstring encoding of one label (no "xn--" prefix). Input is UTF-8;
// returns nullopt on invalid UTF-8 or overflow.
std::optional<std::string> encode(std::string_view utf8_label);

// Inverse of encode; returns UTF-8.
std::optional<std::string> decode(std::string_view ascii_label);

// ASCII labels pass through unchanged; anything with a non-ASCII byte becomes
// "xn--" + encode(label).
std::optional<std::string> to_ascii_label(std::string_view utf8_label);

}  // namespace dnsabuse::punycode
