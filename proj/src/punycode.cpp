#include "dnsabuse/punycode.hpp"

#include <cstdint>
#include <vector>

namespace dnsabuse::punycode {

namespace {

constexpr uint32_t kBase = 36;
constexpr uint32_t kTmin = 1;
constexpr uint32_t kTmax = 26;
constexpr uint32_t kSkew = 38;
constexpr uint32_t kDamp = 700;
constexpr uint32_t kInitialBias = 72;
constexpr uint32_t kInitialN = 0x80;
constexpr uint32_t kMaxInt = 0x7fffffff;

uint32_t adapt(uint32_t delta, uint32_t numpoints, bool first) {
  delta = first ? delta / kDamp : delta / 2;
  delta += delta / numpoints;
  uint32_t k = 0;
  while (delta > ((kBase - kTmin) * kTmax) / 2) {
    delta /= kBase - kTmin;
    k += kBase;
  }
  return k + (kBase - kTmin + 1) * delta / (delta + kSkew);
}

char encode_digit(uint32_t d) { return static_cast<char>(d < 26 ? 'a' + d : '0' + (d - 26)); }

std::optional<uint32_t> decode_digit(char c) {
  if (c >= '0' && c <= '9') return static_cast<uint32_t>(c - '0' + 26);
  if (c >= 'a' && c <= 'z') return static_cast<uint32_t>(c - 'a');
  if (c >= 'A' && c <= 'Z') return static_cast<uint32_t>(c - 'A');
  return std::nullopt;
}

std::optional<std::vector<uint32_t>> utf8_to_codepoints(std::string_view s) {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < s.size();) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    uint32_t cp = 0;
    size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      return std::nullopt;
    }
    if (i + len > s.size()) return std::nullopt;
    for (size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) return std::nullopt;
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong forms and surrogates.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return std::nullopt;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

std::optional<std::string> encode(std::string_view utf8_label) {
  const auto input = utf8_to_codepoints(utf8_label);
  if (!input) return std::nullopt;

  std::string output;
  for (uint32_t cp : *input) {
    if (cp < 0x80) output += static_cast<char>(cp);
  }
  const auto basic = static_cast<uint32_t>(output.size());
  uint32_t handled = basic;
  if (basic > 0) output += '-';

  uint32_t n = kInitialN;
  uint32_t delta = 0;
  uint32_t bias = kInitialBias;
  const auto total = static_cast<uint32_t>(input->size());
  while (handled < total) {
    uint32_t m = kMaxInt;
    for (uint32_t cp : *input) {
      if (cp >= n && cp < m) m = cp;
    }
    if (m - n > (kMaxInt - delta) / (handled + 1)) return std::nullopt;
    delta += (m - n) * (handled + 1);
    n = m;
    for (uint32_t cp : *input) {
      if (cp < n && ++delta == 0) return std::nullopt;
      if (cp == n) {
        uint32_t q = delta;
        for (uint32_t k = kBase;; k += kBase) {
          const uint32_t t = k <= bias ? kTmin : (k >= bias + kTmax ? kTmax : k - bias);
          if (q < t) break;
          output += encode_digit(t + (q - t) % (kBase - t));
          q = (q - t) / (kBase - t);
        }
        output += encode_digit(q);
        bias = adapt(delta, handled + 1, handled == basic);
        delta = 0;
        ++handled;
      }
    }
    ++delta;
    ++n;
  }
  return output;
}

std::optional<std::string> decode(std::string_view ascii_label) {
  std::vector<uint32_t> output;
  size_t b = ascii_label.rfind('-');
  size_t in = 0;
  if (b != std::string_view::npos) {
    for (size_t j = 0; j < b; ++j) {
      const auto c = static_cast<unsigned char>(ascii_label[j]);
      if (c >= 0x80) return std::nullopt;
      output.push_back(c);
    }
    in = b + 1;
  }

  uint32_t n = kInitialN;
  uint32_t i = 0;
  uint32_t bias = kInitialBias;
  while (in < ascii_label.size()) {
    const uint32_t oldi = i;
    uint32_t w = 1;
    for (uint32_t k = kBase;; k += kBase) {
      if (in >= ascii_label.size()) return std::nullopt;
      const auto digit = decode_digit(ascii_label[in++]);
      if (!digit) return std::nullopt;
      if (*digit > (kMaxInt - i) / w) return std::nullopt;
      i += *digit * w;
      const uint32_t t = k <= bias ? kTmin : (k >= bias + kTmax ? kTmax : k - bias);
      if (*digit < t) break;
      if (w > kMaxInt / (kBase - t)) return std::nullopt;
      w *= kBase - t;
    }
    const auto len = static_cast<uint32_t>(output.size() + 1);
    bias = adapt(i - oldi, len, oldi == 0);
    if (i / len > kMaxInt - n) return std::nullopt;
    n += i / len;
    i %= len;
    output.insert(output.begin() + i, n);
    ++i;
  }

  std::string utf8;
  for (uint32_t cp : output) append_utf8(utf8, cp);
  return utf8;
}

std::optional<std::string> to_ascii_label(std::string_view utf8_label) {
  bool ascii = true;
  for (char c : utf8_label) {
    if (static_cast<unsigned char>(c) >= 0x80) {
      ascii = false;
      break;
    }
  }
  if (ascii) return std::string(utf8_label);
  auto encoded = encode(utf8_label);
  if (!encoded) return std::nullopt;
  return "xn--" + *encoded;
}

}  // namespace dnsabuse::punycode
