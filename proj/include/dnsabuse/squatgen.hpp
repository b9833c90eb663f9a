#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dnsabuse/ingest.hpp"

namespace dnsabuse::squatgen {

// Enum order is the tie-break order for multi-hit attribution.
enum class Technique {
  Addition,
  Omission,
  Repetition,
  Bitflip,
  Homoglyph,
  Hyphenation,
  PrefixInsertion,
  TldSwap,
};

inline constexpr Technique kAllTechniques[] = {
    Technique::Addition,    Technique::Omission,        Technique::Repetition, Technique::Bitflip,
    Technique::Homoglyph,   Technique::Hyphenation,     Technique::PrefixInsertion, Technique::TldSwap,
};

std::string_view to_string(Technique t);
std::optional<Technique> technique_from_string(std::string_view s);

struct SquatCandidate {
  std::string label;
  Technique technique;
  std::string brand_id;

  auto operator<=>(const SquatCandidate&) const = default;
};

struct Brand {
  std::string brand_id;
  std::string canonical_domain;
  int rank = 0;

  std::string label() const;   // second-level label
  std::string suffix() const;  // everything after the first dot
};

struct BrandCatalog {
  std::vector<Brand> brands;  // ascending rank
  size_t brand_top_n = 1000;
  size_t squat_top_n = 200;
};

/// CSV `rank,brand_id,canonical_domain` with a header row. Rows are sorted by
/// rank; duplicate ranks or brand ids are rejected.
BrandCatalog parse_brand_catalog(std::string_view text, size_t brand_top_n = 1000, size_t squat_top_n = 200);
BrandCatalog load_brand_catalog(const std::filesystem::path& path, size_t brand_top_n = 1000,
                                size_t squat_top_n = 200);

/// `[a-z0-9]([a-z0-9-]*[a-z0-9])?`, at most 63 characters.
bool is_valid_label(std::string_view label);

/// Directed single-position substitutions: o/0, l/1/i, e/3, a/4, s/5, b/8,
/// g/9 and m/rn.
const std::vector<std::pair<std::string, std::string>>& homoglyph_table();

std::set<SquatCandidate> generate(std::string_view brand_domain, std::string_view brand_id);
/// brand_id defaults to the domain's second-level label.
std::set<SquatCandidate> generate(std::string_view brand_domain);

struct Attribution {
  std::string brand_id;
  Technique technique;

  auto operator<=>(const Attribution&) const = default;
};

struct SquatHit {
  std::string brand_id;
  Technique technique;

  bool operator==(const SquatHit&) const = default;
};

/// Exact-match lookup table over the generated permutations of the top
/// squat_top_n brands. Immutable once built.
class SquatIndex {
 public:
  static SquatIndex build(const BrandCatalog& catalog);

  /// Non-tld_swap attributions of a label; empty when unknown.
  const std::vector<Attribution>& lookup(std::string_view label) const;

  std::optional<SquatHit> match(std::string_view label, std::string_view public_suffix) const;
  std::optional<SquatHit> match(const ingest::DomainRecord& record) const;

  size_t label_count() const { return by_label_.size(); }
  size_t brand_count() const { return brands_.size(); }

 private:
  std::unordered_map<std::string, std::vector<Attribution>> by_label_;
  std::unordered_map<std::string, std::vector<std::string>> tld_swap_labels_;  // label -> brand ids
  std::unordered_map<std::string, Brand> brands_;
  std::unordered_set<std::string> canonical_domains_;
};

}  // namespace dnsabuse::squatgen
