#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dnsabuse/timeutil.hpp"

namespace dnsabuse::ingest {

/// One blocklist observation, as listed by a feed.
struct FeedEntry {
  std::string url;
  Timestamp detected_at;
  std::string source;
  std::optional<std::string> brand;

  bool operator==(const FeedEntry&) const = default;
};

struct ParsedUrl {
  std::string scheme;
  std::string host;  // lowercase ASCII, punycode for internationalized labels
  std::string path;  // without query or fragment
};

/// Public-suffix rules split by kind. Wildcard entries are stored without
/// the leading "*." and exceptions without the leading "!".
struct SuffixRules {
  std::unordered_set<std::string> exact;
  std::unordered_set<std::string> wildcard;
  std::unordered_set<std::string> exception;

  size_t size() const { return exact.size() + wildcard.size() + exception.size(); }
};

struct SplitHost {
  std::string subdomain;  // empty when the host is the registrable domain
  std::string registrable;
  std::string public_suffix;
  bool suffix_unlisted = false;  // no rule matched; last label used as suffix
};

/// A registrable domain and everything merged into it from the feeds.
struct DomainRecord {
  std::string registrable;
  std::string public_suffix;
  /// Subdomain of the earliest observation that had one; empty if none did.
  std::string subdomain;
  std::set<std::string> subdomains;
  std::map<std::string, Timestamp> first_detections;
  std::set<std::string> brands;
  uint64_t url_count = 0;
  bool suffix_unlisted = false;

  /// The label directly left of the public suffix.
  std::string second_level_label() const;
  bool has_subdomain() const { return !subdomains.empty(); }

  bool operator==(const DomainRecord&) const = default;
};

enum class FeedFormat { Lines, Json };

struct FeedLoad {
  std::vector<FeedEntry> entries;
  size_t skipped = 0;
};

struct DomainTable {
  std::vector<DomainRecord> records;  // sorted by registrable
  size_t skipped_urls = 0;
  size_t ip_hosts = 0;
};

/// Throws Error(MalformedUrl) when no host can be extracted and
/// Error(InvalidLabel) when a label is empty, too long, or contains a
/// character outside [a-z0-9-] after normalization.
ParsedUrl parse_url(std::string_view raw);

/// Normalizes one host label (lowercase, punycode); throws InvalidLabel.
std::string normalize_label(std::string_view label);

/// Parses public-suffix-list text. Only the ICANN section is read unless
/// include_private is set; exceptions without a matching wildcard are dropped.
SuffixRules parse_suffix_rules(std::string_view text, bool include_private = false);
SuffixRules load_suffix_rules(const std::filesystem::path& path, bool include_private = false);

/// Longest-match decomposition; exception rules take precedence. Throws
/// Error(HostIsSuffix) when no label is left for the registrable part.
SplitHost split_registrable(std::string_view host, const SuffixRules& rules);

FeedFormat feed_format_for(const std::filesystem::path& path);
FeedLoad parse_feed(std::string_view text, FeedFormat format);
FeedLoad load_feed(const std::filesystem::path& path, FeedFormat format);

bool is_ipv4_literal(std::string_view host);

DomainTable build_domain_table(const std::vector<FeedEntry>& entries, const SuffixRules& rules);

}  // namespace dnsabuse::ingest
