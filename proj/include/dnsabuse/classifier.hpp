#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dnsabuse/ingest.hpp"
#include "dnsabuse/squatgen.hpp"
#include "dnsabuse/timeutil.hpp"

namespace dnsabuse::classifier {

struct Allowlist {
  std::unordered_set<std::string> domains;
  std::unordered_map<std::string, int> ranks;

  bool contains(const std::string& registrable) const { return domains.count(registrable) != 0; }
};

/// Accepts `rank,domain` CSV (an optional non-numeric header row is skipped)
/// or one domain per line, where the rank is the 1-based line position.
Allowlist parse_allowlist(std::string_view text);
Allowlist load_allowlist(const std::filesystem::path& path);

enum class Prefilter { Allowlisted, PlatformSubdomainAbuse, Candidate };

Prefilter prefilter(const ingest::DomainRecord& record, const Allowlist& allow);

enum class BrandLocation { RegistrableLabel, Subdomain };

std::string_view to_string(BrandLocation loc);

struct BrandHit {
  std::string brand_id;
  BrandLocation location;

  bool operator==(const BrandHit&) const = default;
};

/// Substring search of the top brand_top_n brand ids over the second-level
/// label and every subdomain label. Ids shorter than four characters must
/// equal a whole label or one of its hyphen-separated tokens.
std::optional<BrandHit> match_brand(const ingest::DomainRecord& record, const squatgen::BrandCatalog& catalog);

class WordList {
 public:
  WordList() = default;
  explicit WordList(const std::vector<std::string>& words);

  /// True if `letters` contains a dictionary word of at least min_len
  /// characters as a substring.
  bool contains_word(std::string_view letters, size_t min_len) const;
  size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
  size_t max_len_ = 0;
};

/// One word per line; entries that are not purely alphabetic are ignored.
WordList parse_word_list(std::string_view text);
WordList load_word_list(const std::filesystem::path& path);

/// Strips digits and hyphens from the label first; an empty remainder counts
/// as random.
bool is_random_looking(std::string_view label, const WordList& words, size_t min_word_len);
bool is_random_looking(const ingest::DomainRecord& record, const WordList& words, size_t min_word_len);

size_t levenshtein(std::string_view a, std::string_view b);

struct RegistrationLogEntry {
  std::string registrable;
  Timestamp registered_at;
  std::string registrar;
};

/// CSV `registrable,registered_at,registrar` with a header row. Throws
/// InvalidArgument naming the first bad row.
std::vector<RegistrationLogEntry> parse_registration_log(std::string_view text);
std::vector<RegistrationLogEntry> load_registration_log(const std::filesystem::path& path);

struct BulkCluster {
  std::set<std::string> members;
  std::string registrar;
  Timestamp window_start;

  bool operator==(const BulkCluster&) const = default;
};

struct BulkParams {
  Seconds window = std::chrono::hours(24);
  size_t max_edit_distance = 2;
  size_t min_cluster_size = 3;
};

/// Buckets by registrar and by UTC-aligned tumbling window, links second-level
/// labels within edit distance, and reports connected components of at least
/// min_cluster_size domains. Sorted by (registrar, window_start, members).
std::vector<BulkCluster> cluster_bulk(const std::vector<RegistrationLogEntry>& log, const BulkParams& params);

enum class Flag { BrandInDomain, Squatted, RandomLooking, BulkRegistered };
enum class Verdict { MaliciousRegistration, Compromised, PlatformSubdomainAbuse, Allowlisted };

inline constexpr Flag kAllFlags[] = {Flag::BrandInDomain, Flag::Squatted, Flag::RandomLooking, Flag::BulkRegistered};

std::string_view to_string(Flag f);
std::string_view to_string(Verdict v);

struct Evidence {
  Flag flag;
  std::string detail;

  bool operator==(const Evidence&) const = default;
};

struct ClassificationResult {
  std::string registrable;
  std::set<Flag> flags;
  Verdict verdict = Verdict::Compromised;
  std::vector<Evidence> evidence;
  /// Brand named by the brand or squat step, if either fired.
  std::optional<std::string> brand;
};

/// registrable -> human-readable cluster label, for every clustered domain.
using BulkMembership = std::unordered_map<std::string, std::string>;

BulkMembership bulk_membership(const std::vector<BulkCluster>& clusters);

struct ClassifyContext {
  const Allowlist& allow;
  const squatgen::BrandCatalog& catalog;
  const squatgen::SquatIndex& squat_index;
  const WordList& words;
  const BulkMembership& bulk;
  size_t min_word_len = 4;
};

ClassificationResult classify(const ingest::DomainRecord& record, const ClassifyContext& ctx);

}  // namespace dnsabuse::classifier
