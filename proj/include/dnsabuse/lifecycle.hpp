#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dnsabuse/classifier.hpp"
#include "dnsabuse/ingest.hpp"
#include "dnsabuse/timeutil.hpp"

namespace dnsabuse::lifecycle {

/// Declaration order doubles as the tie-break when two sources agree on the
/// earliest instant.
enum class SourceKind { Whois, Rdap, CtLog, PassiveDnsFirstSeen, ZoneFirstAppearance, ZoneLastSeen };

std::string_view to_string(SourceKind k);
std::optional<SourceKind> source_kind_from_string(std::string_view s);

struct TimestampSource {
  SourceKind kind;
  std::string registrable;
  Timestamp at;

  bool operator==(const TimestampSource&) const = default;
};

/// CSV `registrable,kind,at` with a header row.
std::vector<TimestampSource> parse_timestamp_sources(std::string_view csv);
std::vector<TimestampSource> load_timestamp_sources(const std::filesystem::path& path);

struct RegistrationEvent {
  std::string registrable;
  Timestamp registered_at;
  SourceKind provenance;
  std::optional<Timestamp> deregistered_at;

  bool operator==(const RegistrationEvent&) const = default;
};

/// Sources for a single domain. registered_at is the earliest non-last-seen
/// timestamp; deregistered_at the latest zone_last_seen, kept only when it is
/// after registration. Throws NoRegistrationEvidence or, for mixed domains,
/// InvalidArgument.
RegistrationEvent merge_registration(const std::vector<TimestampSource>& sources);

struct MergeResult {
  std::map<std::string, RegistrationEvent> events;
  std::set<std::string> without_evidence;
};

MergeResult merge_all(const std::vector<TimestampSource>& sources);

using Detections = std::map<std::string, Timestamp>;

enum class QualityFlag { PreRegistrationDetection, DeregisteredBeforeDetection };

std::string_view to_string(QualityFlag q);

/// A signed duration. Negative values are kept, never clamped.
struct Delay {
  Seconds value;
  bool flagged = false;

  double days() const { return to_days(value); }
};

/// detections[reference] - registered_at; flagged when negative.
std::optional<Delay> detection_delay(const RegistrationEvent& reg, const Detections& detections,
                                     const std::string& reference);

/// deregistered_at - detections[reference]; flagged when negative.
std::optional<Delay> takedown_delay(const RegistrationEvent& reg, const Detections& detections,
                                    const std::string& reference);

/// detections[s] - detections[reference] for every other source s.
/// Throws ReferenceMissing.
std::map<std::string, Seconds> blocklist_lag(const Detections& detections, const std::string& reference);

struct LifecycleRecord {
  std::string registrable;
  std::string tld;
  std::optional<RegistrationEvent> registration;
  Detections detections;
  std::set<std::string> feed_brands;
  std::optional<Delay> detection_delay;
  std::optional<Delay> takedown_delay;
  std::map<std::string, Seconds> lags;  // empty when the reference never listed the domain
  classifier::ClassificationResult classification;

  std::set<QualityFlag> quality() const;
};

/// Joins domain table, classifications and merged registrations. Every domain
/// with a classification yields one record, in registrable order.
std::vector<LifecycleRecord> build_records(const std::vector<ingest::DomainRecord>& domains,
                                           const std::vector<classifier::ClassificationResult>& classifications,
                                           const std::map<std::string, RegistrationEvent>& registrations,
                                           const std::string& reference);

struct Metric {
  enum class Kind { DetectionDelay, TakedownDelay, Lag };
  Kind kind = Kind::DetectionDelay;
  std::string source;  // Lag only

  static Metric detection() { return {Kind::DetectionDelay, {}}; }
  static Metric takedown() { return {Kind::TakedownDelay, {}}; }
  static Metric lag(std::string s) { return {Kind::Lag, std::move(s)}; }

  /// "detection_delay", "takedown_delay" or "lag_<source>".
  std::string name() const;
  std::optional<double> days_of(const LifecycleRecord& r) const;
};

enum class GroupKey { Brand, Tld, FlagCategory, Verdict, Source };

std::string_view to_string(GroupKey g);
std::optional<GroupKey> group_key_from_string(std::string_view s);

/// Keys a record falls under. flag_category and source may yield several;
/// brand prefers the lexicographically first feed brand over the classifier's.
std::vector<std::string> group_values(const LifecycleRecord& r, GroupKey key);

struct AggregateRow {
  std::string key;
  size_t count = 0;    // records with the key and the metric
  size_t missing = 0;  // records with the key but without the metric
  double mean_days = 0;
  double median_days = 0;  // lower median
};

struct AggregateReport {
  std::string metric;
  GroupKey group_key;
  std::vector<AggregateRow> rows;  // count descending, then key
  size_t ungrouped = 0;            // records carrying no value for the key
};

/// Throws EmptyInput when `records` is empty or no record carries the key.
AggregateReport aggregate(const std::vector<LifecycleRecord>& records, const Metric& metric, GroupKey key);

double lower_median(std::vector<double> values);

std::string render_report(const std::vector<LifecycleRecord>& records);
std::string render_aggregate(const AggregateReport& report);

}  // namespace dnsabuse::lifecycle
