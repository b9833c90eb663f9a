#include "dnsabuse/lifecycle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dnsabuse/error.hpp"
#include "dnsabuse/textio.hpp"

namespace dnsabuse::lifecycle {

namespace {

constexpr SourceKind kKinds[] = {SourceKind::Whois,
                                 SourceKind::Rdap,
                                 SourceKind::CtLog,
                                 SourceKind::PassiveDnsFirstSeen,
                                 SourceKind::ZoneFirstAppearance,
                                 SourceKind::ZoneLastSeen};

constexpr GroupKey kGroupKeys[] = {GroupKey::Brand, GroupKey::Tld, GroupKey::FlagCategory, GroupKey::Verdict,
                                   GroupKey::Source};

std::string days_text(double d) { return fmt::format("{:.4f}", d); }

}  // namespace

std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::Whois: return "whois";
    case SourceKind::Rdap: return "rdap";
    case SourceKind::CtLog: return "ct_log";
    case SourceKind::PassiveDnsFirstSeen: return "passive_dns_first_seen";
    case SourceKind::ZoneFirstAppearance: return "zone_first_appearance";
    case SourceKind::ZoneLastSeen: return "zone_last_seen";
  }
  return "?";
}

std::optional<SourceKind> source_kind_from_string(std::string_view s) {
  for (auto k : kKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::vector<TimestampSource> parse_timestamp_sources(std::string_view csv) {
  std::vector<TimestampSource> out;
  const auto lines = split_lines(csv);
  bool header = true;
  size_t line_no = 0;
  for (const auto& raw : lines) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = parse_csv_line(line);
    if (header) {
      header = false;
      if (!fields.empty() && trim(fields[0]) == "registrable") continue;
    }
    if (fields.size() != 3) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("timestamp sources line {}: expected 3 fields", line_no));
    }
    const auto kind = source_kind_from_string(trim(fields[1]));
    if (!kind) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("timestamp sources line {}: unknown kind '{}'", line_no, fields[1]));
    }
    const auto at = parse_iso8601(trim(fields[2]));
    if (!at) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("timestamp sources line {}: bad timestamp '{}'", line_no, fields[2]));
    }
    out.push_back({*kind, to_lower_ascii(trim(fields[0])), *at});
  }
  return out;
}

std::vector<TimestampSource> load_timestamp_sources(const std::filesystem::path& path) {
  return parse_timestamp_sources(read_file(path));
}

RegistrationEvent merge_registration(const std::vector<TimestampSource>& sources) {
  if (sources.empty()) throw Error(ErrorCode::NoRegistrationEvidence, "no timestamp sources");
  const auto& domain = sources.front().registrable;
  std::optional<std::pair<Timestamp, SourceKind>> earliest;
  std::optional<Timestamp> last_seen;
  for (const auto& s : sources) {
    if (s.registrable != domain) {
      throw Error(ErrorCode::InvalidArgument, "sources for " + domain + " and " + s.registrable + " mixed");
    }
    if (s.kind == SourceKind::ZoneLastSeen) {
      if (!last_seen || s.at > *last_seen) last_seen = s.at;
      continue;
    }
    const std::pair candidate{s.at, s.kind};
    if (!earliest || candidate < *earliest) earliest = candidate;
  }
  if (!earliest) throw Error(ErrorCode::NoRegistrationEvidence, domain + " has only zone_last_seen evidence");

  RegistrationEvent ev{domain, earliest->first, earliest->second, std::nullopt};
  if (last_seen && *last_seen > ev.registered_at) ev.deregistered_at = last_seen;
  return ev;
}

MergeResult merge_all(const std::vector<TimestampSource>& sources) {
  std::map<std::string, std::vector<TimestampSource>> by_domain;
  for (const auto& s : sources) by_domain[s.registrable].push_back(s);
  MergeResult out;
  for (const auto& [domain, list] : by_domain) {
    try {
      out.events.emplace(domain, merge_registration(list));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoRegistrationEvidence) throw;
      out.without_evidence.insert(domain);
    }
  }
  return out;
}

std::string_view to_string(QualityFlag q) {
  switch (q) {
    case QualityFlag::PreRegistrationDetection: return "pre_registration_detection";
    case QualityFlag::DeregisteredBeforeDetection: return "deregistered_before_detection";
  }
  return "?";
}

std::optional<Delay> detection_delay(const RegistrationEvent& reg, const Detections& detections,
                                     const std::string& reference) {
  const auto it = detections.find(reference);
  if (it == detections.end()) return std::nullopt;
  const Seconds d = it->second - reg.registered_at;
  return Delay{d, d < Seconds::zero()};
}

std::optional<Delay> takedown_delay(const RegistrationEvent& reg, const Detections& detections,
                                    const std::string& reference) {
  const auto it = detections.find(reference);
  if (it == detections.end() || !reg.deregistered_at) return std::nullopt;
  const Seconds d = *reg.deregistered_at - it->second;
  return Delay{d, d < Seconds::zero()};
}

std::map<std::string, Seconds> blocklist_lag(const Detections& detections, const std::string& reference) {
  const auto ref = detections.find(reference);
  if (ref == detections.end()) throw Error(ErrorCode::ReferenceMissing, "no '" + reference + "' detection");
  std::map<std::string, Seconds> out;
  for (const auto& [source, at] : detections) {
    if (source != reference) out.emplace(source, at - ref->second);
  }
  return out;
}

std::set<QualityFlag> LifecycleRecord::quality() const {
  std::set<QualityFlag> q;
  if (detection_delay && detection_delay->flagged) q.insert(QualityFlag::PreRegistrationDetection);
  if (takedown_delay && takedown_delay->flagged) q.insert(QualityFlag::DeregisteredBeforeDetection);
  return q;
}

std::vector<LifecycleRecord> build_records(const std::vector<ingest::DomainRecord>& domains,
                                           const std::vector<classifier::ClassificationResult>& classifications,
                                           const std::map<std::string, RegistrationEvent>& registrations,
                                           const std::string& reference) {
  std::map<std::string, const ingest::DomainRecord*> by_name;
  for (const auto& d : domains) by_name.emplace(d.registrable, &d);

  std::vector<LifecycleRecord> out;
  out.reserve(classifications.size());
  for (const auto& c : classifications) {
    LifecycleRecord r;
    r.registrable = c.registrable;
    r.classification = c;
    const auto dot = c.registrable.rfind('.');
    r.tld = dot == std::string::npos ? c.registrable : c.registrable.substr(dot + 1);
    if (const auto d = by_name.find(c.registrable); d != by_name.end()) {
      r.detections = d->second->first_detections;
      r.feed_brands = d->second->brands;
    }
    if (const auto reg = registrations.find(c.registrable); reg != registrations.end()) {
      r.registration = reg->second;
      r.detection_delay = detection_delay(reg->second, r.detections, reference);
      r.takedown_delay = takedown_delay(reg->second, r.detections, reference);
    }
    if (r.detections.count(reference)) r.lags = blocklist_lag(r.detections, reference);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.registrable < b.registrable; });
  return out;
}

std::string Metric::name() const {
  switch (kind) {
    case Kind::DetectionDelay: return "detection_delay";
    case Kind::TakedownDelay: return "takedown_delay";
    case Kind::Lag: return "lag_" + source;
  }
  return "?";
}

std::optional<double> Metric::days_of(const LifecycleRecord& r) const {
  switch (kind) {
    case Kind::DetectionDelay:
      if (r.detection_delay) return r.detection_delay->days();
      return std::nullopt;
    case Kind::TakedownDelay:
      if (r.takedown_delay) return r.takedown_delay->days();
      return std::nullopt;
    case Kind::Lag:
      if (const auto it = r.lags.find(source); it != r.lags.end()) return to_days(it->second);
      return std::nullopt;
  }
  return std::nullopt;
}

std::string_view to_string(GroupKey g) {
  switch (g) {
    case GroupKey::Brand: return "brand";
    case GroupKey::Tld: return "tld";
    case GroupKey::FlagCategory: return "flag_category";
    case GroupKey::Verdict: return "verdict";
    case GroupKey::Source: return "source";
  }
  return "?";
}

std::optional<GroupKey> group_key_from_string(std::string_view s) {
  for (auto g : kGroupKeys) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

std::vector<std::string> group_values(const LifecycleRecord& r, GroupKey key) {
  switch (key) {
    case GroupKey::Brand:
      if (!r.feed_brands.empty()) return {*r.feed_brands.begin()};
      if (r.classification.brand) return {*r.classification.brand};
      return {};
    case GroupKey::Tld:
      return {r.tld};
    case GroupKey::FlagCategory: {
      std::vector<std::string> out;
      for (auto f : r.classification.flags) out.emplace_back(classifier::to_string(f));
      return out;
    }
    case GroupKey::Verdict:
      return {std::string(classifier::to_string(r.classification.verdict))};
    case GroupKey::Source: {
      std::vector<std::string> out;
      for (const auto& [source, at] : r.detections) out.push_back(source);
      return out;
    }
  }
  return {};
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of nothing");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

AggregateReport aggregate(const std::vector<LifecycleRecord>& records, const Metric& metric, GroupKey key) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no lifecycle records");

  struct Acc {
    std::vector<double> values;
    size_t missing = 0;
  };
  std::map<std::string, Acc> groups;
  AggregateReport report{metric.name(), key, {}, 0};
  for (const auto& r : records) {
    const auto keys = group_values(r, key);
    if (keys.empty()) {
      ++report.ungrouped;
      continue;
    }
    const auto v = metric.days_of(r);
    for (const auto& k : keys) {
      auto& acc = groups[k];
      if (v) acc.values.push_back(*v);
      else ++acc.missing;
    }
  }
  if (groups.empty()) {
    throw Error(ErrorCode::EmptyInput, fmt::format("no record carries a {} value", to_string(key)));
  }

  for (auto& [k, acc] : groups) {
    AggregateRow row{k, acc.values.size(), acc.missing, std::nan(""), std::nan("")};
    if (!acc.values.empty()) {
      // Sum in sorted order so the mean does not depend on record order.
      std::sort(acc.values.begin(), acc.values.end());
      row.mean_days = std::accumulate(acc.values.begin(), acc.values.end(), 0.0) / acc.values.size();
      row.median_days = lower_median(acc.values);
    }
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const AggregateRow& a, const AggregateRow& b) { return a.count > b.count; });
  return report;
}

std::string render_report(const std::vector<LifecycleRecord>& records) {
  CsvWriter csv({"registrable", "registered_at", "provenance", "deregistered_at", "detection_delay_days",
                 "takedown_delay_days", "flags", "verdict"});
  for (const auto& r : records) {
    std::vector<std::string> flags;
    for (auto f : r.classification.flags) flags.emplace_back(classifier::to_string(f));
    for (auto q : r.quality()) flags.emplace_back(to_string(q));
    csv.add_row({
        r.registrable,
        r.registration ? format_iso8601(r.registration->registered_at) : "",
        r.registration ? std::string(to_string(r.registration->provenance)) : "",
        r.registration && r.registration->deregistered_at ? format_iso8601(*r.registration->deregistered_at) : "",
        r.detection_delay ? days_text(r.detection_delay->days()) : "",
        r.takedown_delay ? days_text(r.takedown_delay->days()) : "",
        join(flags, ";"),
        std::string(classifier::to_string(r.classification.verdict)),
    });
  }
  return csv.str();
}

std::string render_aggregate(const AggregateReport& report) {
  CsvWriter csv({std::string(to_string(report.group_key)), "count", "missing", "mean_days", "median_days"});
  for (const auto& row : report.rows) {
    const bool has = row.count > 0;
    csv.add_row({row.key, std::to_string(row.count), std::to_string(row.missing), has ? days_text(row.mean_days) : "",
                 has ? days_text(row.median_days) : ""});
  }
  return csv.str();
}

}  // namespace dnsabuse::lifecycle
