#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dnsabuse/timeutil.hpp"

namespace dnsabuse::dnsmon {

enum class RrType { A, AAAA, CNAME, NS, MX, TXT, SOA };

inline constexpr RrType kAllRrTypes[] = {RrType::A,  RrType::AAAA, RrType::CNAME, RrType::NS,
                                         RrType::MX, RrType::TXT,  RrType::SOA};

std::string_view to_string(RrType t);
std::optional<RrType> rrtype_from_string(std::string_view s);
uint16_t wire_code(RrType t);

struct VantagePoint {
  std::string id;
  std::string resolver_address;  // "ip", "ip:port" or "[ipv6]:port"
  std::string region_label;
};

/// JSON array of {"id","resolver_address","region_label"}; ids must be unique.
std::vector<VantagePoint> parse_vantages(std::string_view json_text);
std::vector<VantagePoint> load_vantages(const std::filesystem::path& path);

struct RrSet {
  RrType rrtype;
  std::vector<std::string> values;  // canonical text form
  uint32_t ttl = 0;

  bool operator==(const RrSet&) const = default;
};

enum class SnapshotStatus { Ok, Failed };

struct QueryError {
  RrType rrtype;
  std::string error;

  bool operator==(const QueryError&) const = default;
};

struct DnsSnapshot {
  std::string registrable;
  std::string vantage_id;
  Timestamp taken_at;
  std::vector<RrSet> rrsets;
  SnapshotStatus status = SnapshotStatus::Ok;
  int attempts = 1;
  /// The name did not exist at this vantage (candidate deregistration signal).
  bool nxdomain = false;
  /// Record types that could not be collected at this snapshot.
  std::vector<QueryError> errors;

  const RrSet* find(RrType t) const;
  bool failed_type(RrType t) const;

  bool operator==(const DnsSnapshot&) const = default;
};

std::string snapshot_to_json(const DnsSnapshot& s);
DnsSnapshot snapshot_from_json(std::string_view line);

}  // namespace dnsabuse::dnsmon
