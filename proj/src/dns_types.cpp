#include "dnsabuse/dns_types.hpp"

#include <set>

#include "dnsabuse/error.hpp"
#include "dnsabuse/textio.hpp"
#include "json.hpp"

namespace dnsabuse::dnsmon {

using nlohmann::json;

std::string_view to_string(RrType t) {
  switch (t) {
    case RrType::A: return "A";
    case RrType::AAAA: return "AAAA";
    case RrType::CNAME: return "CNAME";
    case RrType::NS: return "NS";
    case RrType::MX: return "MX";
    case RrType::TXT: return "TXT";
    case RrType::SOA: return "SOA";
  }
  return "?";
}

std::optional<RrType> rrtype_from_string(std::string_view s) {
  for (auto t : kAllRrTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

uint16_t wire_code(RrType t) {
  switch (t) {
    case RrType::A: return 1;
    case RrType::NS: return 2;
    case RrType::CNAME: return 5;
    case RrType::SOA: return 6;
    case RrType::MX: return 15;
    case RrType::TXT: return 16;
    case RrType::AAAA: return 28;
  }
  return 0;
}

std::vector<VantagePoint> parse_vantages(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("vantage config: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::InvalidArgument, "vantage config must be a JSON array");
  std::vector<VantagePoint> out;
  std::set<std::string> ids;
  for (const auto& v : doc) {
    try {
      VantagePoint vp{v.at("id").get<std::string>(), v.at("resolver_address").get<std::string>(),
                      v.value("region_label", std::string())};
      if (vp.id.empty()) throw Error(ErrorCode::InvalidArgument, "vantage id must be non-empty");
      if (!ids.insert(vp.id).second) throw Error(ErrorCode::InvalidArgument, "duplicate vantage id " + vp.id);
      out.push_back(std::move(vp));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("vantage entry: ") + e.what());
    }
  }
  return out;
}

std::vector<VantagePoint> load_vantages(const std::filesystem::path& path) { return parse_vantages(read_file(path)); }

const RrSet* DnsSnapshot::find(RrType t) const {
  for (const auto& r : rrsets) {
    if (r.rrtype == t) return &r;
  }
  return nullptr;
}

bool DnsSnapshot::failed_type(RrType t) const {
  for (const auto& e : errors) {
    if (e.rrtype == t) return true;
  }
  return false;
}

std::string snapshot_to_json(const DnsSnapshot& s) {
  nlohmann::ordered_json rrsets = nlohmann::ordered_json::array();
  for (const auto& r : s.rrsets) {
    rrsets.push_back({{"rrtype", to_string(r.rrtype)}, {"values", r.values}, {"ttl", r.ttl}});
  }
  nlohmann::ordered_json errors = nlohmann::ordered_json::array();
  for (const auto& e : s.errors) errors.push_back({{"rrtype", to_string(e.rrtype)}, {"error", e.error}});
  // ordered_json keeps the documented field order in the output file
  nlohmann::ordered_json j;
  j["registrable"] = s.registrable;
  j["vantage_id"] = s.vantage_id;
  j["taken_at"] = format_iso8601(s.taken_at);
  j["rrsets"] = rrsets;
  j["status"] = s.status == SnapshotStatus::Ok ? "Ok" : "Failed";
  j["attempts"] = s.attempts;
  j["nxdomain"] = s.nxdomain;
  j["errors"] = errors;
  return j.dump();
}

DnsSnapshot snapshot_from_json(std::string_view line) {
  try {
    const auto j = json::parse(line);
    DnsSnapshot s;
    s.registrable = j.at("registrable").get<std::string>();
    s.vantage_id = j.at("vantage_id").get<std::string>();
    const auto at = parse_iso8601(j.at("taken_at").get<std::string>());
    if (!at) throw Error(ErrorCode::InvalidArgument, "bad taken_at");
    s.taken_at = *at;
    for (const auto& r : j.at("rrsets")) {
      const auto t = rrtype_from_string(r.at("rrtype").get<std::string>());
      if (!t) throw Error(ErrorCode::InvalidArgument, "unknown rrtype");
      s.rrsets.push_back({*t, r.at("values").get<std::vector<std::string>>(), r.at("ttl").get<uint32_t>()});
    }
    const auto status = j.at("status").get<std::string>();
    if (status != "Ok" && status != "Failed") throw Error(ErrorCode::InvalidArgument, "bad status " + status);
    s.status = status == "Ok" ? SnapshotStatus::Ok : SnapshotStatus::Failed;
    s.attempts = j.at("attempts").get<int>();
    s.nxdomain = j.value("nxdomain", false);
    if (j.contains("errors")) {
      for (const auto& e : j.at("errors")) {
        const auto t = rrtype_from_string(e.at("rrtype").get<std::string>());
        if (!t) throw Error(ErrorCode::InvalidArgument, "unknown rrtype");
        s.errors.push_back({*t, e.at("error").get<std::string>()});
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("snapshot line: ") + e.what());
  }
}

}  // namespace dnsabuse::dnsmon
