#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dnsabuse/dns_types.hpp"

namespace dnsabuse::dnsmon {

enum class QueryStatus { Answer, Empty, Timeout, ServFail, Nxdomain };

std::string_view to_string(QueryStatus s);

struct QueryResult {
  QueryStatus status = QueryStatus::Empty;
  std::optional<RrSet> rrset;  // set iff status == Answer

  static QueryResult answer(RrSet set) { return {QueryStatus::Answer, std::move(set)}; }
  static QueryResult of(QueryStatus s) { return {s, std::nullopt}; }

  bool retryable() const { return status == QueryStatus::Timeout || status == QueryStatus::ServFail; }
};

/// Answers one question as seen from one vantage point. Implementations must
/// be safe to call from several threads at once.
class Resolver {
 public:
  virtual ~Resolver() = default;
  virtual QueryResult query(const VantagePoint& vantage, const std::string& domain, RrType type) = 0;
};

/// In-memory resolver driven by a fixture:
///
///   { "<domain>": { "<RRTYPE>": [ <step>, ... ] } }
///
/// where a step is the string "nxdomain" or an object
///   {"values": [...], "ttl": N, "fail_count_before_success": K,
///    "failure": "timeout" | "servfail", "vantage": "<id>"}.
/// Steps are consumed one per successful answer for each (domain, type,
/// vantage); the last applicable step repeats. A step first fails K times.
/// Steps carrying "vantage" apply to that vantage only. Empty "values" is an
/// empty answer; names or types absent from the fixture answer Nxdomain and
/// Empty respectively.
class ScriptedResolver : public Resolver {
 public:
  struct Step {
    bool nxdomain = false;
    std::vector<std::string> values;
    uint32_t ttl = 0;
    int fail_count = 0;
    QueryStatus failure = QueryStatus::Timeout;
    std::optional<std::string> vantage;
  };

  ScriptedResolver() = default;
  ScriptedResolver(ScriptedResolver&& other) noexcept;
  static ScriptedResolver parse(std::string_view json_text);
  static ScriptedResolver load(const std::filesystem::path& path);

  void script(const std::string& domain, RrType type, std::vector<Step> steps);

  QueryResult query(const VantagePoint& vantage, const std::string& domain, RrType type) override;

  std::vector<std::string> domains() const;
  size_t calls() const;
  size_t calls_for(const std::string& domain, RrType type, const std::string& vantage_id) const;

 private:
  struct Cursor {
    size_t step = 0;
    int failures_served = 0;
    size_t calls = 0;
  };
  using Key = std::tuple<std::string, RrType, std::string>;

  mutable std::mutex mu_;
  std::map<std::string, std::map<RrType, std::vector<Step>>> script_;
  std::map<Key, Cursor> cursors_;
  size_t total_calls_ = 0;
};

}  // namespace dnsabuse::dnsmon
