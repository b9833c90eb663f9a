#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dnsabuse/dns_types.hpp"
#include "dnsabuse/resolver.hpp"

namespace dnsabuse::dnsmon {

using Millis = std::chrono::milliseconds;

struct RetryPolicy {
  int max_attempts = 5;
  Millis base_delay{500};
  Millis max_delay{8000};

  /// Wait after the given (1-based) failed attempt: base * 2^(attempt-1), capped.
  Millis delay_after(int attempt) const;
};

using Sleeper = std::function<void(Millis)>;

/// Queries every type at one vantage, retrying Timeout/ServFail with
/// exponential backoff. Nxdomain stops the remaining types.
DnsSnapshot collect_vantage(const std::string& domain, const VantagePoint& vantage, const std::vector<RrType>& types,
                            Resolver& resolver, const RetryPolicy& policy, const Sleeper& sleep, Timestamp taken_at);

std::vector<DnsSnapshot> collect_snapshot(const std::string& domain, const std::vector<VantagePoint>& vantages,
                                          const std::vector<RrType>& types, Resolver& resolver,
                                          const RetryPolicy& policy, const Sleeper& sleep, Timestamp taken_at);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() = 0;
  virtual void sleep_until(Timestamp t) = 0;
};

class SimulatedClock : public Clock {
 public:
  explicit SimulatedClock(Timestamp start) : now_(start) {}
  Timestamp now() override { return now_; }
  void sleep_until(Timestamp t) override {
    if (t > now_) now_ = t;
  }

 private:
  Timestamp now_;
};

/// Wall clock; sleep_until wakes early when interrupt() is called.
class SystemClock : public Clock {
 public:
  Timestamp now() override;
  void sleep_until(Timestamp t) override;
  void interrupt();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool interrupted_ = false;
};

class SnapshotStore {
 public:
  virtual ~SnapshotStore() = default;
  /// Thread-safe. Throws Error(StoreFailure).
  virtual void append(const DnsSnapshot& s) = 0;
  virtual size_t size() const = 0;
};

class MemorySnapshotStore : public SnapshotStore {
 public:
  void append(const DnsSnapshot& s) override;
  size_t size() const override;
  std::vector<DnsSnapshot> snapshots() const;

 private:
  mutable std::mutex mu_;
  std::vector<DnsSnapshot> items_;
};

/// Append-only JSON-lines file, one snapshot per line, flushed per append.
class JsonlSnapshotStore : public SnapshotStore {
 public:
  explicit JsonlSnapshotStore(std::filesystem::path path);
  void append(const DnsSnapshot& s) override;
  size_t size() const override;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  size_t count_ = 0;
};

std::vector<DnsSnapshot> read_snapshot_store(const std::filesystem::path& path);

struct ScheduleConfig {
  Seconds interval{30 * 60};
  std::vector<VantagePoint> vantages;
  std::vector<RrType> types{RrType::A, RrType::AAAA, RrType::NS, RrType::MX, RrType::TXT};
  RetryPolicy retry;
  size_t concurrency = 64;
};

struct ScheduleStats {
  size_t rounds = 0;
  size_t snapshots = 0;
};

/// Collects every domain once per interval tick until stop(now) is true.
/// Ticks come from the injected clock; each round's snapshots are stamped
/// with the tick time and appended in (domain, vantage) order. At most
/// config.concurrency vantage collections run at once.
ScheduleStats run_schedule(const std::vector<std::string>& domains, const ScheduleConfig& config, Resolver& resolver,
                           SnapshotStore& store, Clock& clock, const Sleeper& sleep,
                           const std::function<bool(Timestamp)>& stop);

struct RecordChange {
  std::string registrable;
  RrType rrtype;
  std::string vantage_id;
  std::vector<std::string> before;
  std::vector<std::string> after;
  Timestamp observed_at;

  bool operator==(const RecordChange&) const = default;
};

/// Per-type multiset comparison; TTL and ordering are ignored. Types that
/// failed at either side, and Failed snapshots, are not compared.
std::vector<RecordChange> diff_snapshots(const DnsSnapshot& prev, const DnsSnapshot& next);

struct ChangeReport {
  std::vector<RecordChange> changes;
  std::set<std::string> domains_observed;
  std::set<std::string> domains_changed;

  double change_rate() const {
    return domains_observed.empty() ? 0.0
                                    : static_cast<double>(domains_changed.size()) / domains_observed.size();
  }
};

/// Diffs consecutive snapshots per (domain, vantage) in taken_at order.
ChangeReport detect_changes(const std::vector<DnsSnapshot>& snapshots);

struct DomainTtl {
  uint32_t min = 0;
  double median = 0;  // lower median
  double mean = 0;
  size_t observations = 0;
};

/// Bucket membership is by each domain's minimum observed TTL; thresholds are
/// strict except the upper bound of the 12h-24h band, which includes 86400.
struct TtlSummary {
  std::map<std::string, DomainTtl> per_domain;
  size_t under_60s = 0;
  size_t under_3600s = 0;
  size_t over_43200s = 0;
  size_t between_43200s_and_86400s = 0;
  double overall_median = 0;
  double overall_mean = 0;
};

TtlSummary ttl_stats(const std::vector<DnsSnapshot>& snapshots);

struct TypeDivergence {
  RrType rrtype;
  std::vector<std::set<std::string>> partition;  // vantage ids grouped by identical answers

  bool operator==(const TypeDivergence&) const = default;
};

struct DivergenceReport {
  std::string registrable;
  Timestamp taken_at;
  std::vector<TypeDivergence> types;
};

/// Snapshots of one domain at one tick. Returns nullopt when fewer than two
/// are Ok or when every Ok vantage saw the same value multisets.
std::optional<DivergenceReport> vantage_divergence(const std::vector<DnsSnapshot>& same_tick);

/// Applies vantage_divergence to every (domain, tick) group of a store.
std::vector<DivergenceReport> divergence_over(const std::vector<DnsSnapshot>& snapshots);

}  // namespace dnsabuse::dnsmon
