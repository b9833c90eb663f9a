#include "dnsabuse/dnsmon.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

#include "dnsabuse/error.hpp"
#include "dnsabuse/textio.hpp"

namespace dnsabuse::dnsmon {

namespace {

std::vector<std::string> sorted_values(const RrSet* set) {
  if (!set) return {};
  auto v = set->values;
  std::sort(v.begin(), v.end());
  return v;
}

double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

Millis RetryPolicy::delay_after(int attempt) const {
  Millis d = base_delay;
  for (int i = 1; i < attempt && d < max_delay; ++i) d *= 2;
  return std::min(d, max_delay);
}

DnsSnapshot collect_vantage(const std::string& domain, const VantagePoint& vantage, const std::vector<RrType>& types,
                            Resolver& resolver, const RetryPolicy& policy, const Sleeper& sleep, Timestamp taken_at) {
  DnsSnapshot snap;
  snap.registrable = domain;
  snap.vantage_id = vantage.id;
  snap.taken_at = taken_at;
  snap.attempts = 0;

  bool any_answered = false;
  for (const auto type : types) {
    QueryResult result;
    int attempt = 0;
    while (true) {
      ++attempt;
      result = resolver.query(vantage, domain, type);
      if (!result.retryable() || attempt >= policy.max_attempts) break;
      if (sleep) sleep(policy.delay_after(attempt));
    }
    snap.attempts = std::max(snap.attempts, attempt);

    switch (result.status) {
      case QueryStatus::Answer:
        any_answered = true;
        snap.rrsets.push_back(std::move(*result.rrset));
        break;
      case QueryStatus::Empty:
        any_answered = true;
        break;
      case QueryStatus::Nxdomain:
        any_answered = true;
        snap.nxdomain = true;
        break;
      case QueryStatus::Timeout:
      case QueryStatus::ServFail:
        snap.errors.push_back({type, std::string(to_string(result.status))});
        break;
    }
    if (snap.nxdomain) break;
  }
  if (types.empty()) {
    snap.attempts = 1;
    any_answered = true;
  }
  if (!any_answered) {
    snap.status = SnapshotStatus::Failed;
    snap.rrsets.clear();
  }
  return snap;
}

std::vector<DnsSnapshot> collect_snapshot(const std::string& domain, const std::vector<VantagePoint>& vantages,
                                          const std::vector<RrType>& types, Resolver& resolver,
                                          const RetryPolicy& policy, const Sleeper& sleep, Timestamp taken_at) {
  if (vantages.empty()) throw Error(ErrorCode::InvalidArgument, "no vantage points configured");
  std::vector<DnsSnapshot> out;
  out.reserve(vantages.size());
  for (const auto& v : vantages) out.push_back(collect_vantage(domain, v, types, resolver, policy, sleep, taken_at));
  return out;
}

Timestamp SystemClock::now() {
  return std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
}

void SystemClock::sleep_until(Timestamp t) {
  std::unique_lock lock(mu_);
  cv_.wait_until(lock, t, [this] { return interrupted_; });
}

void SystemClock::interrupt() {
  {
    std::lock_guard lock(mu_);
    interrupted_ = true;
  }
  cv_.notify_all();
}

void MemorySnapshotStore::append(const DnsSnapshot& s) {
  std::lock_guard lock(mu_);
  items_.push_back(s);
}

size_t MemorySnapshotStore::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

std::vector<DnsSnapshot> MemorySnapshotStore::snapshots() const {
  std::lock_guard lock(mu_);
  return items_;
}

JsonlSnapshotStore::JsonlSnapshotStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    for (const auto& line : split_lines(read_file(path_))) {
      if (!trim(line).empty()) ++count_;
    }
  }
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(ErrorCode::StoreFailure, "cannot open snapshot store " + path_.string());
}

void JsonlSnapshotStore::append(const DnsSnapshot& s) {
  const auto line = snapshot_to_json(s) + "\n";
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw Error(ErrorCode::StoreFailure, "write to " + path_.string() + " failed");
  ++count_;
}

size_t JsonlSnapshotStore::size() const {
  std::lock_guard lock(mu_);
  return count_;
}

std::vector<DnsSnapshot> read_snapshot_store(const std::filesystem::path& path) {
  std::vector<DnsSnapshot> out;
  for (const auto& line : split_lines(read_file(path))) {
    if (!trim(line).empty()) out.push_back(snapshot_from_json(line));
  }
  return out;
}

ScheduleStats run_schedule(const std::vector<std::string>& domains, const ScheduleConfig& config, Resolver& resolver,
                           SnapshotStore& store, Clock& clock, const Sleeper& sleep,
                           const std::function<bool(Timestamp)>& stop) {
  if (config.interval <= Seconds::zero()) throw Error(ErrorCode::InvalidArgument, "interval must be positive");
  if (config.vantages.empty()) throw Error(ErrorCode::InvalidArgument, "no vantage points configured");
  const size_t limit = std::max<size_t>(config.concurrency, 1);

  ScheduleStats stats;
  Timestamp next_tick = clock.now();
  while (!stop(clock.now())) {
    const Timestamp now = clock.now();
    if (now < next_tick) {
      clock.sleep_until(next_tick);
      continue;
    }
    const Timestamp tick = next_tick;

    const size_t tasks = domains.size() * config.vantages.size();
    std::vector<DnsSnapshot> results(tasks);
    std::atomic<size_t> cursor{0};
    auto worker = [&] {
      for (size_t i = cursor++; i < tasks; i = cursor++) {
        const auto& domain = domains[i / config.vantages.size()];
        const auto& vantage = config.vantages[i % config.vantages.size()];
        results[i] = collect_vantage(domain, vantage, config.types, resolver, config.retry, sleep, tick);
      }
    };
    const size_t workers = std::min(limit, tasks);
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    for (const auto& snap : results) {
      try {
        store.append(snap);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::StoreFailure) throw;
        throw Error(ErrorCode::StoreFailure, e.what());
      } catch (const std::exception& e) {
        throw Error(ErrorCode::StoreFailure, e.what());
      }
    }
    stats.snapshots += results.size();
    ++stats.rounds;

    next_tick += config.interval;
    // Ticks missed while a slow round ran are skipped rather than replayed.
    while (next_tick < clock.now()) next_tick += config.interval;
  }
  return stats;
}

std::vector<RecordChange> diff_snapshots(const DnsSnapshot& prev, const DnsSnapshot& next) {
  if (prev.registrable != next.registrable || prev.vantage_id != next.vantage_id) {
    throw Error(ErrorCode::MismatchedSubject, prev.registrable + "@" + prev.vantage_id + " vs " + next.registrable +
                                                  "@" + next.vantage_id);
  }
  if (!(prev.taken_at < next.taken_at)) {
    throw Error(ErrorCode::InvalidArgument, "snapshots out of order for " + prev.registrable);
  }
  std::vector<RecordChange> changes;
  if (prev.status == SnapshotStatus::Failed || next.status == SnapshotStatus::Failed) return changes;

  for (const auto type : kAllRrTypes) {
    if (prev.failed_type(type) || next.failed_type(type)) continue;
    auto before = sorted_values(prev.find(type));
    auto after = sorted_values(next.find(type));
    if (before != after) {
      changes.push_back({next.registrable, type, next.vantage_id, std::move(before), std::move(after), next.taken_at});
    }
  }
  return changes;
}

ChangeReport detect_changes(const std::vector<DnsSnapshot>& snapshots) {
  std::map<std::pair<std::string, std::string>, std::vector<const DnsSnapshot*>> series;
  ChangeReport report;
  for (const auto& s : snapshots) {
    series[{s.registrable, s.vantage_id}].push_back(&s);
    report.domains_observed.insert(s.registrable);
  }
  for (auto& [key, list] : series) {
    std::stable_sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->taken_at < b->taken_at; });
    for (size_t i = 1; i < list.size(); ++i) {
      if (!(list[i - 1]->taken_at < list[i]->taken_at)) continue;
      for (auto& c : diff_snapshots(*list[i - 1], *list[i])) {
        report.domains_changed.insert(c.registrable);
        report.changes.push_back(std::move(c));
      }
    }
  }
  return report;
}

TtlSummary ttl_stats(const std::vector<DnsSnapshot>& snapshots) {
  std::map<std::string, std::vector<double>> ttls;
  std::vector<double> all;
  for (const auto& s : snapshots) {
    if (s.status != SnapshotStatus::Ok) continue;
    for (const auto& r : s.rrsets) {
      ttls[s.registrable].push_back(r.ttl);
      all.push_back(r.ttl);
    }
  }
  if (all.empty()) throw Error(ErrorCode::NoObservations, "no TTLs in any Ok snapshot");

  TtlSummary out;
  for (const auto& [domain, values] : ttls) {
    DomainTtl d;
    d.min = static_cast<uint32_t>(*std::min_element(values.begin(), values.end()));
    d.median = lower_median(values);
    d.mean = mean_of(values);
    d.observations = values.size();
    out.per_domain.emplace(domain, d);

    if (d.min < 60) ++out.under_60s;
    if (d.min < 3600) ++out.under_3600s;
    if (d.min > 43200) ++out.over_43200s;
    if (d.min > 43200 && d.min <= 86400) ++out.between_43200s_and_86400s;
  }
  out.overall_median = lower_median(all);
  out.overall_mean = mean_of(all);
  return out;
}

std::optional<DivergenceReport> vantage_divergence(const std::vector<DnsSnapshot>& same_tick) {
  std::vector<const DnsSnapshot*> ok;
  for (const auto& s : same_tick) {
    if (s.status == SnapshotStatus::Ok) ok.push_back(&s);
  }
  if (ok.size() < 2) return std::nullopt;

  DivergenceReport report{ok.front()->registrable, ok.front()->taken_at, {}};
  for (const auto type : kAllRrTypes) {
    std::map<std::vector<std::string>, std::set<std::string>> groups;
    for (const auto* s : ok) {
      if (s->failed_type(type)) continue;
      groups[sorted_values(s->find(type))].insert(s->vantage_id);
    }
    if (groups.size() > 1) {
      TypeDivergence d{type, {}};
      for (auto& [values, ids] : groups) d.partition.push_back(std::move(ids));
      std::sort(d.partition.begin(), d.partition.end());
      report.types.push_back(std::move(d));
    }
  }
  if (report.types.empty()) return std::nullopt;
  return report;
}

std::vector<DivergenceReport> divergence_over(const std::vector<DnsSnapshot>& snapshots) {
  std::map<std::pair<std::string, Timestamp>, std::vector<DnsSnapshot>> ticks;
  for (const auto& s : snapshots) ticks[{s.registrable, s.taken_at}].push_back(s);
  std::vector<DivergenceReport> out;
  for (const auto& [key, group] : ticks) {
    if (auto r = vantage_divergence(group)) out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace dnsabuse::dnsmon
