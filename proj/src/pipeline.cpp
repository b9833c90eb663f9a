#include "dnsabuse/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "dnsabuse/squatgen.hpp"
#include "dnsabuse/stub_resolver.hpp"
#include "dnsabuse/textio.hpp"
#include "json.hpp"

namespace dnsabuse::pipeline {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, "config: " + msg); }

const fs::path& require(const fs::path& p, std::string_view key) {
  if (p.empty()) config_error(std::string(key) + " is not set");
  return p;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

long to_long(std::string_view key, const std::string& v, long min) {
  try {
    size_t used = 0;
    const long n = std::stol(v, &used);
    if (used == v.size() && n >= min) return n;
  } catch (const std::exception&) {
  }
  config_error(fmt::format("{} must be an integer >= {} (got '{}')", key, min, v));
}

double to_double(std::string_view key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && d > 0 && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  config_error(fmt::format("{} must be a positive number (got '{}')", key, v));
}

bool to_bool(std::string_view key, const std::string& v) {
  const auto s = to_lower_ascii(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  config_error(fmt::format("{} must be a boolean (got '{}')", key, v));
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const fs::path&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  auto path_key = [](fs::path PipelineConfig::*m) {
    return [m](PipelineConfig& c, const std::string& v, const fs::path& base) { c.*m = resolve(base, v); };
  };
  auto size_key = [](size_t PipelineConfig::*m, std::string key, long min) {
    return [m, key, min](PipelineConfig& c, const std::string& v, const fs::path&) {
      c.*m = static_cast<size_t>(to_long(key, v, min));
    };
  };
  auto long_key = [](long PipelineConfig::*m, std::string key, long min) {
    return [m, key, min](PipelineConfig& c, const std::string& v, const fs::path&) { c.*m = to_long(key, v, min); };
  };
  static const std::vector<std::pair<std::string, Setter>> table{
      {"feeds", [](PipelineConfig& c, const std::string& v, const fs::path& base) { c.feeds.push_back(resolve(base, v)); }},
      {"allowlist", path_key(&PipelineConfig::allowlist)},
      {"brand_catalog", path_key(&PipelineConfig::brand_catalog)},
      {"word_list", path_key(&PipelineConfig::word_list)},
      {"registration_log", path_key(&PipelineConfig::registration_log)},
      {"timestamp_sources", path_key(&PipelineConfig::timestamp_sources)},
      {"suffix_rules", path_key(&PipelineConfig::suffix_rules)},
      {"vantage_config", path_key(&PipelineConfig::vantage_config)},
      {"snapshot_store", path_key(&PipelineConfig::snapshot_store)},
      {"scripted_resolver", path_key(&PipelineConfig::scripted_resolver)},
      {"monitor_domains", path_key(&PipelineConfig::monitor_domains)},
      {"out_dir", path_key(&PipelineConfig::out_dir)},
      {"bulk_window_hours",
       [](PipelineConfig& c, const std::string& v, const fs::path&) { c.bulk_window_hours = to_double("bulk_window_hours", v); }},
      {"max_edit_distance", size_key(&PipelineConfig::max_edit_distance, "max_edit_distance", 0)},
      {"min_cluster_size", size_key(&PipelineConfig::min_cluster_size, "min_cluster_size", 2)},
      {"min_word_len", size_key(&PipelineConfig::min_word_len, "min_word_len", 1)},
      {"reference_source",
       [](PipelineConfig& c, const std::string& v, const fs::path&) {
         if (trim(v).empty()) config_error("reference_source must not be empty");
         c.reference_source = std::string(trim(v));
       }},
      {"include_private_suffixes",
       [](PipelineConfig& c, const std::string& v, const fs::path&) {
         c.include_private_suffixes = to_bool("include_private_suffixes", v);
       }},
      {"brand_top_n", size_key(&PipelineConfig::brand_top_n, "brand_top_n", 1)},
      {"squat_top_n", size_key(&PipelineConfig::squat_top_n, "squat_top_n", 0)},
      {"monitor_interval_minutes", long_key(&PipelineConfig::monitor_interval_minutes, "monitor_interval_minutes", 1)},
      {"monitor_duration_minutes", long_key(&PipelineConfig::monitor_duration_minutes, "monitor_duration_minutes", 0)},
      {"monitor_start",
       [](PipelineConfig& c, const std::string& v, const fs::path&) {
         if (!parse_iso8601(v)) config_error("monitor_start must be an ISO-8601 UTC timestamp");
         c.monitor_start = v;
       }},
      {"concurrency", size_key(&PipelineConfig::concurrency, "concurrency", 1)},
      {"backoff_base_ms", long_key(&PipelineConfig::backoff_base_ms, "backoff_base_ms", 0)},
      {"backoff_max_ms", long_key(&PipelineConfig::backoff_max_ms, "backoff_max_ms", 0)},
      {"query_timeout_ms", long_key(&PipelineConfig::query_timeout_ms, "query_timeout_ms", 1)},
  };
  return table;
}

std::string snake(std::string_view key) {
  std::string s(key);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

std::string pct(double v) { return fmt::format("{:.2f}", v); }
std::string days(double v) { return fmt::format("{:.4f}", v); }

std::string last_label(const std::string& domain) {
  const auto dot = domain.rfind('.');
  return dot == std::string::npos ? domain : domain.substr(dot + 1);
}

using Outputs = std::vector<std::pair<std::string, std::string>>;

void write_outputs(const PipelineConfig& cfg, const Outputs& outputs, CommandResult& result) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + cfg.out_dir.string() + ": " + ec.message());
  for (const auto& [name, content] : outputs) {
    const auto path = cfg.out_dir / name;
    write_file_atomic(path, content);
    result.files.push_back(path);
  }
}

std::vector<std::string> read_domain_list(const fs::path& path) {
  std::set<std::string> out;
  for (const auto& line : split_lines(read_file(path))) {
    const auto t = trim(line);
    if (!t.empty() && t.front() != '#') out.insert(to_lower_ascii(t));
  }
  return {out.begin(), out.end()};
}

fs::path store_path(const PipelineConfig& cfg) {
  return cfg.snapshot_store.empty() ? cfg.out_dir / "snapshots.jsonl" : cfg.snapshot_store;
}

void add_monitor_outputs(const MonitorOutcome& m, Outputs& out, CommandResult& result) {
  out.emplace_back("changes.csv", render_changes(m.changes));
  out.emplace_back("monitor_summary.csv", render_monitor_summary(m.changes));
  out.emplace_back("divergence.csv", render_divergence(m.divergence));
  result.messages.push_back(fmt::format("{:.1f}% of domains exhibit record changes ({} of {})",
                                        100.0 * m.changes.change_rate(), m.changes.domains_changed.size(),
                                        m.changes.domains_observed.size()));
  if (m.ttl) {
    out.emplace_back("ttl_summary.csv", render_ttl_summary(*m.ttl));
    out.emplace_back("ttl_buckets.csv", render_ttl_buckets(*m.ttl));
    result.messages.push_back(fmt::format("{} domains with minimum TTL under 60s (fast-flux candidates)", m.ttl->under_60s));
  } else {
    result.messages.push_back("no TTL observations");
  }
}

void add_classify_outputs(const ClassifyOutcome& c, Outputs& out, CommandResult& result) {
  out.emplace_back("classification.csv", render_classification_csv(c.results));
  out.emplace_back("classification.jsonl", render_classification_jsonl(c.results));
  out.emplace_back("classify_summary.csv", render_summary(c.summary));
  out.emplace_back("bulk_registrars.csv", render_registrars(c.registrars));
  out.emplace_back("bulk_clusters.csv", render_clusters(c.clusters));
  size_t malicious = 0;
  for (const auto& r : c.results) malicious += r.verdict == classifier::Verdict::MaliciousRegistration;
  result.messages.push_back(fmt::format("{} domains classified, {} candidates, {} maliciously registered",
                                        c.results.size(), c.candidates, malicious));
}

void add_lifecycle_outputs(const PipelineConfig& cfg, const LifecycleOutcome& l, Outputs& out,
                           CommandResult& result) {
  out.emplace_back("lifecycle.csv", lifecycle::render_report(l.records));
  out.emplace_back("lag_summary.csv", render_lag_summary(l.records, cfg.reference_source));
  for (const auto& a : l.aggregates) {
    out.emplace_back(fmt::format("agg_{}_{}.csv", a.metric, lifecycle::to_string(a.group_key)),
                     lifecycle::render_aggregate(a));
  }
  size_t with_delay = 0;
  for (const auto& r : l.records) with_delay += r.detection_delay.has_value();
  result.messages.push_back(fmt::format("{} lifecycle records, {} with a detection delay, {} without registration evidence",
                                        l.records.size(), with_delay, l.without_evidence.size()));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& cfg, std::string_view key, const std::string& value, const fs::path& base_dir) {
  const auto name = snake(key);
  for (const auto& [k, fn] : setters()) {
    if (k == name) return fn(cfg, value, base_dir);
  }
  config_error("unknown key '" + std::string(key) + "'");
}

void apply_config_json(PipelineConfig& cfg, std::string_view json_text, const fs::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    config_error(e.what());
  }
  if (!doc.is_object()) config_error("top level must be an object");
  auto text_of = [](const std::string& key, const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number() || v.is_boolean()) return v.dump();
    config_error(key + " has an unsupported value type");
  };
  for (const auto& [key, value] : doc.items()) {
    if (snake(key) == "feeds") {
      cfg.feeds.clear();
      if (value.is_array()) {
        for (const auto& f : value) set_config_value(cfg, key, text_of(key, f), base_dir);
        continue;
      }
    }
    set_config_value(cfg, key, text_of(key, value), base_dir);
  }
}

PipelineConfig load_config(const fs::path& path) {
  PipelineConfig cfg;
  apply_config_json(cfg, read_file(path), path.parent_path());
  return cfg;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::EmptyInput:
    case ErrorCode::AllRecordsMalformed:
    case ErrorCode::NoObservations:
      return 3;
    case ErrorCode::StoreFailure:
      return 4;
    default:
      return 2;
  }
}

IngestOutcome run_ingest(const PipelineConfig& cfg) {
  if (cfg.feeds.empty()) config_error("feeds is not set");
  const auto rules = ingest::load_suffix_rules(require(cfg.suffix_rules, "suffix_rules"), cfg.include_private_suffixes);

  IngestOutcome out;
  std::vector<ingest::FeedEntry> entries;
  for (const auto& feed : cfg.feeds) {
    auto load = ingest::load_feed(feed, ingest::feed_format_for(feed));
    out.skipped_entries += load.skipped;
    entries.insert(entries.end(), std::make_move_iterator(load.entries.begin()),
                   std::make_move_iterator(load.entries.end()));
  }
  out.feed_entries = entries.size();
  out.table = ingest::build_domain_table(entries, rules);
  if (out.table.records.empty()) throw Error(ErrorCode::EmptyInput, "feeds yielded no domains");

  std::set<std::string> tlds;
  for (const auto& r : out.table.records) tlds.insert(last_label(r.registrable));
  out.tld_count = tlds.size();
  return out;
}

std::vector<SummaryRow> classification_summary(const std::vector<classifier::ClassificationResult>& results) {
  using classifier::Verdict;
  size_t candidates = 0, allowlisted = 0, platform = 0, malicious = 0, compromised = 0;
  std::map<classifier::Flag, size_t> flags;
  for (const auto& r : results) {
    switch (r.verdict) {
      case Verdict::Allowlisted: ++allowlisted; continue;
      case Verdict::PlatformSubdomainAbuse: ++platform; continue;
      case Verdict::MaliciousRegistration: ++malicious; break;
      case Verdict::Compromised: ++compromised; break;
    }
    ++candidates;
    for (auto f : r.flags) ++flags[f];
  }
  if (candidates == 0) return {};

  auto share = [&](size_t n) { return 100.0 * static_cast<double>(n) / static_cast<double>(candidates); };
  std::vector<SummaryRow> rows;
  for (auto f : classifier::kAllFlags) rows.push_back({std::string(classifier::to_string(f)), flags[f], share(flags[f])});
  rows.push_back({"malicious_registration", malicious, share(malicious)});
  rows.push_back({"compromised", compromised, share(compromised)});
  rows.push_back({"candidates", candidates, 100.0});
  rows.push_back({"allowlisted", allowlisted, std::nullopt});
  rows.push_back({"platform_subdomain_abuse", platform, std::nullopt});
  return rows;
}

std::vector<RegistrarRow> registrar_summary(const std::vector<classifier::ClassificationResult>& results,
                                            const std::vector<classifier::BulkCluster>& clusters) {
  std::unordered_map<std::string, std::string> registrar_of;
  for (const auto& c : clusters) {
    for (const auto& m : c.members) registrar_of.emplace(m, c.registrar);
  }
  std::map<std::string, size_t> counts;
  size_t total = 0;
  for (const auto& r : results) {
    if (!r.flags.count(classifier::Flag::BulkRegistered)) continue;
    const auto it = registrar_of.find(r.registrable);
    if (it == registrar_of.end()) continue;
    ++counts[it->second];
    ++total;
  }
  std::vector<RegistrarRow> rows;
  for (const auto& [name, n] : counts) rows.push_back({0, name, n, 100.0 * n / total});
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  for (size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  return rows;
}

ClassifyOutcome run_classify(const PipelineConfig& cfg, const ingest::DomainTable& table) {
  const auto allow = classifier::load_allowlist(require(cfg.allowlist, "allowlist"));
  const auto catalog =
      squatgen::load_brand_catalog(require(cfg.brand_catalog, "brand_catalog"), cfg.brand_top_n, cfg.squat_top_n);
  const auto words = classifier::load_word_list(require(cfg.word_list, "word_list"));
  const auto index = squatgen::SquatIndex::build(catalog);

  ClassifyOutcome out;
  if (!cfg.registration_log.empty()) {
    classifier::BulkParams params;
    params.window = Seconds(static_cast<int64_t>(std::llround(cfg.bulk_window_hours * 3600)));
    params.max_edit_distance = cfg.max_edit_distance;
    params.min_cluster_size = cfg.min_cluster_size;
    out.clusters = classifier::cluster_bulk(classifier::load_registration_log(cfg.registration_log), params);
  }
  const auto bulk = classifier::bulk_membership(out.clusters);
  const classifier::ClassifyContext ctx{allow, catalog, index, words, bulk, cfg.min_word_len};

  out.results.reserve(table.records.size());
  for (const auto& r : table.records) out.results.push_back(classifier::classify(r, ctx));
  std::sort(out.results.begin(), out.results.end(),
            [](const auto& a, const auto& b) { return a.registrable < b.registrable; });
  out.summary = classification_summary(out.results);
  out.registrars = registrar_summary(out.results, out.clusters);
  for (const auto& r : out.results) {
    out.candidates += r.verdict == classifier::Verdict::MaliciousRegistration ||
                      r.verdict == classifier::Verdict::Compromised;
  }
  return out;
}

MonitorOutcome run_monitor(const PipelineConfig& cfg, MonitorMode mode, const std::vector<std::string>& tracked,
                           const std::function<bool()>& interrupted) {
  MonitorOutcome out;
  out.domains = cfg.monitor_domains.empty() ? tracked : read_domain_list(cfg.monitor_domains);
  std::sort(out.domains.begin(), out.domains.end());
  out.domains.erase(std::unique(out.domains.begin(), out.domains.end()), out.domains.end());
  if (out.domains.empty()) throw Error(ErrorCode::EmptyInput, "no domains to monitor");
  if (cfg.backoff_max_ms < cfg.backoff_base_ms) config_error("backoff_max_ms must be >= backoff_base_ms");

  dnsmon::ScheduleConfig schedule;
  schedule.interval = std::chrono::minutes(cfg.monitor_interval_minutes);
  schedule.vantages = dnsmon::load_vantages(require(cfg.vantage_config, "vantage_config"));
  if (schedule.vantages.empty()) config_error("vantage_config lists no vantage points");
  schedule.retry.base_delay = dnsmon::Millis(cfg.backoff_base_ms);
  schedule.retry.max_delay = dnsmon::Millis(cfg.backoff_max_ms);
  schedule.concurrency = cfg.concurrency;
  const auto store_file = store_path(cfg);
  if (cfg.snapshot_store.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + cfg.out_dir.string() + ": " + ec.message());
  }
  const auto duration = std::chrono::minutes(cfg.monitor_duration_minutes);

  if (mode == MonitorMode::Simulate) {
    auto resolver = dnsmon::ScriptedResolver::load(require(cfg.scripted_resolver, "scripted_resolver"));
    const auto start = parse_iso8601(cfg.monitor_start);
    if (!start) config_error("monitor_start is not a valid timestamp");
    const auto partial = fs::path(store_file.string() + ".partial");
    std::error_code ec;
    fs::remove(partial, ec);
    {
      dnsmon::JsonlSnapshotStore store(partial);
      dnsmon::SimulatedClock clock(*start);
      out.stats = dnsmon::run_schedule(out.domains, schedule, resolver, store, clock, {},
                                       [&](Timestamp now) { return now >= *start + duration; });
    }
    fs::rename(partial, store_file, ec);
    if (ec) throw Error(ErrorCode::StoreFailure, "cannot move store into place: " + ec.message());
  } else {
    dnsmon::StubResolver resolver(std::chrono::milliseconds(cfg.query_timeout_ms));
    dnsmon::JsonlSnapshotStore store(store_file);
    dnsmon::SystemClock clock;
    const auto start = clock.now();
    std::jthread watcher([&](std::stop_token st) {
      while (!st.stop_requested()) {
        if (interrupted && interrupted()) {
          clock.interrupt();
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
      }
    });
    auto sleeper = [](dnsmon::Millis d) { std::this_thread::sleep_for(d); };
    out.stats = dnsmon::run_schedule(out.domains, schedule, resolver, store, clock, sleeper, [&](Timestamp now) {
      if (interrupted && interrupted()) return true;
      return cfg.monitor_duration_minutes > 0 && now >= start + duration;
    });
  }

  out.snapshots = dnsmon::read_snapshot_store(store_file);
  out.changes = dnsmon::detect_changes(out.snapshots);
  try {
    out.ttl = dnsmon::ttl_stats(out.snapshots);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoObservations) throw;
  }
  out.divergence = dnsmon::divergence_over(out.snapshots);
  return out;
}

LifecycleOutcome run_lifecycle(const PipelineConfig& cfg, const ingest::DomainTable& table,
                               const std::vector<classifier::ClassificationResult>& results) {
  const auto merged = lifecycle::merge_all(lifecycle::load_timestamp_sources(require(cfg.timestamp_sources, "timestamp_sources")));
  LifecycleOutcome out;
  out.records = lifecycle::build_records(table.records, results, merged.events, cfg.reference_source);
  if (out.records.empty()) throw Error(ErrorCode::EmptyInput, "no lifecycle records");
  std::set<std::string> known;
  for (const auto& r : out.records) known.insert(r.registrable);
  for (const auto& d : merged.without_evidence) {
    if (known.count(d)) out.without_evidence.insert(d);
  }

  std::vector<lifecycle::Metric> metrics{lifecycle::Metric::detection(), lifecycle::Metric::takedown()};
  std::set<std::string> lag_sources;
  for (const auto& r : out.records) {
    for (const auto& [s, lag] : r.lags) lag_sources.insert(s);
  }
  for (const auto& s : lag_sources) metrics.push_back(lifecycle::Metric::lag(s));

  for (const auto& metric : metrics) {
    for (auto key : {lifecycle::GroupKey::Brand, lifecycle::GroupKey::Tld, lifecycle::GroupKey::FlagCategory,
                     lifecycle::GroupKey::Verdict, lifecycle::GroupKey::Source}) {
      try {
        out.aggregates.push_back(lifecycle::aggregate(out.records, metric, key));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyInput) throw;
      }
    }
  }
  return out;
}

std::string render_domain_table(const ingest::DomainTable& table) {
  std::string out;
  for (const auto& r : table.records) {
    ordered_json j;
    j["registrable"] = r.registrable;
    j["public_suffix"] = r.public_suffix;
    j["subdomain"] = r.subdomain;
    j["subdomains"] = r.subdomains;
    ordered_json det = ordered_json::object();
    for (const auto& [source, at] : r.first_detections) det[source] = format_iso8601(at);
    j["first_detections"] = det;
    j["brands"] = r.brands;
    j["url_count"] = r.url_count;
    j["suffix_unlisted"] = r.suffix_unlisted;
    out += j.dump() + "\n";
  }
  return out;
}

std::string render_classification_csv(const std::vector<classifier::ClassificationResult>& results) {
  CsvWriter csv({"registrable", "verdict", "flags", "brand", "evidence"});
  for (const auto& r : results) {
    std::vector<std::string> flags, evidence;
    for (auto f : r.flags) flags.emplace_back(classifier::to_string(f));
    for (const auto& e : r.evidence) evidence.push_back(fmt::format("{}: {}", classifier::to_string(e.flag), e.detail));
    csv.add_row({r.registrable, std::string(classifier::to_string(r.verdict)), join(flags, ";"), r.brand.value_or(""),
                 join(evidence, " | ")});
  }
  return csv.str();
}

std::string render_classification_jsonl(const std::vector<classifier::ClassificationResult>& results) {
  std::string out;
  for (const auto& r : results) {
    ordered_json j;
    j["registrable"] = r.registrable;
    j["verdict"] = classifier::to_string(r.verdict);
    ordered_json flags = ordered_json::array();
    for (auto f : r.flags) flags.push_back(classifier::to_string(f));
    j["flags"] = flags;
    j["brand"] = r.brand ? ordered_json(*r.brand) : ordered_json(nullptr);
    ordered_json ev = ordered_json::array();
    for (const auto& e : r.evidence) ev.push_back({{"flag", classifier::to_string(e.flag)}, {"detail", e.detail}});
    j["evidence"] = ev;
    out += j.dump() + "\n";
  }
  return out;
}

std::string render_summary(const std::vector<SummaryRow>& rows) {
  CsvWriter csv({"category", "count", "percent_of_candidates"});
  for (const auto& r : rows) csv.add_row({r.category, std::to_string(r.count), r.percent ? pct(*r.percent) : ""});
  return csv.str();
}

std::string render_registrars(const std::vector<RegistrarRow>& rows) {
  CsvWriter csv({"rank", "registrar", "count", "share_percent"});
  for (const auto& r : rows) csv.add_row({std::to_string(r.rank), r.registrar, std::to_string(r.count), pct(r.share)});
  return csv.str();
}

std::string render_clusters(const std::vector<classifier::BulkCluster>& clusters) {
  CsvWriter csv({"cluster", "registrar", "window_start", "size", "members"});
  size_t id = 0;
  for (const auto& c : clusters) {
    csv.add_row({std::to_string(++id), c.registrar, format_iso8601(c.window_start), std::to_string(c.members.size()),
                 join(c.members, ";")});
  }
  return csv.str();
}

std::string render_changes(const dnsmon::ChangeReport& report) {
  auto changes = report.changes;
  std::sort(changes.begin(), changes.end(), [](const auto& a, const auto& b) {
    return std::tie(a.registrable, a.vantage_id, a.observed_at, a.rrtype) <
           std::tie(b.registrable, b.vantage_id, b.observed_at, b.rrtype);
  });
  CsvWriter csv({"registrable", "rrtype", "vantage_id", "observed_at", "before", "after"});
  for (const auto& c : changes) {
    csv.add_row({c.registrable, std::string(dnsmon::to_string(c.rrtype)), c.vantage_id, format_iso8601(c.observed_at),
                 join(c.before, ";"), join(c.after, ";")});
  }
  return csv.str();
}

std::string render_monitor_summary(const dnsmon::ChangeReport& report) {
  CsvWriter csv({"domains_observed", "domains_changed", "record_changes", "change_rate_percent"});
  csv.add_row({std::to_string(report.domains_observed.size()), std::to_string(report.domains_changed.size()),
               std::to_string(report.changes.size()), pct(100.0 * report.change_rate())});
  return csv.str();
}

std::string render_ttl_summary(const dnsmon::TtlSummary& ttl) {
  CsvWriter csv({"registrable", "min_ttl", "median_ttl", "mean_ttl", "observations", "fast_flux"});
  for (const auto& [domain, d] : ttl.per_domain) {
    csv.add_row({domain, std::to_string(d.min), fmt::format("{:.0f}", d.median), pct(d.mean),
                 std::to_string(d.observations), d.min < 60 ? "true" : "false"});
  }
  return csv.str();
}

std::string render_ttl_buckets(const dnsmon::TtlSummary& ttl) {
  CsvWriter csv({"bucket", "domains"});
  csv.add_row({"under_60s", std::to_string(ttl.under_60s)});
  csv.add_row({"under_3600s", std::to_string(ttl.under_3600s)});
  csv.add_row({"over_43200s", std::to_string(ttl.over_43200s)});
  csv.add_row({"between_43200s_and_86400s", std::to_string(ttl.between_43200s_and_86400s)});
  csv.add_row({"overall_median_ttl", fmt::format("{:.0f}", ttl.overall_median)});
  csv.add_row({"overall_mean_ttl", pct(ttl.overall_mean)});
  return csv.str();
}

std::string render_divergence(const std::vector<dnsmon::DivergenceReport>& reports) {
  CsvWriter csv({"registrable", "taken_at", "rrtype", "partition"});
  for (const auto& r : reports) {
    for (const auto& t : r.types) {
      std::vector<std::string> groups;
      for (const auto& g : t.partition) groups.push_back("{" + join(g, ",") + "}");
      csv.add_row({r.registrable, format_iso8601(r.taken_at), std::string(dnsmon::to_string(t.rrtype)), join(groups, " ")});
    }
  }
  return csv.str();
}

std::string render_lag_summary(const std::vector<lifecycle::LifecycleRecord>& records, const std::string& reference) {
  std::map<std::string, std::vector<double>> lags;
  for (const auto& r : records) {
    for (const auto& [source, lag] : r.lags) lags[source].push_back(to_days(lag));
  }
  CsvWriter csv({"source", "reference", "count", "mean_days", "median_days"});
  for (auto& [source, values] : lags) {
    std::sort(values.begin(), values.end());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    csv.add_row({source, reference, std::to_string(values.size()), days(mean), days(lifecycle::lower_median(values))});
  }
  return csv.str();
}

CommandResult cmd_ingest(const PipelineConfig& cfg) {
  const auto in = run_ingest(cfg);
  CommandResult result;
  write_outputs(cfg, {{"domains.jsonl", render_domain_table(in.table)}}, result);
  result.messages.push_back(fmt::format("{} domains, {} TLDs", in.table.records.size(), in.tld_count));
  if (in.skipped_entries + in.table.skipped_urls + in.table.ip_hosts > 0) {
    result.messages.push_back(fmt::format("skipped {} malformed feed records, {} unparseable URLs, {} IP-literal hosts",
                                          in.skipped_entries, in.table.skipped_urls, in.table.ip_hosts));
  }
  return result;
}

CommandResult cmd_classify(const PipelineConfig& cfg) {
  const auto in = run_ingest(cfg);
  const auto cl = run_classify(cfg, in.table);
  CommandResult result;
  Outputs out;
  add_classify_outputs(cl, out, result);
  write_outputs(cfg, out, result);
  return result;
}

CommandResult cmd_monitor(const PipelineConfig& cfg, MonitorMode mode, const std::function<bool()>& interrupted) {
  std::vector<std::string> tracked;
  if (cfg.monitor_domains.empty()) {
    for (const auto& r : run_ingest(cfg).table.records) tracked.push_back(r.registrable);
  }
  const auto m = run_monitor(cfg, mode, tracked, interrupted);
  CommandResult result;
  Outputs out;
  add_monitor_outputs(m, out, result);
  result.messages.insert(result.messages.begin(),
                         fmt::format("{} rounds, {} snapshots over {} domains", m.stats.rounds, m.stats.snapshots,
                                     m.domains.size()));
  write_outputs(cfg, out, result);
  result.files.push_back(store_path(cfg));
  return result;
}

CommandResult cmd_lifecycle(const PipelineConfig& cfg) {
  const auto in = run_ingest(cfg);
  const auto cl = run_classify(cfg, in.table);
  const auto lc = run_lifecycle(cfg, in.table, cl.results);
  CommandResult result;
  Outputs out;
  add_lifecycle_outputs(cfg, lc, out, result);
  write_outputs(cfg, out, result);
  return result;
}

CommandResult cmd_report(const PipelineConfig& cfg) {
  const auto in = run_ingest(cfg);
  const auto cl = run_classify(cfg, in.table);
  const auto lc = run_lifecycle(cfg, in.table, cl.results);

  CommandResult result;
  Outputs out;
  out.emplace_back("domains.jsonl", render_domain_table(in.table));
  result.messages.push_back(fmt::format("{} domains, {} TLDs", in.table.records.size(), in.tld_count));
  add_classify_outputs(cl, out, result);
  add_lifecycle_outputs(cfg, lc, out, result);

  std::optional<MonitorOutcome> monitor;
  if (!cfg.scripted_resolver.empty() && !cfg.vantage_config.empty()) {
    std::vector<std::string> tracked;
    for (const auto& r : in.table.records) tracked.push_back(r.registrable);
    monitor = run_monitor(cfg, MonitorMode::Simulate, tracked);
    add_monitor_outputs(*monitor, out, result);
  }
  write_outputs(cfg, out, result);
  if (monitor) result.files.push_back(store_path(cfg));
  return result;
}

}  // namespace dnsabuse::pipeline
