#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dnsabuse/classifier.hpp"
#include "dnsabuse/dnsmon.hpp"
#include "dnsabuse/error.hpp"
#include "dnsabuse/ingest.hpp"
#include "dnsabuse/lifecycle.hpp"

namespace dnsabuse::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  std::vector<fs::path> feeds;
  fs::path allowlist;
  fs::path brand_catalog;
  fs::path word_list;
  fs::path registration_log;
  fs::path timestamp_sources;
  fs::path suffix_rules;
  fs::path vantage_config;
  fs::path snapshot_store;  // default: <out_dir>/snapshots.jsonl
  fs::path scripted_resolver;
  fs::path monitor_domains;  // one domain per line; default: every ingested domain

  double bulk_window_hours = 24;
  size_t max_edit_distance = 2;
  size_t min_cluster_size = 3;
  size_t min_word_len = 4;
  std::string reference_source = "apwg";
  bool include_private_suffixes = false;
  size_t brand_top_n = 1000;
  size_t squat_top_n = 200;

  long monitor_interval_minutes = 30;
  long monitor_duration_minutes = 90;  // live mode: 0 runs until interrupted
  std::string monitor_start = "2024-01-01T00:00:00Z";  // simulated clock origin
  size_t concurrency = 64;
  long backoff_base_ms = 500;
  long backoff_max_ms = 8000;
  long query_timeout_ms = 2000;

  fs::path out_dir = ".";
};

/// Every settable key, in snake_case. Each is also accepted in kebab-case.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual form; relative paths resolve against
/// `base_dir`. "feeds" appends. Throws Error(InvalidArgument).
void set_config_value(PipelineConfig& cfg, std::string_view key, const std::string& value, const fs::path& base_dir);

/// JSON object of config keys; "feeds" may be a string or an array.
void apply_config_json(PipelineConfig& cfg, std::string_view json_text, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

/// Exit status for a failed command: 2 config/input error, 3 empty output,
/// 4 snapshot store failure.
int exit_code_for(const Error& e);

// ---- stages (pure computation over the configured inputs) -----------------

struct IngestOutcome {
  ingest::DomainTable table;
  size_t feed_entries = 0;
  size_t skipped_entries = 0;
  size_t tld_count = 0;
};

IngestOutcome run_ingest(const PipelineConfig& cfg);

struct SummaryRow {
  std::string category;
  size_t count = 0;
  std::optional<double> percent;  // of candidates
};

struct RegistrarRow {
  size_t rank = 0;
  std::string registrar;
  size_t count = 0;
  double share = 0;  // percent of bulk-flagged domains
};

struct ClassifyOutcome {
  std::vector<classifier::ClassificationResult> results;  // registrable order
  std::vector<classifier::BulkCluster> clusters;
  std::vector<SummaryRow> summary;
  std::vector<RegistrarRow> registrars;
  size_t candidates = 0;
};

ClassifyOutcome run_classify(const PipelineConfig& cfg, const ingest::DomainTable& table);

/// Flag counts plus the malicious-registration union and the compromised
/// remainder; flags overlap, so flag percentages can sum past 100.
std::vector<SummaryRow> classification_summary(const std::vector<classifier::ClassificationResult>& results);

std::vector<RegistrarRow> registrar_summary(const std::vector<classifier::ClassificationResult>& results,
                                            const std::vector<classifier::BulkCluster>& clusters);

enum class MonitorMode { Simulate, Live };

struct MonitorOutcome {
  dnsmon::ScheduleStats stats;
  std::vector<dnsmon::DnsSnapshot> snapshots;
  dnsmon::ChangeReport changes;
  std::optional<dnsmon::TtlSummary> ttl;
  std::vector<dnsmon::DivergenceReport> divergence;
  std::vector<std::string> domains;
};

/// Simulate mode replays the scripted resolver on a simulated clock into a
/// fresh store; live mode queries real resolvers and appends to the store.
/// `interrupted` is polled between ticks in live mode.
MonitorOutcome run_monitor(const PipelineConfig& cfg, MonitorMode mode, const std::vector<std::string>& tracked,
                           const std::function<bool()>& interrupted = {});

struct LifecycleOutcome {
  std::vector<lifecycle::LifecycleRecord> records;
  std::vector<lifecycle::AggregateReport> aggregates;
  std::set<std::string> without_evidence;
};

LifecycleOutcome run_lifecycle(const PipelineConfig& cfg, const ingest::DomainTable& table,
                               const std::vector<classifier::ClassificationResult>& results);

// ---- renderers ------------------------------------------------------------

std::string render_domain_table(const ingest::DomainTable& table);
std::string render_classification_csv(const std::vector<classifier::ClassificationResult>& results);
std::string render_classification_jsonl(const std::vector<classifier::ClassificationResult>& results);
std::string render_summary(const std::vector<SummaryRow>& rows);
std::string render_registrars(const std::vector<RegistrarRow>& rows);
std::string render_clusters(const std::vector<classifier::BulkCluster>& clusters);
std::string render_changes(const dnsmon::ChangeReport& report);
std::string render_monitor_summary(const dnsmon::ChangeReport& report);
std::string render_ttl_summary(const dnsmon::TtlSummary& ttl);
std::string render_ttl_buckets(const dnsmon::TtlSummary& ttl);
std::string render_divergence(const std::vector<dnsmon::DivergenceReport>& reports);
std::string render_lag_summary(const std::vector<lifecycle::LifecycleRecord>& records, const std::string& reference);

// ---- commands (compute, write outputs atomically, report) -----------------

struct CommandResult {
  std::vector<std::string> messages;
  std::vector<fs::path> files;
};

CommandResult cmd_ingest(const PipelineConfig& cfg);
CommandResult cmd_classify(const PipelineConfig& cfg);
CommandResult cmd_monitor(const PipelineConfig& cfg, MonitorMode mode, const std::function<bool()>& interrupted = {});
CommandResult cmd_lifecycle(const PipelineConfig& cfg);
/// ingest + classify + lifecycle, plus a simulated monitor run when a
/// scripted resolver and vantage config are configured.
CommandResult cmd_report(const PipelineConfig& cfg);

}  // namespace dnsabuse::pipeline
