#include "dnsabuse/classifier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>

#include "dnsabuse/error.hpp"
#include "dnsabuse/textio.hpp"

namespace dnsabuse::classifier {

namespace {

std::optional<int> parse_int(std::string_view s) {
  s = trim(s);
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool label_mentions(std::string_view label, const std::string& brand) {
  if (brand.size() >= 4) return label.find(brand) != std::string_view::npos;
  if (label == brand) return true;
  for (auto token : split_on(label, '-')) {
    if (token == brand) return true;
  }
  return false;
}

struct DisjointSets {
  explicit DisjointSets(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), size_t{0}); }
  size_t find(size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<size_t> parent;
};

}  // namespace

Allowlist parse_allowlist(std::string_view text) {
  Allowlist allow;
  int position = 0;
  for (const auto& raw : split_lines(text)) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    ++position;
    int rank = position;
    std::string domain;
    if (line.find(',') != std::string_view::npos) {
      const auto fields = parse_csv_line(line);
      const auto r = parse_int(fields[0]);
      if (!r) continue;  // header row
      rank = *r;
      domain = fields.size() > 1 ? to_lower_ascii(trim(fields[1])) : std::string();
    } else {
      domain = to_lower_ascii(line);
    }
    if (domain.empty()) continue;
    auto [it, inserted] = allow.ranks.emplace(domain, rank);
    if (!inserted) it->second = std::min(it->second, rank);
    allow.domains.insert(std::move(domain));
  }
  if (allow.domains.empty()) throw Error(ErrorCode::EmptyAllowlist, "allowlist has no domains");
  return allow;
}

Allowlist load_allowlist(const std::filesystem::path& path) { return parse_allowlist(read_file(path)); }

Prefilter prefilter(const ingest::DomainRecord& record, const Allowlist& allow) {
  if (!allow.contains(record.registrable)) return Prefilter::Candidate;
  return record.has_subdomain() ? Prefilter::PlatformSubdomainAbuse : Prefilter::Allowlisted;
}

std::string_view to_string(BrandLocation loc) {
  return loc == BrandLocation::RegistrableLabel ? "registrable_label" : "subdomain";
}

std::optional<BrandHit> match_brand(const ingest::DomainRecord& record, const squatgen::BrandCatalog& catalog) {
  const auto label = record.second_level_label();
  std::vector<std::string_view> sub_labels;
  for (const auto& sub : record.subdomains) {
    for (auto l : split_on(sub, '.')) sub_labels.push_back(l);
  }

  const size_t n = std::min(catalog.brand_top_n, catalog.brands.size());
  for (size_t i = 0; i < n; ++i) {
    const auto& id = catalog.brands[i].brand_id;
    if (label_mentions(label, id)) return BrandHit{id, BrandLocation::RegistrableLabel};
    for (auto l : sub_labels) {
      if (label_mentions(l, id)) return BrandHit{id, BrandLocation::Subdomain};
    }
  }
  return std::nullopt;
}

WordList::WordList(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    max_len_ = std::max(max_len_, w.size());
    words_.insert(w);
  }
}

bool WordList::contains_word(std::string_view letters, size_t min_len) const {
  const size_t lo = std::max<size_t>(min_len, 1);
  for (size_t start = 0; start < letters.size(); ++start) {
    const size_t hi = std::min(max_len_, letters.size() - start);
    for (size_t len = lo; len <= hi; ++len) {
      if (words_.count(std::string(letters.substr(start, len)))) return true;
    }
  }
  return false;
}

WordList parse_word_list(std::string_view text) {
  std::vector<std::string> words;
  for (const auto& raw : split_lines(text)) {
    auto w = to_lower_ascii(trim(raw));
    if (w.empty() || !std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) continue;
    words.push_back(std::move(w));
  }
  return WordList(words);
}

WordList load_word_list(const std::filesystem::path& path) { return parse_word_list(read_file(path)); }

bool is_random_looking(std::string_view label, const WordList& words, size_t min_word_len) {
  std::string letters;
  for (char c : label) {
    if (c != '-' && !(c >= '0' && c <= '9')) letters += c;
  }
  return !words.contains_word(letters, min_word_len);
}

bool is_random_looking(const ingest::DomainRecord& record, const WordList& words, size_t min_word_len) {
  return is_random_looking(record.second_level_label(), words, min_word_len);
}

size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), size_t{0});
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diag = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<RegistrationLogEntry> parse_registration_log(std::string_view text) {
  std::vector<RegistrationLogEntry> log;
  bool header = true;
  size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = parse_csv_line(line);
    const auto at = f.size() == 3 ? parse_iso8601(trim(f[1])) : std::nullopt;
    if (!at || trim(f[0]).empty() || trim(f[2]).empty()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("registration log line {}: '{}'", line_no, line));
    }
    log.push_back({to_lower_ascii(trim(f[0])), *at, std::string(trim(f[2]))});
  }
  return log;
}

std::vector<RegistrationLogEntry> load_registration_log(const std::filesystem::path& path) {
  return parse_registration_log(read_file(path));
}

std::vector<BulkCluster> cluster_bulk(const std::vector<RegistrationLogEntry>& log, const BulkParams& params) {
  if (params.window <= Seconds::zero()) throw Error(ErrorCode::InvalidArgument, "bulk window must be positive");

  std::map<std::pair<std::string, Timestamp>, std::set<std::string>> buckets;
  for (const auto& e : log) {
    const auto since_epoch = e.registered_at.time_since_epoch();
    auto index = since_epoch / params.window;
    if (since_epoch % params.window < Seconds::zero()) --index;
    const Timestamp start{params.window * index};
    buckets[{e.registrar, start}].insert(e.registrable);
  }

  std::vector<BulkCluster> clusters;
  for (const auto& [key, domains] : buckets) {
    if (domains.size() < params.min_cluster_size) continue;
    const std::vector<std::string> members(domains.begin(), domains.end());
    std::vector<std::string> labels;
    labels.reserve(members.size());
    for (const auto& m : members) labels.push_back(m.substr(0, m.find('.')));

    DisjointSets sets(members.size());
    for (size_t i = 0; i < members.size(); ++i) {
      for (size_t j = i + 1; j < members.size(); ++j) {
        const size_t len_gap = labels[i].size() > labels[j].size() ? labels[i].size() - labels[j].size()
                                                                    : labels[j].size() - labels[i].size();
        if (len_gap > params.max_edit_distance) continue;
        if (levenshtein(labels[i], labels[j]) <= params.max_edit_distance) sets.unite(i, j);
      }
    }

    std::map<size_t, std::set<std::string>> components;
    for (size_t i = 0; i < members.size(); ++i) components[sets.find(i)].insert(members[i]);
    std::vector<BulkCluster> found;
    for (auto& [root, comp] : components) {
      if (comp.size() >= params.min_cluster_size) found.push_back({std::move(comp), key.first, key.second});
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.members < b.members; });
    for (auto& c : found) clusters.push_back(std::move(c));
  }
  return clusters;
}

std::string_view to_string(Flag f) {
  switch (f) {
    case Flag::BrandInDomain: return "brand_in_domain";
    case Flag::Squatted: return "squatted";
    case Flag::RandomLooking: return "random_looking";
    case Flag::BulkRegistered: return "bulk_registered";
  }
  return "unknown";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::MaliciousRegistration: return "malicious_registration";
    case Verdict::Compromised: return "compromised";
    case Verdict::PlatformSubdomainAbuse: return "platform_subdomain_abuse";
    case Verdict::Allowlisted: return "allowlisted";
  }
  return "unknown";
}

BulkMembership bulk_membership(const std::vector<BulkCluster>& clusters) {
  BulkMembership out;
  for (const auto& c : clusters) {
    const auto label = fmt::format("registrar={} window={} size={}", c.registrar, format_iso8601(c.window_start),
                                   c.members.size());
    for (const auto& m : c.members) out.emplace(m, label);
  }
  return out;
}

ClassificationResult classify(const ingest::DomainRecord& record, const ClassifyContext& ctx) {
  ClassificationResult result;
  result.registrable = record.registrable;

  switch (prefilter(record, ctx.allow)) {
    case Prefilter::Allowlisted:
      result.verdict = Verdict::Allowlisted;
      return result;
    case Prefilter::PlatformSubdomainAbuse:
      result.verdict = Verdict::PlatformSubdomainAbuse;
      return result;
    case Prefilter::Candidate:
      break;
  }

  const auto brand = match_brand(record, ctx.catalog);
  if (brand) {
    result.flags.insert(Flag::BrandInDomain);
    result.evidence.push_back(
        {Flag::BrandInDomain, fmt::format("brand={} location={}", brand->brand_id, to_string(brand->location))});
    result.brand = brand->brand_id;
  }

  const auto squat = ctx.squat_index.match(record);
  if (squat) {
    result.flags.insert(Flag::Squatted);
    result.evidence.push_back(
        {Flag::Squatted, fmt::format("brand={} technique={}", squat->brand_id, squatgen::to_string(squat->technique))});
    if (!result.brand) result.brand = squat->brand_id;
  }

  if (!brand && !squat && is_random_looking(record, ctx.words, ctx.min_word_len)) {
    result.flags.insert(Flag::RandomLooking);
    result.evidence.push_back({Flag::RandomLooking, fmt::format("label={}", record.second_level_label())});
  }

  if (const auto it = ctx.bulk.find(record.registrable); it != ctx.bulk.end()) {
    result.flags.insert(Flag::BulkRegistered);
    result.evidence.push_back({Flag::BulkRegistered, it->second});
  }

  result.verdict = result.flags.empty() ? Verdict::Compromised : Verdict::MaliciousRegistration;
  return result;
}

}  // namespace dnsabuse::classifier
