#include "dnsabuse/ingest.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>

#include "dnsabuse/error.hpp"
#include "dnsabuse/punycode.hpp"
#include "dnsabuse/textio.hpp"

namespace dnsabuse::ingest {

namespace {

constexpr size_t kMaxLabel = 63;
constexpr size_t kMaxHost = 253;

std::vector<std::string_view> split_dots(std::string_view host) {
  std::vector<std::string_view> labels;
  size_t start = 0;
  while (true) {
    const size_t dot = host.find('.', start);
    if (dot == std::string_view::npos) {
      labels.push_back(host.substr(start));
      break;
    }
    labels.push_back(host.substr(start, dot - start));
    start = dot + 1;
  }
  return labels;
}

std::string join_labels(const std::vector<std::string_view>& labels, size_t from, size_t to) {
  std::string out;
  for (size_t i = from; i < to; ++i) {
    if (i > from) out += '.';
    out += labels[i];
  }
  return out;
}

bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
  });
}

std::optional<std::string> normalize_brand(const std::optional<std::string>& brand) {
  if (!brand) return std::nullopt;
  auto b = to_lower_ascii(trim(*brand));
  if (b.empty()) return std::nullopt;
  return b;
}

}  // namespace

std::string DomainRecord::second_level_label() const {
  const size_t dot = registrable.find('.');
  return registrable.substr(0, dot);
}

std::string normalize_label(std::string_view label) {
  if (label.empty()) throw Error(ErrorCode::InvalidLabel, "empty label");
  // Only ASCII letters are case-folded; non-ASCII code points are encoded as given.
  auto ascii = punycode::to_ascii_label(to_lower_ascii(label));
  if (!ascii) throw Error(ErrorCode::InvalidLabel, "cannot encode label '" + std::string(label) + "'");
  if (ascii->size() > kMaxLabel) throw Error(ErrorCode::InvalidLabel, "label longer than 63: " + *ascii);
  for (char c : *ascii) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) {
      throw Error(ErrorCode::InvalidLabel, "illegal character in label '" + *ascii + "'");
    }
  }
  return *ascii;
}

ParsedUrl parse_url(std::string_view raw) {
  std::string_view rest = trim(raw);
  if (rest.empty()) throw Error(ErrorCode::MalformedUrl, "empty url");

  ParsedUrl out;
  out.scheme = "http";
  if (const size_t sep = rest.find("://"); sep != std::string_view::npos && valid_scheme(rest.substr(0, sep))) {
    out.scheme = to_lower_ascii(rest.substr(0, sep));
    rest.remove_prefix(sep + 3);
  } else if (rest.substr(0, 2) == "//") {
    rest.remove_prefix(2);
  }

  const size_t auth_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, auth_end);
  if (auth_end != std::string_view::npos) {
    std::string_view tail = rest.substr(auth_end);
    const size_t path_end = tail.find_first_of("?#");
    out.path = std::string(tail.substr(0, path_end));
  }

  if (const size_t at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  if (!authority.empty() && authority.front() == '[') {
    throw Error(ErrorCode::InvalidLabel, "ip-literal host: " + std::string(authority));
  }
  if (const size_t colon = authority.rfind(':'); colon != std::string_view::npos) {
    const auto port = authority.substr(colon + 1);
    if (std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      authority = authority.substr(0, colon);
    }
  }
  if (!authority.empty() && authority.back() == '.') authority.remove_suffix(1);
  if (authority.empty()) throw Error(ErrorCode::MalformedUrl, "no host in '" + std::string(raw) + "'");

  std::string host;
  for (auto label : split_dots(authority)) {
    if (!host.empty()) host += '.';
    host += normalize_label(label);
  }
  if (host.size() > kMaxHost) throw Error(ErrorCode::InvalidLabel, "host longer than 253 characters");
  out.host = std::move(host);
  return out;
}

SuffixRules parse_suffix_rules(std::string_view text, bool include_private) {
  SuffixRules rules;
  std::vector<std::string> exceptions;
  for (const auto& line : split_lines(text)) {
    std::string_view l = trim(line);
    if (l.find("===BEGIN PRIVATE DOMAINS===") != std::string_view::npos && !include_private) break;
    if (l.empty() || l.substr(0, 2) == "//") continue;
    l = l.substr(0, l.find_first_of(" \t"));

    enum { Exact, Wild, Except } kind = Exact;
    if (l.substr(0, 2) == "*.") {
      kind = Wild;
      l.remove_prefix(2);
    } else if (l.front() == '!') {
      kind = Except;
      l.remove_prefix(1);
    }

    std::string normalized;
    try {
      for (auto label : split_dots(l)) {
        if (!normalized.empty()) normalized += '.';
        normalized += normalize_label(label);
      }
    } catch (const Error&) {
      continue;  // not a usable rule
    }

    switch (kind) {
      case Exact: rules.exact.insert(std::move(normalized)); break;
      case Wild: rules.wildcard.insert(std::move(normalized)); break;
      case Except: exceptions.push_back(std::move(normalized)); break;
    }
  }
  for (auto& e : exceptions) {
    const size_t dot = e.find('.');
    if (dot != std::string::npos && rules.wildcard.count(e.substr(dot + 1))) {
      rules.exception.insert(std::move(e));
    }
  }
  if (rules.size() == 0) throw Error(ErrorCode::EmptyRuleSet, "no suffix rules parsed");
  return rules;
}

SuffixRules load_suffix_rules(const std::filesystem::path& path, bool include_private) {
  return parse_suffix_rules(read_file(path), include_private);
}

SplitHost split_registrable(std::string_view host, const SuffixRules& rules) {
  const auto labels = split_dots(host);
  const size_t n = labels.size();

  // Index of the first label of the public suffix.
  std::optional<size_t> suffix_start;
  for (size_t i = 0; i < n && !suffix_start; ++i) {
    if (rules.exception.count(join_labels(labels, i, n))) suffix_start = i + 1;
  }
  for (size_t i = 0; i < n && !suffix_start; ++i) {
    if (rules.exact.count(join_labels(labels, i, n))) suffix_start = i;
    else if (i + 1 < n && rules.wildcard.count(join_labels(labels, i + 1, n))) suffix_start = i;
  }

  SplitHost out;
  if (!suffix_start) {
    suffix_start = n - 1;
    out.suffix_unlisted = true;
  }
  if (*suffix_start == 0) throw Error(ErrorCode::HostIsSuffix, std::string(host));

  const size_t s = *suffix_start;
  out.public_suffix = join_labels(labels, s, n);
  out.registrable = join_labels(labels, s - 1, n);
  out.subdomain = join_labels(labels, 0, s - 1);
  return out;
}

FeedFormat feed_format_for(const std::filesystem::path& path) {
  return to_lower_ascii(path.extension().string()) == ".json" ? FeedFormat::Json : FeedFormat::Lines;
}

FeedLoad parse_feed(std::string_view text, FeedFormat format) {
  FeedLoad out;
  size_t records = 0;

  if (format == FeedFormat::Lines) {
    for (const auto& line : split_lines(text)) {
      if (trim(line).empty() || line.front() == '#') continue;
      ++records;
      std::vector<std::string> fields;
      size_t start = 0;
      while (true) {
        const size_t tab = line.find('\t', start);
        fields.emplace_back(trim(std::string_view(line).substr(start, tab - start)));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      const auto ts = fields.size() >= 3 ? parse_iso8601(fields[0]) : std::nullopt;
      if (fields.size() < 3 || fields.size() > 4 || !ts || fields[1].empty() || fields[2].empty()) {
        ++out.skipped;
        continue;
      }
      FeedEntry e{fields[1], *ts, fields[2], std::nullopt};
      if (fields.size() == 4) e.brand = normalize_brand(fields[3]);
      out.entries.push_back(std::move(e));
    }
  } else {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedFeed, e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::MalformedFeed, "json feed must be an array");
    for (const auto& item : doc) {
      ++records;
      const auto str = [&](const char* key) -> std::optional<std::string> {
        if (!item.is_object() || !item.contains(key) || !item[key].is_string()) return std::nullopt;
        return item[key].get<std::string>();
      };
      const auto url = str("url");
      const auto at = str("detected_at");
      const auto source = str("source");
      const auto ts = at ? parse_iso8601(*at) : std::nullopt;
      if (!url || url->empty() || !ts || !source || source->empty()) {
        ++out.skipped;
        continue;
      }
      out.entries.push_back(FeedEntry{*url, *ts, *source, normalize_brand(str("brand"))});
    }
  }

  if (records > 0 && out.entries.empty()) {
    throw Error(ErrorCode::AllRecordsMalformed, std::to_string(records) + " records, none usable");
  }
  return out;
}

FeedLoad load_feed(const std::filesystem::path& path, FeedFormat format) {
  return parse_feed(read_file(path), format);
}

bool is_ipv4_literal(std::string_view host) {
  const auto labels = split_dots(host);
  if (labels.size() != 4) return false;
  return std::all_of(labels.begin(), labels.end(), [](std::string_view l) {
    return !l.empty() && l.size() <= 3 &&
           std::all_of(l.begin(), l.end(), [](char c) { return c >= '0' && c <= '9'; });
  });
}

DomainTable build_domain_table(const std::vector<FeedEntry>& entries, const SuffixRules& rules) {
  struct Accum {
    DomainRecord record;
    std::optional<std::pair<Timestamp, std::string>> first_sub;
  };
  std::map<std::string, Accum> merged;
  DomainTable table;

  for (const auto& e : entries) {
    SplitHost split;
    try {
      const auto parsed = parse_url(e.url);
      if (is_ipv4_literal(parsed.host)) {
        ++table.ip_hosts;
        continue;
      }
      split = split_registrable(parsed.host, rules);
    } catch (const Error&) {
      ++table.skipped_urls;
      continue;
    }

    auto& acc = merged[split.registrable];
    auto& r = acc.record;
    if (r.registrable.empty()) {
      r.registrable = split.registrable;
      r.public_suffix = split.public_suffix;
      r.suffix_unlisted = split.suffix_unlisted;
    }
    ++r.url_count;
    auto [it, inserted] = r.first_detections.emplace(e.source, e.detected_at);
    if (!inserted && e.detected_at < it->second) it->second = e.detected_at;
    if (e.brand) r.brands.insert(*e.brand);
    if (!split.subdomain.empty()) {
      r.subdomains.insert(split.subdomain);
      auto candidate = std::make_pair(e.detected_at, split.subdomain);
      if (!acc.first_sub || candidate < *acc.first_sub) acc.first_sub = std::move(candidate);
    }
  }

  table.records.reserve(merged.size());
  for (auto& [key, acc] : merged) {
    if (acc.first_sub) acc.record.subdomain = acc.first_sub->second;
    table.records.push_back(std::move(acc.record));
  }
  return table;
}

}  // namespace dnsabuse::ingest
