#include "dnsabuse/squatgen.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include "dnsabuse/error.hpp"
#include "dnsabuse/textio.hpp"

namespace dnsabuse::squatgen {

namespace {

constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
constexpr std::string_view kLettersDigits = "abcdefghijklmnopqrstuvwxyz0123456789";

bool is_ldh(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-'; }

std::pair<std::string, std::string> split_brand_domain(std::string_view domain) {
  const size_t dot = domain.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == domain.size()) {
    throw Error(ErrorCode::InvalidBrandDomain, "'" + std::string(domain) + "' is not a registrable domain");
  }
  std::string label(domain.substr(0, dot));
  std::string suffix(domain.substr(dot + 1));
  if (!is_valid_label(label)) {
    throw Error(ErrorCode::InvalidBrandDomain, "invalid label in '" + std::string(domain) + "'");
  }
  size_t start = 0;
  while (start <= suffix.size()) {
    size_t end = suffix.find('.', start);
    if (end == std::string::npos) end = suffix.size();
    if (!is_valid_label(std::string_view(suffix).substr(start, end - start))) {
      throw Error(ErrorCode::InvalidBrandDomain, "invalid suffix in '" + std::string(domain) + "'");
    }
    start = end + 1;
  }
  return {std::move(label), std::move(suffix)};
}

const std::vector<std::vector<std::string>> kHomoglyphGroups = {
    {"o", "0"}, {"l", "1", "i"}, {"e", "3"}, {"a", "4"}, {"s", "5"}, {"b", "8"}, {"g", "9"}, {"m", "rn"},
};

}  // namespace

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::Addition: return "addition";
    case Technique::Omission: return "omission";
    case Technique::Repetition: return "repetition";
    case Technique::Bitflip: return "bitflip";
    case Technique::Homoglyph: return "homoglyph";
    case Technique::Hyphenation: return "hyphenation";
    case Technique::PrefixInsertion: return "prefix_insertion";
    case Technique::TldSwap: return "tld_swap";
  }
  return "unknown";
}

std::optional<Technique> technique_from_string(std::string_view s) {
  for (auto t : kAllTechniques) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string Brand::label() const { return canonical_domain.substr(0, canonical_domain.find('.')); }

std::string Brand::suffix() const {
  const size_t dot = canonical_domain.find('.');
  return dot == std::string::npos ? std::string() : canonical_domain.substr(dot + 1);
}

bool is_valid_label(std::string_view label) {
  if (label.empty() || label.size() > 63) return false;
  if (label.front() == '-' || label.back() == '-') return false;
  return std::all_of(label.begin(), label.end(), is_ldh);
}

const std::vector<std::pair<std::string, std::string>>& homoglyph_table() {
  static const auto table = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& group : kHomoglyphGroups) {
      for (const auto& from : group) {
        for (const auto& to : group) {
          if (from != to) out.emplace_back(from, to);
        }
      }
    }
    return out;
  }();
  return table;
}

std::set<SquatCandidate> generate(std::string_view brand_domain, std::string_view brand_id) {
  const auto [label, suffix] = split_brand_domain(to_lower_ascii(brand_domain));
  std::set<SquatCandidate> out;
  const std::string id(brand_id);
  auto emit = [&](std::string cand, Technique t) {
    if (cand != label && is_valid_label(cand)) out.insert({std::move(cand), t, id});
  };

  for (char c : kLettersDigits) emit(label + c, Technique::Addition);

  for (size_t i = 0; i < label.size(); ++i) {
    emit(label.substr(0, i) + label.substr(i + 1), Technique::Omission);
    emit(label.substr(0, i + 1) + label.substr(i), Technique::Repetition);

    for (int bit = 0; bit < 5; ++bit) {
      const char flipped = static_cast<char>(static_cast<unsigned char>(label[i]) ^ (1u << bit));
      if (!is_ldh(flipped)) continue;
      std::string cand = label;
      cand[i] = flipped;
      emit(std::move(cand), Technique::Bitflip);
    }

    if (i > 0) emit(label.substr(0, i) + "-" + label.substr(i), Technique::Hyphenation);
  }

  for (const auto& [from, to] : homoglyph_table()) {
    for (size_t pos = label.find(from); pos != std::string::npos; pos = label.find(from, pos + 1)) {
      emit(label.substr(0, pos) + to + label.substr(pos + from.size()), Technique::Homoglyph);
    }
  }

  for (char c : kLetters) emit(std::string(1, c) + label, Technique::PrefixInsertion);

  out.insert({label, Technique::TldSwap, id});
  return out;
}

std::set<SquatCandidate> generate(std::string_view brand_domain) {
  const auto lowered = to_lower_ascii(brand_domain);
  return generate(lowered, split_brand_domain(lowered).first);
}

BrandCatalog parse_brand_catalog(std::string_view text, size_t brand_top_n, size_t squat_top_n) {
  if (squat_top_n > brand_top_n) {
    throw Error(ErrorCode::InvalidArgument, "squat_top_n must not exceed brand_top_n");
  }
  BrandCatalog catalog;
  catalog.brand_top_n = brand_top_n;
  catalog.squat_top_n = squat_top_n;

  const auto lines = split_lines(text);
  bool header = true;
  for (const auto& line : lines) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = parse_csv_line(line);
    if (f.size() != 3) throw Error(ErrorCode::InvalidArgument, "brand catalog row: '" + line + "'");
    Brand b;
    const auto rank_text = trim(f[0]);
    const auto [p, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), b.rank);
    if (ec != std::errc() || p != rank_text.data() + rank_text.size()) {
      throw Error(ErrorCode::InvalidArgument, "brand catalog rank: '" + std::string(rank_text) + "'");
    }
    b.brand_id = to_lower_ascii(trim(f[1]));
    b.canonical_domain = to_lower_ascii(trim(f[2]));
    if (b.brand_id.empty()) throw Error(ErrorCode::InvalidArgument, "empty brand id");
    split_brand_domain(b.canonical_domain);
    catalog.brands.push_back(std::move(b));
  }
  if (catalog.brands.empty()) throw Error(ErrorCode::EmptyCatalog, "brand catalog has no rows");

  std::sort(catalog.brands.begin(), catalog.brands.end(),
            [](const Brand& a, const Brand& b) { return a.rank < b.rank; });
  std::unordered_set<std::string> ids;
  for (size_t i = 0; i < catalog.brands.size(); ++i) {
    if (i > 0 && catalog.brands[i].rank == catalog.brands[i - 1].rank) {
      throw Error(ErrorCode::InvalidArgument, "duplicate brand rank " + std::to_string(catalog.brands[i].rank));
    }
    if (!ids.insert(catalog.brands[i].brand_id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate brand id " + catalog.brands[i].brand_id);
    }
  }
  return catalog;
}

BrandCatalog load_brand_catalog(const std::filesystem::path& path, size_t brand_top_n, size_t squat_top_n) {
  return parse_brand_catalog(read_file(path), brand_top_n, squat_top_n);
}

SquatIndex SquatIndex::build(const BrandCatalog& catalog) {
  SquatIndex index;
  const size_t n = std::min(catalog.squat_top_n, catalog.brands.size());
  for (size_t i = 0; i < n; ++i) {
    const auto& brand = catalog.brands[i];
    index.brands_.emplace(brand.brand_id, brand);
    index.canonical_domains_.insert(brand.canonical_domain);
    for (auto& cand : generate(brand.canonical_domain, brand.brand_id)) {
      if (cand.technique == Technique::TldSwap) {
        index.tld_swap_labels_[cand.label].push_back(cand.brand_id);
      } else {
        index.by_label_[cand.label].push_back({cand.brand_id, cand.technique});
      }
    }
  }
  for (auto& [label, attrs] : index.by_label_) {
    std::sort(attrs.begin(), attrs.end());
    attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
  }
  return index;
}

const std::vector<Attribution>& SquatIndex::lookup(std::string_view label) const {
  static const std::vector<Attribution> kNone;
  const auto it = by_label_.find(std::string(label));
  return it == by_label_.end() ? kNone : it->second;
}

std::optional<SquatHit> SquatIndex::match(std::string_view label, std::string_view public_suffix) const {
  const std::string l(label);
  // A brand's own canonical domain is never a squat of anything.
  if (canonical_domains_.count(l + "." + std::string(public_suffix))) return std::nullopt;

  std::vector<Attribution> hits = lookup(l);
  if (const auto it = tld_swap_labels_.find(l); it != tld_swap_labels_.end()) {
    for (const auto& id : it->second) {
      if (brands_.at(id).suffix() != public_suffix) hits.push_back({id, Technique::TldSwap});
    }
  }
  if (hits.empty()) return std::nullopt;

  const auto best = std::min_element(hits.begin(), hits.end(), [&](const Attribution& a, const Attribution& b) {
    const int ra = brands_.at(a.brand_id).rank;
    const int rb = brands_.at(b.brand_id).rank;
    return ra != rb ? ra < rb : a.technique < b.technique;
  });
  return SquatHit{best->brand_id, best->technique};
}

std::optional<SquatHit> SquatIndex::match(const ingest::DomainRecord& record) const {
  return match(record.second_level_label(), record.public_suffix);
}

}  // namespace dnsabuse::squatgen
