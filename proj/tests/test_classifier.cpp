#include <random>

#include "doctest.h"
#include "dnsabuse/classifier.hpp"
#include "dnsabuse/error.hpp"
#include "dnsabuse/textio.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace dnsabuse;
using namespace dnsabuse::classifier;
using testing::ts;

namespace {

ingest::DomainRecord record(const std::string& host, const ingest::SuffixRules& rules) {
  const auto s = ingest::split_registrable(host, rules);
  ingest::DomainRecord r;
  r.registrable = s.registrable;
  r.public_suffix = s.public_suffix;
  r.subdomain = s.subdomain;
  if (!s.subdomain.empty()) r.subdomains.insert(s.subdomain);
  r.url_count = 1;
  return r;
}

const ingest::SuffixRules& rules() {
  static const auto r = ingest::parse_suffix_rules("com\nnet\ntop\norg\nxyz\nru\n");
  return r;
}

const WordList& words() {
  static const auto w = load_word_list(testing::fixture("words.txt"));
  return w;
}

squatgen::BrandCatalog catalog() {
  return squatgen::parse_brand_catalog(
      "rank,brand_id,canonical_domain\n1,facebook,facebook.com\n2,usps,usps.com\n3,dhl,dhl.com\n4,ozon,ozon.ru\n");
}

}  // namespace

TEST_CASE("allowlist loading") {
  auto a = parse_allowlist("1,google.com\n2,blogspot.com\n");
  CHECK(a.domains.size() == 2);
  CHECK(a.ranks.at("blogspot.com") == 2);

  auto dup = parse_allowlist("rank,domain\n9,Example.com\n5,example.com\n");
  CHECK(dup.domains.size() == 1);
  CHECK(dup.ranks.at("example.com") == 5);

  auto plain = parse_allowlist("google.com\nyoutube.com\n");
  CHECK(plain.ranks.at("youtube.com") == 2);

  CHECK_THROWS_AS(parse_allowlist("\n\n"), Error);
  try {
    load_allowlist("/nonexistent/tranco.csv");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }
}

TEST_CASE("prefilter separates allowlisted and platform subdomains") {
  auto allow = parse_allowlist("1,facebook.com\n2,blogspot.com\n");
  CHECK(prefilter(record("usps-tracking-service.blogspot.com", rules()), allow) == Prefilter::PlatformSubdomainAbuse);
  CHECK(prefilter(record("facebook.com", rules()), allow) == Prefilter::Allowlisted);
  CHECK(prefilter(record("faceb0ok.com", rules()), allow) == Prefilter::Candidate);
}

TEST_CASE("match_brand locations and short-brand token rule") {
  const auto cat = catalog();
  CHECK(match_brand(record("usps-security.example.com", rules()), cat) == BrandHit{"usps", BrandLocation::Subdomain});
  CHECK(match_brand(record("www.usps-security-login.com", rules()), cat) ==
        BrandHit{"usps", BrandLocation::RegistrableLabel});
  CHECK_FALSE(match_brand(record("example.com", rules()), cat).has_value());

  CHECK(match_brand(record("dhl-parcel.top", rules()), cat) == BrandHit{"dhl", BrandLocation::RegistrableLabel});
  CHECK(match_brand(record("dhl.example.net", rules()), cat) == BrandHit{"dhl", BrandLocation::Subdomain});
  CHECK_FALSE(match_brand(record("adhlib.com", rules()), cat).has_value());
  CHECK(match_brand(record("myozonshop.xyz", rules()), cat) == BrandHit{"ozon", BrandLocation::RegistrableLabel});

  // Lowest rank wins when several brands appear.
  CHECK(match_brand(record("usps-facebook.com", rules()), cat)->brand_id == "facebook");

  auto narrow = cat;
  narrow.brand_top_n = 1;
  CHECK_FALSE(match_brand(record("usps-security.com", rules()), narrow).has_value());
}

TEST_CASE("is_random_looking agrees with a word-scan oracle") {
  CHECK(is_random_looking(record("xkqzvrtw.top", rules()), words(), 4));
  CHECK_FALSE(is_random_looking(record("securelogin.com", rules()), words(), 4));
  CHECK(is_random_looking("1234", words(), 4));
  CHECK(is_random_looking("--", words(), 4));

  const auto raw = split_lines(read_file(testing::fixture("words.txt")));
  std::mt19937 rng(5);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-";
  for (int iter = 0; iter < 3000; ++iter) {
    std::string label(1 + rng() % 14, 'a');
    for (auto& c : label) c = alphabet[rng() % alphabet.size()];
    for (size_t min_len : {3u, 4u, 5u}) {
      CHECK(is_random_looking(label, words(), min_len) == oracle::random_looking(label, raw, min_len));
    }
  }
}

TEST_CASE("levenshtein matches the recursive oracle") {
  CHECK(levenshtein("alpha", "omega") == 4);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("usps-a1", "usps-a2") == 1);
  CHECK(levenshtein("kitten", "sitting") == 3);

  std::mt19937 rng(17);
  const std::string alphabet = "abc-1";
  auto rnd = [&] {
    std::string s(rng() % 13, 'a');
    for (auto& c : s) c = alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int iter = 0; iter < 2000; ++iter) {
    const auto a = rnd(), b = rnd(), c = rnd();
    const auto ab = levenshtein(a, b);
    CHECK(ab == oracle::edit_distance(a, b));
    CHECK(ab == levenshtein(b, a));
    CHECK(levenshtein(a, c) <= ab + levenshtein(b, c));
  }
}

TEST_CASE("registration log parsing") {
  auto log = parse_registration_log("registrable,registered_at,registrar\nUSPS-A1.top,2024-06-01T03:00:00Z,NameSilo\n");
  REQUIRE(log.size() == 1);
  CHECK(log[0].registrable == "usps-a1.top");
  CHECK(log[0].registrar == "NameSilo");
  CHECK_THROWS_AS(parse_registration_log("h\nx.com,not-a-time,R\n"), Error);
  CHECK_THROWS_AS(parse_registration_log("h\nx.com,2024-06-01T03:00:00Z,\n"), Error);
}

TEST_CASE("cluster_bulk window, registrar and distance rules") {
  std::vector<RegistrationLogEntry> same_hour{
      {"usps-a1.top", ts("2024-06-01T03:00:00Z"), "NameSilo"},
      {"usps-a2.top", ts("2024-06-01T03:10:00Z"), "NameSilo"},
      {"usps-a3.top", ts("2024-06-01T03:20:00Z"), "NameSilo"},
  };
  auto c = cluster_bulk(same_hour, {});
  REQUIRE(c.size() == 1);
  CHECK(c[0].members == std::set<std::string>{"usps-a1.top", "usps-a2.top", "usps-a3.top"});
  CHECK(c[0].registrar == "NameSilo");
  CHECK(c[0].window_start == ts("2024-06-01T00:00:00Z"));

  auto spread = same_hour;
  spread[1].registered_at = ts("2024-06-02T03:00:00Z");
  spread[2].registered_at = ts("2024-06-03T03:00:00Z");
  CHECK(cluster_bulk(spread, {}).empty());

  auto registrars = same_hour;
  registrars[2].registrar = "Alibaba";
  CHECK(cluster_bulk(registrars, {}).empty());

  std::vector<RegistrationLogEntry> far{
      {"alpha.com", ts("2024-06-01T01:00:00Z"), "R"},
      {"omega.com", ts("2024-06-01T02:00:00Z"), "R"},
  };
  CHECK(cluster_bulk(far, {std::chrono::hours(24), 2, 2}).empty());
  CHECK(cluster_bulk(far, {std::chrono::hours(24), 4, 2}).size() == 1);

  // Chains connect through intermediate members.
  std::vector<RegistrationLogEntry> chain{
      {"abcde.com", ts("2024-06-01T01:00:00Z"), "R"},
      {"abxde.com", ts("2024-06-01T01:00:00Z"), "R"},
      {"abxyz.com", ts("2024-06-01T01:00:00Z"), "R"},
  };
  REQUIRE(cluster_bulk(chain, {}).size() == 1);
  CHECK(levenshtein("abcde", "abxyz") == 3);

  // Midnight boundary splits the tumbling window.
  std::vector<RegistrationLogEntry> boundary{
      {"shop1.com", ts("2024-06-01T23:59:59Z"), "R"},
      {"shop2.com", ts("2024-06-02T00:00:00Z"), "R"},
      {"shop3.com", ts("2024-06-02T00:00:01Z"), "R"},
  };
  CHECK(cluster_bulk(boundary, {}).empty());

  CHECK_THROWS_AS(cluster_bulk(same_hour, {Seconds(0), 2, 3}), Error);
}

TEST_CASE("cluster_bulk agrees with the pairwise oracle on random logs") {
  std::mt19937 rng(23);
  const std::vector<std::string> stems{"usps-", "pay", "secure", "ozn"};
  const std::vector<std::string> registrars{"NameSilo", "Alibaba", "SAV"};
  for (int round = 0; round < 40; ++round) {
    std::vector<RegistrationLogEntry> log;
    const int n = 10 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      std::string label = stems[rng() % stems.size()];
      for (int k = static_cast<int>(rng() % 3); k >= 0; --k) label += static_cast<char>('a' + rng() % 4);
      log.push_back({label + ".top", ts("2024-06-01T00:00:00Z") + std::chrono::hours(rng() % 72),
                     registrars[rng() % registrars.size()]});
    }
    const auto clusters = cluster_bulk(log, {});
    std::set<std::set<std::string>> got;
    for (const auto& c : clusters) {
      CHECK(c.members.size() >= 3);
      got.insert(c.members);
    }
    CHECK(got == oracle::bulk_components(log, 86400, 2, 3));
  }
}

TEST_CASE("classify composes the four steps") {
  const auto cat = catalog();
  const auto index = squatgen::SquatIndex::build(cat);
  const auto allow = parse_allowlist("1,blogspot.com\n2,facebook.com\n");
  BulkMembership bulk{{"usps-a1.top", "registrar=NameSilo"}};
  const ClassifyContext ctx{allow, cat, index, words(), bulk, 4};

  auto squat = classify(record("faceb0ok.com", rules()), ctx);
  CHECK(squat.flags == std::set<Flag>{Flag::Squatted});
  CHECK(squat.verdict == Verdict::MaliciousRegistration);
  CHECK(squat.brand == std::optional<std::string>("facebook"));

  auto benign = classify(record("legitblog.net", rules()), ctx);
  CHECK(benign.flags.empty());
  CHECK(benign.verdict == Verdict::Compromised);

  auto overlap = classify(record("usps-a1.top", rules()), ctx);
  CHECK(overlap.flags == std::set<Flag>{Flag::BrandInDomain, Flag::BulkRegistered});
  CHECK(overlap.evidence.size() == 2);

  auto rnd = classify(record("xkqzvrtw.top", rules()), ctx);
  CHECK(rnd.flags == std::set<Flag>{Flag::RandomLooking});

  CHECK(classify(record("facebook.com", rules()), ctx).verdict == Verdict::Allowlisted);
  auto platform = classify(record("usps-tracking-service.blogspot.com", rules()), ctx);
  CHECK(platform.verdict == Verdict::PlatformSubdomainAbuse);
  CHECK(platform.flags.empty());
}

TEST_CASE("classification invariants over a generated corpus") {
  const auto cat = catalog();
  const auto index = squatgen::SquatIndex::build(cat);
  const auto allow = parse_allowlist("1,blogspot.com\n");
  BulkMembership bulk;
  std::mt19937 rng(31);
  const std::vector<std::string> parts{"usps", "faceb0ok", "xq", "zv", "secure", "login", "dhl", "9", "-", "blog"};
  std::vector<ingest::DomainRecord> records;
  for (int i = 0; i < 400; ++i) {
    std::string label;
    for (int k = 1 + static_cast<int>(rng() % 3); k > 0; --k) label += parts[rng() % parts.size()];
    if (label.front() == '-') label = "x" + label;
    if (label.back() == '-') label += "x";
    std::string host = (rng() % 3 == 0 ? "www." : "") + label + ".com";
    records.push_back(record(host, rules()));
    if (rng() % 5 == 0) bulk.emplace(records.back().registrable, "cluster");
  }
  const ClassifyContext ctx{allow, cat, index, words(), bulk, 4};
  for (const auto& r : records) {
    const auto res = classify(r, ctx);
    if (res.flags.count(Flag::RandomLooking)) {
      CHECK_FALSE(res.flags.count(Flag::BrandInDomain));
      CHECK_FALSE(res.flags.count(Flag::Squatted));
    }
    CHECK((res.verdict == Verdict::MaliciousRegistration) == !res.flags.empty());

    // Allowlisting a domain can never make it malicious.
    auto bigger = allow;
    bigger.domains.insert(r.registrable);
    const ClassifyContext ctx2{bigger, cat, index, words(), bulk, 4};
    CHECK(classify(r, ctx2).verdict != Verdict::MaliciousRegistration);
  }
}
