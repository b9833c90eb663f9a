#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dnsabuse/error.hpp"
#include "dnsabuse/lifecycle.hpp"
#include "test_helpers.hpp"

using namespace dnsabuse;
using namespace dnsabuse::lifecycle;
using testing::ts;

namespace {

TimestampSource src(SourceKind k, std::string_view at, std::string domain = "a.com") {
  return {k, std::move(domain), ts(at)};
}

RegistrationEvent reg(std::string_view at, std::optional<std::string_view> dereg = std::nullopt) {
  RegistrationEvent e{"a.com", ts(at), SourceKind::Whois, std::nullopt};
  if (dereg) e.deregistered_at = ts(*dereg);
  return e;
}

LifecycleRecord record_with_delay(std::string name, std::optional<double> days, classifier::Verdict verdict) {
  LifecycleRecord r;
  r.registrable = std::move(name);
  r.tld = "com";
  r.classification.registrable = r.registrable;
  r.classification.verdict = verdict;
  if (days) r.detection_delay = Delay{Seconds(static_cast<int64_t>(std::llround(*days * 86400))), *days < 0};
  return r;
}

template <typename Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("merge takes the earliest registration-side source") {
  const auto ev = merge_registration({src(SourceKind::Rdap, "2024-01-05"), src(SourceKind::ZoneFirstAppearance, "2024-01-04")});
  CHECK(ev.registered_at == ts("2024-01-04"));
  CHECK(ev.provenance == SourceKind::ZoneFirstAppearance);
  CHECK_FALSE(ev.deregistered_at);
}

TEST_CASE("merge ties follow kind order") {
  const auto ev = merge_registration({src(SourceKind::Rdap, "2024-01-05"), src(SourceKind::Whois, "2024-01-05"),
                                      src(SourceKind::CtLog, "2024-01-05")});
  CHECK(ev.provenance == SourceKind::Whois);
}

TEST_CASE("merge deregistration uses the latest last-seen after registration") {
  const auto ev = merge_registration({src(SourceKind::Whois, "2024-01-01"), src(SourceKind::ZoneLastSeen, "2024-02-01"),
                                      src(SourceKind::ZoneLastSeen, "2024-03-01")});
  REQUIRE(ev.deregistered_at);
  CHECK(*ev.deregistered_at == ts("2024-03-01"));
  const auto stale = merge_registration({src(SourceKind::Whois, "2024-05-01"), src(SourceKind::ZoneLastSeen, "2024-03-01")});
  CHECK_FALSE(stale.deregistered_at);
}

TEST_CASE("merge errors") {
  expect_code(ErrorCode::NoRegistrationEvidence, [] { merge_registration({src(SourceKind::ZoneLastSeen, "2024-01-01")}); });
  expect_code(ErrorCode::NoRegistrationEvidence, [] { merge_registration({}); });
  expect_code(ErrorCode::InvalidArgument, [] {
    merge_registration({src(SourceKind::Whois, "2024-01-01"), src(SourceKind::Whois, "2024-01-01", "b.com")});
  });
}

TEST_CASE("merge is order independent and matches a min-over-sources oracle") {
  const std::vector<TimestampSource> base{
      src(SourceKind::PassiveDnsFirstSeen, "2024-01-07T10:00:00Z"), src(SourceKind::Whois, "2024-01-09"),
      src(SourceKind::CtLog, "2024-01-07T10:00:00Z"), src(SourceKind::ZoneLastSeen, "2024-04-01"),
      src(SourceKind::Rdap, "2024-01-08"), src(SourceKind::ZoneLastSeen, "2024-05-01")};
  // Oracle: scan for the minimum (at, kind) by hand among non-last-seen sources.
  Timestamp best = Timestamp::max();
  int best_kind = 99;
  for (const auto& s : base) {
    if (s.kind == SourceKind::ZoneLastSeen) continue;
    const int k = static_cast<int>(s.kind);
    if (s.at < best || (s.at == best && k < best_kind)) best = s.at, best_kind = k;
  }
  auto perm = base;
  std::sort(perm.begin(), perm.end(), [](const auto& a, const auto& b) { return a.kind < b.kind; });
  const auto expected = merge_registration(base);
  CHECK(expected.registered_at == best);
  CHECK(static_cast<int>(expected.provenance) == best_kind);
  CHECK(*expected.deregistered_at == ts("2024-05-01"));
  size_t perms = 0;
  do {
    CHECK(merge_registration(perm) == expected);
    ++perms;
  } while (std::next_permutation(perm.begin(), perm.end(), [](const auto& a, const auto& b) {
    return std::tie(a.kind, a.at) < std::tie(b.kind, b.at);
  }));
  CHECK(perms == 720);
}

TEST_CASE("merge_all groups by domain and sets aside domains without evidence") {
  const auto r = merge_all({src(SourceKind::Whois, "2024-01-01", "a.com"), src(SourceKind::ZoneLastSeen, "2024-01-01", "b.com"),
                            src(SourceKind::Rdap, "2024-02-01", "c.com")});
  CHECK(r.events.size() == 2);
  CHECK(r.without_evidence == std::set<std::string>{"b.com"});
}

TEST_CASE("timestamp source CSV") {
  const auto s = parse_timestamp_sources("registrable,kind,at\nA.com,whois,2024-01-01T00:00:00Z\nb.com,zone_last_seen,2024-02-01\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].registrable == "a.com");
  CHECK(s[1].kind == SourceKind::ZoneLastSeen);
  CHECK_THROWS_AS(parse_timestamp_sources("registrable,kind,at\na.com,dig,2024-01-01\n"), Error);
  CHECK_THROWS_AS(parse_timestamp_sources("registrable,kind,at\na.com,whois,yesterday\n"), Error);
}

TEST_CASE("detection delay") {
  const auto r = reg("2024-01-01T00:00:00Z");
  const auto d = detection_delay(r, {{"apwg", ts("2024-01-17T07:12:00Z")}}, "apwg");
  REQUIRE(d);
  CHECK(d->days() == doctest::Approx(16.3).epsilon(1e-9));
  CHECK_FALSE(d->flagged);
  CHECK_FALSE(detection_delay(r, {{"phishtank", ts("2024-01-02")}}, "apwg"));
  CHECK(detection_delay(r, {{"apwg", ts("2024-01-01")}}, "apwg")->value == Seconds(0));
  const auto early = detection_delay(r, {{"apwg", ts("2023-12-31")}}, "apwg");
  CHECK(early->days() == doctest::Approx(-1.0));
  CHECK(early->flagged);
}

TEST_CASE("takedown delay") {
  const auto r = reg("2024-02-01", "2024-03-12T12:00:00Z");
  const auto d = takedown_delay(r, {{"apwg", ts("2024-03-01")}}, "apwg");
  REQUIRE(d);
  CHECK(d->days() == doctest::Approx(11.5));
  CHECK_FALSE(takedown_delay(reg("2024-02-01"), {{"apwg", ts("2024-03-01")}}, "apwg"));
  const auto before = takedown_delay(r, {{"apwg", ts("2024-03-13T12:00:00Z")}}, "apwg");
  CHECK(before->days() == doctest::Approx(-1.0));
  CHECK(before->flagged);
}

TEST_CASE("detection + takedown equals lifetime exactly") {
  const char* regs[] = {"2024-01-01T00:00:00Z", "2024-01-01T13:37:11Z", "2023-06-30T23:59:59Z"};
  const char* detects[] = {"2024-01-01T00:00:00Z", "2024-01-17T07:12:00Z", "2024-03-01T00:00:01Z", "2023-05-01T00:00:00Z"};
  const char* deregs[] = {"2024-03-12T12:00:00Z", "2025-01-01T00:00:00Z"};
  for (auto rg : regs)
    for (auto dt : detects)
      for (auto dr : deregs) {
        const auto r = reg(rg, dr);
        const Detections det{{"apwg", ts(dt)}};
        const auto a = detection_delay(r, det, "apwg");
        const auto b = takedown_delay(r, det, "apwg");
        REQUIRE(a);
        REQUIRE(b);
        CHECK(a->value + b->value == *r.deregistered_at - r.registered_at);
      }
}

TEST_CASE("blocklist lag") {
  const auto t = ts("2024-01-01");
  const Detections det{{"apwg", t}, {"phishtank", t + Seconds(4 * 86400 + 34560)}, {"openphish", t - Seconds(2 * 86400)}};
  const auto lag = blocklist_lag(det, "apwg");
  CHECK(to_days(lag.at("phishtank")) == doctest::Approx(4.4));
  CHECK(to_days(lag.at("openphish")) == doctest::Approx(-2.0));
  CHECK(lag.count("apwg") == 0);
  CHECK(blocklist_lag({{"apwg", t}}, "apwg").empty());
  expect_code(ErrorCode::ReferenceMissing, [&] { blocklist_lag({{"phishtank", t}}, "apwg"); });

  // Swapping the reference negates every pairwise lag.
  for (const auto& [a, ta] : det)
    for (const auto& [b, tb] : det) {
      if (a == b) continue;
      CHECK(blocklist_lag(det, a).at(b) == -blocklist_lag(det, b).at(a));
    }
}

TEST_CASE("aggregate: mean and lower median over one key") {
  std::vector<LifecycleRecord> recs;
  int i = 0;
  for (double d : {1.0, 1.0, 2.0, 10.0, 100.0})
    recs.push_back(record_with_delay("d" + std::to_string(i++) + ".com", d, classifier::Verdict::MaliciousRegistration));
  const auto rep = aggregate(recs, Metric::detection(), GroupKey::Verdict);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].key == "malicious_registration");
  CHECK(rep.rows[0].count == 5);
  CHECK(rep.rows[0].mean_days == doctest::Approx(22.8));
  CHECK(rep.rows[0].median_days == doctest::Approx(2.0));
  CHECK(rep.metric == "detection_delay");
}

TEST_CASE("aggregate: per-verdict medians, missing counts and ordering") {
  std::vector<LifecycleRecord> recs{
      record_with_delay("m1.com", 16.3, classifier::Verdict::MaliciousRegistration),
      record_with_delay("m2.com", 3.0, classifier::Verdict::MaliciousRegistration),
      record_with_delay("m3.com", 40.0, classifier::Verdict::MaliciousRegistration),
      record_with_delay("m4.com", std::nullopt, classifier::Verdict::MaliciousRegistration),
      record_with_delay("c1.com", 86.0, classifier::Verdict::Compromised),
  };
  const auto rep = aggregate(recs, Metric::detection(), GroupKey::Verdict);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].key == "malicious_registration");
  CHECK(rep.rows[0].count == 3);
  CHECK(rep.rows[0].missing == 1);
  CHECK(rep.rows[0].median_days == doctest::Approx(16.3));
  CHECK(rep.rows[1].median_days == doctest::Approx(86.0));
  size_t total = rep.ungrouped;
  for (const auto& row : rep.rows) total += row.count + row.missing;
  CHECK(total == recs.size());

  const auto csv = render_aggregate(rep);
  CHECK(csv.find("verdict,count,missing,mean_days,median_days\n") == 0);
  CHECK(csv.find("malicious_registration,3,1,19.7667,16.3000\n") != std::string::npos);
}

TEST_CASE("aggregate: totals, duplication invariance and empty inputs") {
  std::vector<LifecycleRecord> recs;
  const double delays[] = {5.5, -1.0, 30.25, 7.0, 7.0, 400.0, 0.0};
  const classifier::Verdict verdicts[] = {classifier::Verdict::MaliciousRegistration, classifier::Verdict::Compromised};
  for (int i = 0; i < 7; ++i) {
    auto r = record_with_delay("r" + std::to_string(i) + ".com", i == 3 ? std::nullopt : std::optional(delays[i]),
                               verdicts[i % 2]);
    if (i % 3 == 0) r.feed_brands.insert(i == 0 ? "paypal" : "usps");
    else if (i == 4) r.classification.brand = "apple";
    r.tld = i < 4 ? "com" : "top";
    r.detections = {{"apwg", ts("2024-01-01")}};
    if (i % 2) r.detections["phishtank"] = ts("2024-01-03");
    r.classification.flags.insert(classifier::Flag::BrandInDomain);
    if (i > 4) r.classification.flags.insert(classifier::Flag::Squatted);
    recs.push_back(std::move(r));
  }
  auto doubled = recs;
  doubled.insert(doubled.end(), recs.begin(), recs.end());

  for (auto key : {GroupKey::Brand, GroupKey::Tld, GroupKey::FlagCategory, GroupKey::Verdict, GroupKey::Source}) {
    const auto rep = aggregate(recs, Metric::detection(), key);
    size_t memberships = 0;
    for (const auto& r : recs) memberships += group_values(r, key).size();
    size_t total = 0;
    for (const auto& row : rep.rows) total += row.count + row.missing;
    CHECK(total == memberships);
    if (key == GroupKey::Tld || key == GroupKey::Verdict) CHECK(total + rep.ungrouped == recs.size());
    CHECK(std::is_sorted(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) { return a.count > b.count; }));

    const auto dup = aggregate(doubled, Metric::detection(), key);
    REQUIRE(dup.rows.size() == rep.rows.size());
    for (size_t i = 0; i < rep.rows.size(); ++i) {
      CHECK(dup.rows[i].key == rep.rows[i].key);
      if (rep.rows[i].count) {
        CHECK(dup.rows[i].median_days == rep.rows[i].median_days);
        CHECK(dup.rows[i].mean_days == doctest::Approx(rep.rows[i].mean_days));
      }
    }
  }
  const auto brand = aggregate(recs, Metric::detection(), GroupKey::Brand);
  CHECK(brand.ungrouped == 3);

  expect_code(ErrorCode::EmptyInput, [] { aggregate({}, Metric::detection(), GroupKey::Verdict); });
  std::vector<LifecycleRecord> unbranded{record_with_delay("x.com", 1.0, classifier::Verdict::Compromised)};
  expect_code(ErrorCode::EmptyInput, [&] { aggregate(unbranded, Metric::detection(), GroupKey::Brand); });

  const auto single = aggregate(unbranded, Metric::detection(), GroupKey::Tld);
  CHECK(single.rows[0].mean_days == single.rows[0].median_days);
}

TEST_CASE("build_records joins inputs and computes lags") {
  ingest::DomainRecord d;
  d.registrable = "faceb0ok.com";
  d.public_suffix = "com";
  d.first_detections = {{"apwg", ts("2024-01-02T09:36:00Z")}, {"phishtank", ts("2024-01-03")}};
  d.brands = {"facebook", "apple"};
  classifier::ClassificationResult c;
  c.registrable = "faceb0ok.com";
  c.verdict = classifier::Verdict::MaliciousRegistration;
  c.flags = {classifier::Flag::Squatted};
  c.brand = "facebook";
  classifier::ClassificationResult orphan;
  orphan.registrable = "aaa.net";
  const std::map<std::string, RegistrationEvent> regs{
      {"faceb0ok.com", {"faceb0ok.com", ts("2024-01-01"), SourceKind::Whois, ts("2024-01-04T09:36:00Z")}}};

  const auto recs = build_records({d}, {c, orphan}, regs, "apwg");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].registrable == "aaa.net");
  CHECK_FALSE(recs[0].registration);
  const auto& r = recs[1];
  CHECK(r.detection_delay->days() == doctest::Approx(1.4));
  CHECK(r.takedown_delay->days() == doctest::Approx(2.0));
  CHECK(to_days(r.lags.at("phishtank")) == doctest::Approx(0.6));
  CHECK(group_values(r, GroupKey::Brand) == std::vector<std::string>{"apple"});
  CHECK(group_values(r, GroupKey::Source) == std::vector<std::string>{"apwg", "phishtank"});
  CHECK(Metric::lag("phishtank").days_of(r).value() == doctest::Approx(0.6));

  const auto csv = render_report(recs);
  CHECK(csv.find("registrable,registered_at,provenance,deregistered_at,detection_delay_days,takedown_delay_days,flags,verdict\n") == 0);
  CHECK(csv.find("faceb0ok.com,2024-01-01T00:00:00Z,whois,2024-01-04T09:36:00Z,1.4000,2.0000,squatted,malicious_registration\n") !=
        std::string::npos);
}
