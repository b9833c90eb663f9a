#include "dnsabuse/error.hpp"
#include "dnsabuse/resolver.hpp"
#include "dnsabuse/textio.hpp"
#include "json.hpp"

namespace dnsabuse::dnsmon {

using nlohmann::json;

std::string_view to_string(QueryStatus s) {
  switch (s) {
    case QueryStatus::Answer: return "answer";
    case QueryStatus::Empty: return "empty";
    case QueryStatus::Timeout: return "timeout";
    case QueryStatus::ServFail: return "servfail";
    case QueryStatus::Nxdomain: return "nxdomain";
  }
  return "?";
}

ScriptedResolver ScriptedResolver::parse(std::string_view json_text) {
  ScriptedResolver r;
  try {
    const auto doc = json::parse(json_text);
    if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "resolver fixture must be an object");
    for (const auto& [domain, types] : doc.items()) {
      for (const auto& [type_name, steps] : types.items()) {
        const auto type = rrtype_from_string(type_name);
        if (!type) throw Error(ErrorCode::InvalidArgument, "unknown rrtype " + type_name);
        std::vector<Step> parsed;
        for (const auto& s : steps) {
          Step step;
          if (s.is_string()) {
            if (s.get<std::string>() != "nxdomain") throw Error(ErrorCode::InvalidArgument, "unknown step " + s.dump());
            step.nxdomain = true;
          } else {
            step.values = s.value("values", std::vector<std::string>{});
            step.ttl = s.value("ttl", 0u);
            step.fail_count = s.value("fail_count_before_success", 0);
            const auto failure = s.value("failure", std::string("timeout"));
            if (failure == "servfail") step.failure = QueryStatus::ServFail;
            else if (failure != "timeout") throw Error(ErrorCode::InvalidArgument, "unknown failure " + failure);
            if (s.contains("vantage")) step.vantage = s.at("vantage").get<std::string>();
          }
          parsed.push_back(std::move(step));
        }
        r.script(to_lower_ascii(domain), *type, std::move(parsed));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("resolver fixture: ") + e.what());
  }
  return r;
}

ScriptedResolver::ScriptedResolver(ScriptedResolver&& other) noexcept {
  std::lock_guard lock(other.mu_);
  script_ = std::move(other.script_);
  cursors_ = std::move(other.cursors_);
  total_calls_ = other.total_calls_;
}

ScriptedResolver ScriptedResolver::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void ScriptedResolver::script(const std::string& domain, RrType type, std::vector<Step> steps) {
  std::lock_guard lock(mu_);
  script_[domain][type] = std::move(steps);
}

QueryResult ScriptedResolver::query(const VantagePoint& vantage, const std::string& domain, RrType type) {
  std::lock_guard lock(mu_);
  ++total_calls_;
  auto& cursor = cursors_[Key{domain, type, vantage.id}];
  ++cursor.calls;

  const auto d = script_.find(domain);
  if (d == script_.end()) return QueryResult::of(QueryStatus::Nxdomain);
  const auto t = d->second.find(type);
  if (t == d->second.end()) return QueryResult::of(QueryStatus::Empty);

  std::vector<const Step*> applicable;
  for (const auto& s : t->second) {
    if (!s.vantage || *s.vantage == vantage.id) applicable.push_back(&s);
  }
  if (applicable.empty()) return QueryResult::of(QueryStatus::Empty);

  const Step& step = *applicable[std::min(cursor.step, applicable.size() - 1)];
  if (cursor.failures_served < step.fail_count) {
    ++cursor.failures_served;
    return QueryResult::of(step.failure);
  }
  cursor.failures_served = 0;
  if (cursor.step + 1 < applicable.size()) ++cursor.step;

  if (step.nxdomain) return QueryResult::of(QueryStatus::Nxdomain);
  if (step.values.empty()) return QueryResult::of(QueryStatus::Empty);
  return QueryResult::answer(RrSet{type, step.values, step.ttl});
}

std::vector<std::string> ScriptedResolver::domains() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [d, _] : script_) out.push_back(d);
  return out;
}

size_t ScriptedResolver::calls() const {
  std::lock_guard lock(mu_);
  return total_calls_;
}

size_t ScriptedResolver::calls_for(const std::string& domain, RrType type, const std::string& vantage_id) const {
  std::lock_guard lock(mu_);
  const auto it = cursors_.find(Key{domain, type, vantage_id});
  return it == cursors_.end() ? 0 : it->second.calls;
}

}  // namespace dnsabuse::dnsmon
