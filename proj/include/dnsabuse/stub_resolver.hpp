#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "dnsabuse/resolver.hpp"

namespace dnsabuse::dnsmon {

namespace wire {

/// Recursion-desired query with an EDNS0 OPT record advertising `udp_size`.
std::vector<uint8_t> encode_query(uint16_t id, const std::string& name, RrType type, uint16_t udp_size = 1232);

struct Decoded {
  uint16_t id = 0;
  bool truncated = false;
  QueryResult result;
};

/// Parses a response to a query for (name, type). Records of other types or
/// owners (e.g. the CNAME chain when asking for A) are ignored; the rrset TTL
/// is the minimum over matching records. Throws Error(InvalidArgument) on
/// malformed input.
Decoded decode_response(const uint8_t* data, size_t size, const std::string& name, RrType type);

struct Endpoint {
  std::string host;
  uint16_t port = 53;
};

/// "ip", "ip:port" or "[ipv6]:port".
Endpoint parse_endpoint(const std::string& address);

}  // namespace wire

/// Minimal stub resolver: one UDP question to the vantage's resolver, falling
/// back to TCP when the answer is truncated. Socket errors and timeouts map to
/// QueryStatus::Timeout so the collector's retry loop handles them.
class StubResolver : public Resolver {
 public:
  explicit StubResolver(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) : timeout_(timeout) {}

  QueryResult query(const VantagePoint& vantage, const std::string& domain, RrType type) override;

 private:
  std::chrono::milliseconds timeout_;
  std::atomic<uint16_t> next_id_{0x2a00};
};

}  // namespace dnsabuse::dnsmon
