#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <thread>

#include "dnsabuse/error.hpp"
#include "dnsabuse/stub_resolver.hpp"

using namespace dnsabuse;
using namespace dnsabuse::dnsmon;

namespace {

// Test-side message builder, written independently of the library encoder.
struct Builder {
  std::vector<uint8_t> b;
  void u16(uint16_t v) {
    b.push_back(v >> 8);
    b.push_back(v & 0xff);
  }
  void u32(uint32_t v) {
    u16(v >> 16);
    u16(v & 0xffff);
  }
  void name(const std::string& n) {
    size_t start = 0;
    while (start < n.size()) {
      auto dot = n.find('.', start);
      if (dot == std::string::npos) dot = n.size();
      b.push_back(static_cast<uint8_t>(dot - start));
      b.insert(b.end(), n.begin() + start, n.begin() + dot);
      start = dot + 1;
    }
    b.push_back(0);
  }
  void pointer(uint16_t offset) { u16(0xc000 | offset); }
};

struct Answer {
  uint16_t type;
  uint32_t ttl;
  std::vector<uint8_t> rdata;
  bool owner_is_question = true;  // compress owner as pointer to offset 12
};

std::vector<uint8_t> response(const std::vector<uint8_t>& query, int rcode, const std::vector<Answer>& answers,
                              bool truncated = false) {
  Builder out;
  out.b.insert(out.b.end(), query.begin(), query.begin() + 2);
  out.u16(static_cast<uint16_t>(0x8180 | (truncated ? 0x0200 : 0) | rcode));
  out.u16(1);
  out.u16(static_cast<uint16_t>(answers.size()));
  out.u16(0);
  out.u16(0);
  // Copy the question section verbatim (name + type + class).
  size_t p = 12;
  while (query[p] != 0) p += query[p] + 1;
  out.b.insert(out.b.end(), query.begin() + 12, query.begin() + p + 5);
  for (const auto& a : answers) {
    out.pointer(12);
    out.u16(a.type);
    out.u16(1);
    out.u32(a.ttl);
    out.u16(static_cast<uint16_t>(a.rdata.size()));
    out.b.insert(out.b.end(), a.rdata.begin(), a.rdata.end());
  }
  return out.b;
}

std::string question_name(const std::vector<uint8_t>& q) {
  std::string n;
  for (size_t p = 12; q[p] != 0; p += q[p] + 1) {
    if (!n.empty()) n += '.';
    n.append(reinterpret_cast<const char*>(&q[p + 1]), q[p]);
  }
  return n;
}

using Handler = std::function<std::vector<uint8_t>(const std::vector<uint8_t>& query, bool over_tcp)>;

// UDP + TCP server on one loopback port; an empty reply means "stay silent".
class LoopbackServer {
 public:
  explicit LoopbackServer(Handler h) : handler_(std::move(h)) {
    udp_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::bind(udp_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(udp_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    tcp_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(tcp_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    REQUIRE(::bind(tcp_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    ::listen(tcp_, 8);
    thread_ = std::thread([this] { loop(); });
  }
  ~LoopbackServer() {
    stop_ = true;
    thread_.join();
    ::close(udp_);
    ::close(tcp_);
  }
  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }
  int udp_queries() const { return udp_count_; }
  int tcp_queries() const { return tcp_count_; }
  std::vector<uint8_t> last_query() const { return last_; }

 private:
  void loop() {
    while (!stop_) {
      pollfd fds[2] = {{udp_, POLLIN, 0}, {tcp_, POLLIN, 0}};
      if (::poll(fds, 2, 20) <= 0) continue;
      if (fds[0].revents & POLLIN) {
        std::vector<uint8_t> buf(4096);
        sockaddr_in peer{};
        socklen_t len = sizeof peer;
        const auto n = ::recvfrom(udp_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&peer), &len);
        buf.resize(static_cast<size_t>(n));
        ++udp_count_;
        last_ = buf;
        const auto reply = handler_(buf, false);
        if (!reply.empty()) ::sendto(udp_, reply.data(), reply.size(), 0, reinterpret_cast<sockaddr*>(&peer), len);
      }
      if (fds[1].revents & POLLIN) {
        const int c = ::accept(tcp_, nullptr, nullptr);
        uint8_t lb[2];
        ::recv(c, lb, 2, MSG_WAITALL);
        std::vector<uint8_t> buf(static_cast<size_t>(lb[0] << 8 | lb[1]));
        ::recv(c, buf.data(), buf.size(), MSG_WAITALL);
        ++tcp_count_;
        auto reply = handler_(buf, true);
        const uint8_t hdr[2] = {static_cast<uint8_t>(reply.size() >> 8), static_cast<uint8_t>(reply.size() & 0xff)};
        ::send(c, hdr, 2, MSG_NOSIGNAL);
        ::send(c, reply.data(), reply.size(), MSG_NOSIGNAL);
        ::close(c);
      }
    }
  }

  Handler handler_;
  int udp_ = -1, tcp_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<int> udp_count_{0}, tcp_count_{0};
  std::vector<uint8_t> last_;
  std::thread thread_;
};

std::vector<uint8_t> ipv4(uint8_t a, uint8_t b, uint8_t c, uint8_t d) { return {a, b, c, d}; }

}  // namespace

TEST_CASE("query encoding carries RD, one question and an EDNS OPT record") {
  const auto q = wire::encode_query(0x1234, "Example.COM.", RrType::MX);
  CHECK(q[0] == 0x12);
  CHECK(q[1] == 0x34);
  CHECK((q[2] & 0x01) == 0x01);  // RD
  CHECK(q[5] == 1);              // QDCOUNT
  CHECK(q[11] == 1);             // ARCOUNT
  CHECK(question_name(q) == "Example.COM");
  const size_t qtype = 12 + 1 + 7 + 1 + 3 + 1;
  CHECK((q[qtype] << 8 | q[qtype + 1]) == 15);
  CHECK((q[qtype + 5] << 8 | q[qtype + 6]) == 41);    // OPT
  CHECK((q[qtype + 7] << 8 | q[qtype + 8]) == 1232);  // payload size
  CHECK_THROWS_AS(wire::encode_query(1, "a..b", RrType::A), Error);
}

TEST_CASE("response decoding: canonical text per type and minimum TTL") {
  const auto q = wire::encode_query(7, "a.com", RrType::A);
  auto r = response(q, 0, {{1, 300, ipv4(192, 0, 2, 1)}, {1, 120, ipv4(192, 0, 2, 2)}});
  auto d = wire::decode_response(r.data(), r.size(), "a.com", RrType::A);
  CHECK(d.id == 7);
  REQUIRE(d.result.status == QueryStatus::Answer);
  CHECK(d.result.rrset->values == std::vector<std::string>{"192.0.2.1", "192.0.2.2"});
  CHECK(d.result.rrset->ttl == 120);

  // MX exchange compressed back to the question name.
  const auto qmx = wire::encode_query(8, "a.com", RrType::MX);
  Builder mx;
  mx.u16(10);
  mx.b.push_back(4);
  for (char c : std::string("mail")) mx.b.push_back(c);
  mx.pointer(12);
  r = response(qmx, 0, {{15, 600, mx.b}});
  d = wire::decode_response(r.data(), r.size(), "a.com", RrType::MX);
  REQUIRE(d.result.status == QueryStatus::Answer);
  CHECK(d.result.rrset->values[0] == "10 mail.a.com");

  const auto qtxt = wire::encode_query(9, "a.com", RrType::TXT);
  std::vector<uint8_t> txt{5, 'v', '=', 's', 'p', 'f', 3, '1', ' ', 'x'};
  r = response(qtxt, 0, {{16, 60, txt}});
  d = wire::decode_response(r.data(), r.size(), "a.com", RrType::TXT);
  CHECK(d.result.rrset->values[0] == "v=spf1 x");

  const auto q6 = wire::encode_query(10, "a.com", RrType::AAAA);
  std::vector<uint8_t> v6(16, 0);
  v6[0] = 0x20, v6[1] = 0x01, v6[2] = 0x0d, v6[3] = 0xb8, v6[15] = 1;
  r = response(q6, 0, {{28, 60, v6}});
  d = wire::decode_response(r.data(), r.size(), "a.com", RrType::AAAA);
  CHECK(d.result.rrset->values[0] == "2001:db8::1");

  const auto qsoa = wire::encode_query(11, "a.com", RrType::SOA);
  Builder soa;
  soa.b.push_back(3);
  for (char c : std::string("ns1")) soa.b.push_back(c);
  soa.pointer(12);
  soa.b.push_back(4);
  for (char c : std::string("host")) soa.b.push_back(c);
  soa.pointer(12);
  for (uint32_t v : {2024010101u, 7200u, 3600u, 1209600u, 300u}) soa.u32(v);
  r = response(qsoa, 0, {{6, 3600, soa.b}});
  d = wire::decode_response(r.data(), r.size(), "a.com", RrType::SOA);
  CHECK(d.result.rrset->values[0] == "ns1.a.com host.a.com 2024010101 7200 3600 1209600 300");
}

TEST_CASE("response decoding: rcodes, empty answers and malformed input") {
  const auto q = wire::encode_query(1, "a.com", RrType::A);
  auto r = response(q, 3, {});
  CHECK(wire::decode_response(r.data(), r.size(), "a.com", RrType::A).result.status == QueryStatus::Nxdomain);
  r = response(q, 2, {});
  CHECK(wire::decode_response(r.data(), r.size(), "a.com", RrType::A).result.status == QueryStatus::ServFail);
  r = response(q, 0, {});
  CHECK(wire::decode_response(r.data(), r.size(), "a.com", RrType::A).result.status == QueryStatus::Empty);

  r = response(q, 0, {{1, 300, ipv4(1, 2, 3, 4)}});
  CHECK_THROWS_AS(wire::decode_response(r.data(), r.size() - 2, "a.com", RrType::A), Error);
  CHECK_THROWS_AS(wire::decode_response(q.data(), q.size(), "a.com", RrType::A), Error);  // not a response
  // Self-referential compression pointer.
  std::vector<uint8_t> loop(r.begin(), r.begin() + 12);
  loop[5] = 1;
  loop[7] = 0;
  loop.push_back(0xc0);
  loop.push_back(12);
  CHECK_THROWS_AS(wire::decode_response(loop.data(), loop.size(), "a.com", RrType::A), Error);
}

TEST_CASE("endpoint parsing") {
  CHECK(wire::parse_endpoint("1.1.1.1").port == 53);
  const auto e = wire::parse_endpoint("127.0.0.1:5353");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 5353);
  const auto v6 = wire::parse_endpoint("[2001:db8::1]:53");
  CHECK(v6.host == "2001:db8::1");
  CHECK(wire::parse_endpoint("2001:db8::1").host == "2001:db8::1");
  CHECK_THROWS_AS(wire::parse_endpoint("1.1.1.1:99999"), Error);
  CHECK_THROWS_AS(wire::parse_endpoint("[::1"), Error);
}

TEST_CASE("stub resolver talks UDP to a loopback server") {
  LoopbackServer server([](const std::vector<uint8_t>& q, bool) {
    if (question_name(q) == "gone.com") return response(q, 3, {});
    return response(q, 0, {{1, 300, ipv4(192, 0, 2, 1)}});
  });
  StubResolver stub;
  const VantagePoint v{"lo", server.address(), "local"};
  const auto ok = stub.query(v, "a.com", RrType::A);
  REQUIRE(ok.status == QueryStatus::Answer);
  CHECK(ok.rrset->values == std::vector<std::string>{"192.0.2.1"});
  CHECK(stub.query(v, "gone.com", RrType::A).status == QueryStatus::Nxdomain);
  CHECK(server.tcp_queries() == 0);
  // Query ids are not reused between consecutive questions.
  const auto first = server.last_query();
  stub.query(v, "a.com", RrType::A);
  CHECK((first[0] << 8 | first[1]) != (server.last_query()[0] << 8 | server.last_query()[1]));
}

TEST_CASE("stub resolver retries truncated answers over TCP") {
  LoopbackServer server([](const std::vector<uint8_t>& q, bool tcp) {
    if (!tcp) return response(q, 0, {}, true);
    return response(q, 0, {{1, 60, ipv4(192, 0, 2, 9)}, {1, 60, ipv4(192, 0, 2, 10)}});
  });
  StubResolver stub;
  const auto r = stub.query({"lo", server.address(), ""}, "a.com", RrType::A);
  REQUIRE(r.status == QueryStatus::Answer);
  CHECK(r.rrset->values.size() == 2);
  CHECK(server.udp_queries() == 1);
  CHECK(server.tcp_queries() == 1);
}

TEST_CASE("stub resolver maps silence to Timeout") {
  LoopbackServer server([](const std::vector<uint8_t>&, bool) { return std::vector<uint8_t>{}; });
  StubResolver stub(std::chrono::milliseconds(100));
  CHECK(stub.query({"lo", server.address(), ""}, "a.com", RrType::A).status == QueryStatus::Timeout);
}
