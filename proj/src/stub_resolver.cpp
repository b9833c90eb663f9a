#include "dnsabuse/stub_resolver.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <fmt/format.h>

#include "dnsabuse/error.hpp"
#include "dnsabuse/textio.hpp"

namespace dnsabuse::dnsmon {

namespace wire {

namespace {

constexpr uint16_t kClassIn = 1;
constexpr uint16_t kTypeOpt = 41;

void put16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xff));
}

std::string strip_dot(std::string s) {
  while (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::InvalidArgument, "dns message: " + what); }

class Reader {
 public:
  Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  size_t pos() const { return pos_; }
  void seek(size_t p) { pos_ = p; }

  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  uint16_t u16() {
    need(2);
    const uint16_t v = static_cast<uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    const uint32_t hi = u16();
    return hi << 16 | u16();
  }
  const uint8_t* bytes(size_t n) {
    need(n);
    const uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  // Reads a possibly compressed name; pointers must point strictly backwards.
  std::string name() {
    std::string out;
    size_t p = pos_;
    bool jumped = false;
    size_t limit = p;
    for (int hops = 0;; ++hops) {
      if (p >= size_) malformed("name runs past end");
      const uint8_t len = data_[p];
      if ((len & 0xc0) == 0xc0) {
        if (p + 1 >= size_) malformed("truncated pointer");
        const size_t target = static_cast<size_t>(len & 0x3f) << 8 | data_[p + 1];
        if (!jumped) pos_ = p + 2;
        if (target >= limit || hops > 64) malformed("bad compression pointer");
        jumped = true;
        limit = target;
        p = target;
        continue;
      }
      if (len & 0xc0) malformed("unsupported label type");
      if (len == 0) {
        if (!jumped) pos_ = p + 1;
        break;
      }
      if (p + 1 + len > size_) malformed("label runs past end");
      if (!out.empty()) out += '.';
      out.append(reinterpret_cast<const char*>(data_ + p + 1), len);
      if (out.size() > 255) malformed("name too long");
      p += 1 + len;
    }
    return to_lower_ascii(out);
  }

 private:
  void need(size_t n) const {
    if (pos_ + n > size_) malformed("unexpected end");
  }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

std::optional<RrType> type_from_code(uint16_t code) {
  for (auto t : kAllRrTypes) {
    if (wire_code(t) == code) return t;
  }
  return std::nullopt;
}

std::string rdata_text(Reader& r, const uint8_t* data, size_t size, RrType type, uint16_t rdlen) {
  const size_t start = r.pos();
  const size_t end = start + rdlen;
  if (end > size) malformed("rdata runs past end");
  std::string text;
  switch (type) {
    case RrType::A: {
      if (rdlen != 4) malformed("A rdata length");
      char buf[INET_ADDRSTRLEN];
      inet_ntop(AF_INET, data + start, buf, sizeof buf);
      text = buf;
      break;
    }
    case RrType::AAAA: {
      if (rdlen != 16) malformed("AAAA rdata length");
      char buf[INET6_ADDRSTRLEN];
      inet_ntop(AF_INET6, data + start, buf, sizeof buf);
      text = buf;
      break;
    }
    case RrType::CNAME:
    case RrType::NS:
      text = r.name();
      break;
    case RrType::MX: {
      const uint16_t pref = r.u16();
      text = fmt::format("{} {}", pref, r.name());
      break;
    }
    case RrType::TXT:
      while (r.pos() < end) {
        const uint8_t len = r.u8();
        if (r.pos() + len > end) malformed("TXT string runs past rdata");
        text.append(reinterpret_cast<const char*>(r.bytes(len)), len);
      }
      break;
    case RrType::SOA: {
      const auto mname = r.name();
      const auto rname = r.name();
      const uint32_t serial = r.u32(), refresh = r.u32(), retry = r.u32(), expire = r.u32(), minimum = r.u32();
      text = fmt::format("{} {} {} {} {} {} {}", mname, rname, serial, refresh, retry, expire, minimum);
      break;
    }
  }
  if (r.pos() > end) malformed("rdata overrun");
  r.seek(end);
  return text;
}

}  // namespace

std::vector<uint8_t> encode_query(uint16_t id, const std::string& name, RrType type, uint16_t udp_size) {
  std::vector<uint8_t> out;
  put16(out, id);
  put16(out, 0x0100);  // RD
  put16(out, 1);
  put16(out, 0);
  put16(out, 0);
  put16(out, 1);
  for (const auto& label : split(strip_dot(name), '.')) {
    if (label.empty() || label.size() > 63) throw Error(ErrorCode::InvalidLabel, "cannot encode name " + name);
    out.push_back(static_cast<uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.push_back(0);
  put16(out, wire_code(type));
  put16(out, kClassIn);
  // OPT pseudo-record: root owner, class = payload size, zero TTL and rdata.
  out.push_back(0);
  put16(out, kTypeOpt);
  put16(out, udp_size);
  put16(out, 0);
  put16(out, 0);
  put16(out, 0);
  return out;
}

Decoded decode_response(const uint8_t* data, size_t size, const std::string& name, RrType type) {
  Reader r(data, size);
  Decoded out;
  out.id = r.u16();
  const uint16_t flags = r.u16();
  if (!(flags & 0x8000)) malformed("not a response");
  out.truncated = flags & 0x0200;
  const uint16_t qd = r.u16(), an = r.u16();
  r.u16();
  r.u16();
  const int rcode = flags & 0x000f;

  for (int i = 0; i < qd; ++i) {
    r.name();
    r.u16();
    r.u16();
  }
  if (rcode == 3) {
    out.result = QueryResult::of(QueryStatus::Nxdomain);
    return out;
  }
  if (rcode != 0) {
    out.result = QueryResult::of(QueryStatus::ServFail);
    return out;
  }

  // Follow the CNAME chain so that an A query for an alias matches the target.
  std::string owner = to_lower_ascii(strip_dot(name));
  RrSet set{type, {}, 0};
  bool have_ttl = false;
  struct Rec {
    std::string owner;
    std::optional<RrType> type;
    uint32_t ttl;
    std::string text;
  };
  std::vector<Rec> records;
  for (int i = 0; i < an; ++i) {
    Rec rec;
    rec.owner = r.name();
    const uint16_t code = r.u16();
    const uint16_t cls = r.u16();
    rec.ttl = r.u32();
    const uint16_t rdlen = r.u16();
    rec.type = type_from_code(code);
    if (cls != kClassIn || !rec.type) {
      r.bytes(rdlen);
      continue;
    }
    rec.text = rdata_text(r, data, size, *rec.type, rdlen);
    records.push_back(std::move(rec));
  }
  for (size_t hop = 0; hop < 16; ++hop) {
    bool advanced = false;
    for (const auto& rec : records) {
      if (rec.owner != owner) continue;
      if (*rec.type == type) {
        set.values.push_back(rec.text);
        set.ttl = have_ttl ? std::min(set.ttl, rec.ttl) : rec.ttl;
        have_ttl = true;
      } else if (*rec.type == RrType::CNAME && type != RrType::CNAME && !advanced) {
        owner = rec.text;
        advanced = true;
      }
    }
    if (!set.values.empty() || !advanced) break;
  }
  out.result = set.values.empty() ? QueryResult::of(QueryStatus::Empty) : QueryResult::answer(std::move(set));
  return out;
}

Endpoint parse_endpoint(const std::string& address) {
  Endpoint ep;
  auto parse_port = [&](const std::string& s) {
    try {
      size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size() || v <= 0 || v > 65535) throw std::out_of_range("port");
      return static_cast<uint16_t>(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad resolver port in " + address);
    }
  };
  if (!address.empty() && address.front() == '[') {
    const auto close = address.find(']');
    if (close == std::string::npos) throw Error(ErrorCode::InvalidArgument, "bad resolver address " + address);
    ep.host = address.substr(1, close - 1);
    if (close + 1 < address.size()) {
      if (address[close + 1] != ':') throw Error(ErrorCode::InvalidArgument, "bad resolver address " + address);
      ep.port = parse_port(address.substr(close + 2));
    }
  } else if (std::count(address.begin(), address.end(), ':') == 1) {
    const auto colon = address.find(':');
    ep.host = address.substr(0, colon);
    ep.port = parse_port(address.substr(colon + 1));
  } else {
    ep.host = address;
  }
  if (ep.host.empty()) throw Error(ErrorCode::InvalidArgument, "bad resolver address " + address);
  return ep;
}

}  // namespace wire

namespace {

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

struct Address {
  sockaddr_storage storage{};
  socklen_t len = 0;
  int family = AF_INET;
};

Address resolve_endpoint(const wire::Endpoint& ep) {
  Address a;
  auto* v4 = reinterpret_cast<sockaddr_in*>(&a.storage);
  auto* v6 = reinterpret_cast<sockaddr_in6*>(&a.storage);
  if (inet_pton(AF_INET, ep.host.c_str(), &v4->sin_addr) == 1) {
    v4->sin_family = AF_INET;
    v4->sin_port = htons(ep.port);
    a.len = sizeof(sockaddr_in);
    a.family = AF_INET;
  } else if (inet_pton(AF_INET6, ep.host.c_str(), &v6->sin6_addr) == 1) {
    v6->sin6_family = AF_INET6;
    v6->sin6_port = htons(ep.port);
    a.len = sizeof(sockaddr_in6);
    a.family = AF_INET6;
  } else {
    throw Error(ErrorCode::InvalidArgument, "resolver address must be an IP literal: " + ep.host);
  }
  return a;
}

using Deadline = std::chrono::steady_clock::time_point;

bool wait_for(int fd, short events, Deadline deadline) {
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return false;
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc > 0) return true;
    if (rc == 0 || errno != EINTR) return false;
  }
}

bool send_all(int fd, const uint8_t* data, size_t n, Deadline deadline) {
  while (n > 0) {
    if (!wait_for(fd, POLLOUT, deadline)) return false;
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w <= 0) return false;
    data += w;
    n -= static_cast<size_t>(w);
  }
  return true;
}

bool recv_all(int fd, uint8_t* data, size_t n, Deadline deadline) {
  while (n > 0) {
    if (!wait_for(fd, POLLIN, deadline)) return false;
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r <= 0) return false;
    data += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

std::optional<std::vector<uint8_t>> exchange_udp(const Address& addr, const std::vector<uint8_t>& query, uint16_t id,
                                                 Deadline deadline) {
  Socket s(::socket(addr.family, SOCK_DGRAM, 0));
  if (s.fd() < 0) return std::nullopt;
  if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr.storage), addr.len) != 0) return std::nullopt;
  if (::send(s.fd(), query.data(), query.size(), 0) != static_cast<ssize_t>(query.size())) return std::nullopt;
  std::vector<uint8_t> buf(65535);
  while (wait_for(s.fd(), POLLIN, deadline)) {
    const ssize_t n = ::recv(s.fd(), buf.data(), buf.size(), 0);
    if (n < 0) return std::nullopt;
    // Ignore stray datagrams that do not carry our id.
    if (n >= 2 && (buf[0] << 8 | buf[1]) == id) {
      buf.resize(static_cast<size_t>(n));
      return buf;
    }
  }
  return std::nullopt;
}

std::optional<std::vector<uint8_t>> exchange_tcp(const Address& addr, const std::vector<uint8_t>& query,
                                                 Deadline deadline) {
  Socket s(::socket(addr.family, SOCK_STREAM | SOCK_NONBLOCK, 0));
  if (s.fd() < 0) return std::nullopt;
  if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr.storage), addr.len) != 0) {
    if (errno != EINPROGRESS || !wait_for(s.fd(), POLLOUT, deadline)) return std::nullopt;
    int err = 0;
    socklen_t len = sizeof err;
    if (::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0) return std::nullopt;
  }
  std::vector<uint8_t> framed;
  framed.push_back(static_cast<uint8_t>(query.size() >> 8));
  framed.push_back(static_cast<uint8_t>(query.size() & 0xff));
  framed.insert(framed.end(), query.begin(), query.end());
  if (!send_all(s.fd(), framed.data(), framed.size(), deadline)) return std::nullopt;
  uint8_t len_buf[2];
  if (!recv_all(s.fd(), len_buf, 2, deadline)) return std::nullopt;
  std::vector<uint8_t> buf(static_cast<size_t>(len_buf[0] << 8 | len_buf[1]));
  if (!recv_all(s.fd(), buf.data(), buf.size(), deadline)) return std::nullopt;
  return buf;
}

}  // namespace

QueryResult StubResolver::query(const VantagePoint& vantage, const std::string& domain, RrType type) {
  const auto addr = resolve_endpoint(wire::parse_endpoint(vantage.resolver_address));
  const uint16_t id = next_id_.fetch_add(1);
  const auto message = wire::encode_query(id, domain, type);
  const auto deadline = std::chrono::steady_clock::now() + timeout_;

  try {
    auto reply = exchange_udp(addr, message, id, deadline);
    if (!reply) return QueryResult::of(QueryStatus::Timeout);
    auto decoded = wire::decode_response(reply->data(), reply->size(), domain, type);
    if (!decoded.truncated) return decoded.result;

    reply = exchange_tcp(addr, message, deadline);
    if (!reply) return QueryResult::of(QueryStatus::Timeout);
    decoded = wire::decode_response(reply->data(), reply->size(), domain, type);
    if (decoded.id != id) return QueryResult::of(QueryStatus::ServFail);
    return decoded.result;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    // An unparseable answer is treated like a server failure and retried.
    return QueryResult::of(QueryStatus::ServFail);
  }
}

}  // namespace dnsabuse::dnsmon
