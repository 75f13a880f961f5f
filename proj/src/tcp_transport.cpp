#include "intgrad/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <optional>
#include <vector>

namespace intgrad {

namespace {

struct Addr {
  std::string host;
  std::uint16_t port;
};

Addr parse_address(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos)
    throw TransportError("address '" + s + "' must look like host:port");
  Addr a;
  a.host = s.substr(0, colon);
  const std::string p = s.substr(colon + 1);
  char* end = nullptr;
  const long v = std::strtol(p.c_str(), &end, 10);
  if (end == p.c_str() || *end != '\0' || v < 0 || v > 65535)
    throw TransportError("bad port in address '" + s + "'");
  a.port = static_cast<std::uint16_t>(v);
  return a;
}

sockaddr_in make_sockaddr(const Addr& a) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(a.port);
  const std::string host = a.host == "localhost" ? "127.0.0.1" : a.host;
  if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw TransportError("cannot parse IPv4 host '" + a.host + "'");
  return sa;
}

void set_timeout(int fd, int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void full_write(int fd, const std::uint8_t* p, std::size_t len, const char* who) {
  while (len > 0) {
    const ssize_t w = send(fd, p, len, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string(who) + ": send failed: " + std::strerror(errno));
    }
    p += w;
    len -= static_cast<std::size_t>(w);
  }
}

// reads exactly len bytes; returns false on clean EOF at offset 0
bool full_read(int fd, std::uint8_t* p, std::size_t len, const char* who) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t r = recv(fd, p + got, len - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        throw TransportError(std::string(who) + ": timed out waiting for data");
      throw TransportError(std::string(who) + ": recv failed: " + std::strerror(errno));
    }
    if (r == 0) {
      if (got == 0) return false;
      throw TransportError(std::string(who) + ": connection closed mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void write_frame(int fd, const Frame& f, const char* who) {
  const auto bytes = encode_frame(f);
  full_write(fd, bytes.data(), bytes.size(), who);
}

std::optional<Frame> read_frame(int fd, const char* who) {
  std::uint8_t head[kFrameHeaderSize];
  if (!full_read(fd, head, sizeof head, who)) return std::nullopt;
  const FrameHeader h = decode_header({head, sizeof head});
  std::vector<std::uint8_t> buf(kFrameHeaderSize + h.payload_bytes());
  std::memcpy(buf.data(), head, sizeof head);
  if (h.payload_bytes() > 0 &&
      !full_read(fd, buf.data() + kFrameHeaderSize, h.payload_bytes(), who))
    throw TransportError(std::string(who) + ": connection closed mid-frame");
  return decode_frame(buf);
}

struct FdGuard {
  int fd = -1;
  FdGuard() = default;
  explicit FdGuard(int f) : fd(f) {}
  FdGuard(FdGuard&& o) noexcept : fd(o.fd) { o.fd = -1; }
  FdGuard& operator=(FdGuard&& o) noexcept {
    if (this != &o) {
      reset();
      fd = o.fd;
      o.fd = -1;
    }
    return *this;
  }
  FdGuard(const FdGuard&) = delete;
  FdGuard& operator=(const FdGuard&) = delete;
  void reset() {
    if (fd >= 0) close(fd);
    fd = -1;
  }
  ~FdGuard() { reset(); }
};

}  // namespace

// ---------------------------------------------------------------------------
// aggregator

struct TcpAggregator::Impl {
  TcpAggregatorOptions opt;
  FdGuard listen_fd;
  std::uint16_t bound_port = 0;
  std::string bound_host;
  std::exception_ptr error;

  void bind_listen() {
    const Addr a = parse_address(opt.listen);
    FdGuard fd(socket(AF_INET, SOCK_STREAM, 0));
    if (fd.fd < 0) throw TransportError(std::string("aggregator: socket: ") + std::strerror(errno));
    int one = 1;
    setsockopt(fd.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa = make_sockaddr(a);
    if (::bind(fd.fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
      throw TransportError("aggregator: cannot bind " + opt.listen + ": " +
                           std::strerror(errno));
    if (listen(fd.fd, static_cast<int>(opt.workers)) != 0)
      throw TransportError(std::string("aggregator: listen: ") + std::strerror(errno));
    // accept() honors the receive timeout, so a session whose workers never
    // arrive gives up instead of blocking forever
    set_timeout(fd.fd, opt.timeout_ms);
    sockaddr_in got{};
    socklen_t len = sizeof got;
    getsockname(fd.fd, reinterpret_cast<sockaddr*>(&got), &len);
    bound_port = ntohs(got.sin_port);
    bound_host = a.host == "localhost" ? "127.0.0.1" : a.host;
    listen_fd = std::move(fd);
  }

  void serve() {
    std::vector<FdGuard> conns;
    conns.reserve(opt.workers);
    for (std::uint32_t i = 0; i < opt.workers; ++i) {
      const int c = accept(listen_fd.fd, nullptr, nullptr);
      if (c < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK)
          throw TransportError("aggregator: timed out waiting for worker " + std::to_string(i) +
                               " of " + std::to_string(opt.workers) + " to connect");
        throw TransportError(std::string("aggregator: accept: ") + std::strerror(errno));
      }
      set_timeout(c, opt.timeout_ms);
      set_nodelay(c);
      conns.emplace_back(c);
    }

    std::vector<std::int64_t> sum;
    for (;;) {
      std::vector<Frame> frames(opt.workers);
      std::uint32_t eofs = 0;
      for (std::uint32_t i = 0; i < opt.workers; ++i) {
        auto f = read_frame(conns[i].fd, "aggregator");
        if (!f) {
          ++eofs;
          continue;
        }
        frames[i] = std::move(*f);
        if (eofs > 0)
          throw ProtocolError("aggregator: worker closed mid-session while others continue");
      }
      if (eofs == opt.workers) return;  // clean end of session
      if (eofs != 0)
        throw ProtocolError("aggregator: " + std::to_string(eofs) +
                            " worker(s) closed mid-session");

      const Frame& first = frames[0];
      std::vector<bool> seen(opt.workers, false);
      for (std::uint32_t i = 0; i < opt.workers; ++i) {
        const Frame& f = frames[i];
        if (f.iteration != first.iteration)
          throw ProtocolError("aggregator: worker " + std::to_string(f.worker_id) +
                              " is at iteration " + std::to_string(f.iteration) +
                              ", expected " + std::to_string(first.iteration));
        if (f.width != first.width)
          throw ProtocolError("aggregator: worker " + std::to_string(f.worker_id) +
                              " sent width " + std::to_string(int(f.width)) +
                              ", expected " + std::to_string(int(first.width)));
        if (f.elements() != first.elements())
          throw ProtocolError("aggregator: worker " + std::to_string(f.worker_id) +
                              " sent " + std::to_string(f.elements()) +
                              " elements, expected " + std::to_string(first.elements()));
        if (f.worker_id >= opt.workers || seen[f.worker_id])
          throw ProtocolError("aggregator: bad or duplicate worker id " +
                              std::to_string(f.worker_id));
        seen[f.worker_id] = true;
      }
      if (first.width != kWidthF64 && first.elements() > 2 &&
          int(first.width) != opt.width)
        throw ProtocolError("aggregator: gradient round width " +
                            std::to_string(int(first.width)) +
                            " does not match declared width " +
                            std::to_string(opt.width));

      Frame reply;
      reply.iteration = first.iteration;
      reply.worker_id = kAggregatorId;
      reply.block_count = first.block_count;
      if (first.width == kWidthF64) {
        // gather: concatenate payloads ordered by worker id, no arithmetic
        reply.width = kWidthF64;
        reply.floats.reserve(first.elements() * opt.workers);
        std::vector<const Frame*> by_id(opt.workers);
        for (const Frame& f : frames) by_id[f.worker_id] = &f;
        for (std::uint32_t w = 0; w < opt.workers; ++w)
          reply.floats.insert(reply.floats.end(), by_id[w]->floats.begin(),
                              by_id[w]->floats.end());
      } else {
        reply.width = first.width;
        sum.assign(first.elements(), 0);
        for (const Frame& f : frames)
          for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += f.ints[j];
        const std::int64_t cap =
            width_max(first.width == 8 ? IntWidth::W8 : IntWidth::W32);
        for (std::size_t j = 0; j < sum.size(); ++j)
          if (sum[j] > cap || sum[j] < -cap)
            throw ProtocolError("aggregator: sum at coordinate " + std::to_string(j) +
                                " overflows width " + std::to_string(int(first.width)));
        reply.ints = sum;
      }
      for (std::uint32_t i = 0; i < opt.workers; ++i)
        write_frame(conns[i].fd, reply, "aggregator");
    }
  }
};

TcpAggregator::TcpAggregator(TcpAggregatorOptions opt)
    : impl_(std::make_unique<Impl>()) {
  if (opt.workers == 0) throw TransportError("aggregator needs at least one worker");
  if (opt.width != 8 && opt.width != 32)
    throw TransportError("aggregator width must be 8 or 32");
  impl_->opt = std::move(opt);
}

TcpAggregator::~TcpAggregator() {
  if (thread_.joinable()) thread_.join();
}

void TcpAggregator::bind() { impl_->bind_listen(); }

std::string TcpAggregator::address() const {
  return impl_->bound_host + ":" + std::to_string(impl_->bound_port);
}

void TcpAggregator::run() {
  if (impl_->listen_fd.fd < 0) bind();
  impl_->serve();
}

void TcpAggregator::start() {
  if (impl_->listen_fd.fd < 0) bind();
  thread_ = std::thread([this] {
    try {
      impl_->serve();
    } catch (...) {
      impl_->error = std::current_exception();
    }
  });
}

void TcpAggregator::join() {
  if (thread_.joinable()) thread_.join();
  if (impl_->error) {
    auto e = impl_->error;
    impl_->error = nullptr;
    std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// worker side

namespace {

class TcpWorkerTransport final : public Transport {
 public:
  TcpWorkerTransport(FdGuard fd, std::uint32_t id, std::uint32_t n)
      : fd_(std::move(fd)), id_(id), n_(n) {}

  std::uint32_t workers() const override { return n_; }
  std::uint32_t worker_id() const override { return id_; }

  IntVector allreduce_sum(const IntVector& v, std::uint64_t iteration,
                          std::uint32_t block_count) override {
    Frame f;
    f.width = static_cast<std::uint8_t>(v.width);
    f.iteration = iteration;
    f.worker_id = id_;
    f.block_count = block_count;
    f.ints = v.values;
    write_frame(fd_.fd, f, "worker");
    const Frame r = round_trip(iteration, f.width, v.values.size() * n_);
    IntVector out;
    out.width = v.width;
    out.values = r.ints;
    if (out.values.size() != v.values.size())
      throw ProtocolError("worker: reply has " + std::to_string(out.values.size()) +
                          " elements, expected " + std::to_string(v.values.size()));
    return out;
  }

  std::vector<double> allgather(std::span<const double> v,
                                std::uint64_t iteration) override {
    Frame f;
    f.width = kWidthF64;
    f.iteration = iteration;
    f.worker_id = id_;
    f.block_count = 1;
    f.floats.assign(v.begin(), v.end());
    write_frame(fd_.fd, f, "worker");
    const Frame r = round_trip(iteration, kWidthF64, v.size() * n_);
    if (r.floats.size() != v.size() * n_)
      throw ProtocolError("worker: gather reply has " + std::to_string(r.floats.size()) +
                          " elements, expected " + std::to_string(v.size() * n_));
    return r.floats;
  }

 private:
  Frame round_trip(std::uint64_t iteration, std::uint8_t width, std::size_t) {
    auto r = read_frame(fd_.fd, "worker");
    if (!r) throw TransportError("worker: aggregator closed the connection");
    if (r->iteration != iteration)
      throw ProtocolError("worker: reply iteration " + std::to_string(r->iteration) +
                          ", expected " + std::to_string(iteration));
    if (r->width != width)
      throw ProtocolError("worker: reply width " + std::to_string(int(r->width)) +
                          ", expected " + std::to_string(int(width)));
    if (r->worker_id != kAggregatorId)
      throw ProtocolError("worker: reply not from aggregator");
    return std::move(*r);
  }

  FdGuard fd_;
  std::uint32_t id_;
  std::uint32_t n_;
};

}  // namespace

std::unique_ptr<Transport> connect_tcp(const std::string& address,
                                       std::uint32_t worker_id,
                                       std::uint32_t workers, int timeout_ms) {
  const Addr a = parse_address(address);
  FdGuard fd(socket(AF_INET, SOCK_STREAM, 0));
  if (fd.fd < 0) throw TransportError(std::string("worker: socket: ") + std::strerror(errno));
  sockaddr_in sa = make_sockaddr(a);
  if (connect(fd.fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
    throw TransportError("worker " + std::to_string(worker_id) + ": cannot connect to " +
                         address + ": " + std::strerror(errno));
  set_timeout(fd.fd, timeout_ms);
  set_nodelay(fd.fd);
  return std::make_unique<TcpWorkerTransport>(std::move(fd), worker_id, workers);
}

}  // namespace intgrad
