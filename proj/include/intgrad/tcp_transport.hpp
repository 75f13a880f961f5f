#ifndef INTGRAD_TCP_TRANSPORT_HPP
#define INTGRAD_TCP_TRANSPORT_HPP

// Star-topology aggregation over TCP: n workers connect to one aggregator,
// which sums integer frames (64-bit accumulation, checked narrowing back to
// the declared width) or concatenates float frames by worker id, then sends
// every worker the result. One round is in flight at a time.

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "intgrad/transport.hpp"

namespace intgrad {

struct TcpAggregatorOptions {
  std::string listen = "127.0.0.1:0";  // port 0 picks an ephemeral port
  std::uint32_t workers = 1;
  int width = 32;        // declared gradient width; rounds longer than the
                         // 2-element counter round must match it
  int timeout_ms = 120000;
};

class TcpAggregator {
 public:
  explicit TcpAggregator(TcpAggregatorOptions opt);
  ~TcpAggregator();

  // bind + listen; address() is valid afterwards
  void bind();
  std::string address() const;

  // serve one session in the calling thread (CLI entry point)
  void run();

  // serve one session on a background thread (tests / auto-spawned)
  void start();
  void join();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

// per-worker client handle
std::unique_ptr<Transport> connect_tcp(const std::string& address,
                                       std::uint32_t worker_id,
                                       std::uint32_t workers,
                                       int timeout_ms = 120000);

}  // namespace intgrad

#endif  // INTGRAD_TCP_TRANSPORT_HPP
