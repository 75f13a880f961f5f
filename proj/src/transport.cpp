#include "intgrad/transport.hpp"

#include <barrier>
#include <bit>
#include <string>

namespace intgrad {

ClipOutcome clip_for_width(IntVector& q, std::uint32_t n) {
  if (n == 0) throw ProtocolError("clip: worker count must be positive");
  ClipOutcome out;
  out.bound = width_max(q.width) / static_cast<std::int64_t>(n);
  for (auto& v : q.values) {
    if (v > out.bound) {
      v = out.bound;
      ++out.clipped;
    } else if (v < -out.bound) {
      v = -out.bound;
      ++out.clipped;
    }
  }
  return out;
}

int bits_for_magnitude(std::int64_t max_abs_int) {
  if (max_abs_int <= 0) return 1;
  return 1 + std::bit_width(static_cast<std::uint64_t>(max_abs_int));
}

std::int64_t max_abs_int(const IntVector& v) {
  std::int64_t m = 0;
  for (std::int64_t x : v.values) {
    const std::int64_t a = x < 0 ? -x : x;
    if (a > m) m = a;
  }
  return m;
}

std::vector<double> average_gathered(std::span<const double> concat, std::uint32_t n) {
  const std::size_t d = concat.size() / n;
  std::vector<double> out(d, 0.0);
  for (std::uint32_t w = 0; w < n; ++w)
    for (std::size_t j = 0; j < d; ++j) out[j] += concat[w * d + j];
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= inv;
  return out;
}

// ---------------------------------------------------------------------------

struct InProcessHub::Impl {
  struct Slot {
    const std::int64_t* ints = nullptr;
    const double* floats = nullptr;
    std::size_t len = 0;
    std::uint64_t iteration = 0;
    std::uint8_t width = 0;
    bool abandoned = false;
  };

  std::uint32_t n;
  std::vector<Slot> slots;
  std::barrier<> gate;

  explicit Impl(std::uint32_t n_) : n(n_), slots(n_), gate(n_) {}
};

namespace {

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(std::shared_ptr<InProcessHub::Impl> hub, std::uint32_t id)
      : hub_(std::move(hub)), id_(id) {}

  // A worker that unwinds (exception, early exit) must not strand its peers
  // at the barrier: mark the slot dead and drop out of all future phases so
  // peers fail with a ProtocolError instead of deadlocking.
  ~InProcessTransport() override {
    auto& slot = hub_->slots[id_];
    slot.ints = nullptr;
    slot.floats = nullptr;
    slot.len = 0;
    slot.abandoned = true;
    hub_->gate.arrive_and_drop();
  }

  std::uint32_t workers() const override { return hub_->n; }
  std::uint32_t worker_id() const override { return id_; }

  IntVector allreduce_sum(const IntVector& v, std::uint64_t iteration,
                          std::uint32_t) override {
    auto& slot = hub_->slots[id_];
    slot = {v.values.data(), nullptr, v.values.size(), iteration,
            static_cast<std::uint8_t>(v.width)};
    hub_->gate.arrive_and_wait();
    // identical validation and summation on every worker: exact integer
    // arithmetic makes the redundancy free of divergence
    IntVector out;
    out.width = v.width;
    out.values.assign(v.values.size(), 0);
    validate(iteration, static_cast<std::uint8_t>(v.width), v.values.size());
    for (std::uint32_t w = 0; w < hub_->n; ++w) {
      const auto& s = hub_->slots[w];
      for (std::size_t j = 0; j < s.len; ++j) out.values[j] += s.ints[j];
    }
    const std::int64_t cap = width_max(v.width);
    for (std::size_t j = 0; j < out.values.size(); ++j)
      if (out.values[j] > cap || out.values[j] < -cap)
        throw ProtocolError("aggregated value at coordinate " + std::to_string(j) +
                            " overflows width " + std::to_string(int(v.width)) +
                            " (clip missing upstream?)");
    hub_->gate.arrive_and_wait();
    return out;
  }

  std::vector<double> allgather(std::span<const double> v,
                                std::uint64_t iteration) override {
    auto& slot = hub_->slots[id_];
    slot = {nullptr, v.data(), v.size(), iteration, kWidthF64};
    hub_->gate.arrive_and_wait();
    validate(iteration, kWidthF64, v.size());
    std::vector<double> out;
    out.reserve(v.size() * hub_->n);
    for (std::uint32_t w = 0; w < hub_->n; ++w) {
      const auto& s = hub_->slots[w];
      out.insert(out.end(), s.floats, s.floats + s.len);
    }
    hub_->gate.arrive_and_wait();
    return out;
  }

 private:
  void validate(std::uint64_t iteration, std::uint8_t width, std::size_t len) const {
    for (std::uint32_t w = 0; w < hub_->n; ++w) {
      const auto& s = hub_->slots[w];
      if (s.abandoned)
        throw ProtocolError("worker " + std::to_string(w) + " left the session");
      if (s.iteration != iteration)
        throw ProtocolError("worker " + std::to_string(w) + " is at iteration " +
                            std::to_string(s.iteration) + ", expected " +
                            std::to_string(iteration));
      if (s.width != width)
        throw ProtocolError("worker " + std::to_string(w) + " sent width " +
                            std::to_string(int(s.width)) + ", expected " +
                            std::to_string(int(width)));
      if (s.len != len)
        throw ProtocolError("worker " + std::to_string(w) + " sent " +
                            std::to_string(s.len) + " elements, expected " +
                            std::to_string(len));
    }
  }

  std::shared_ptr<InProcessHub::Impl> hub_;
  std::uint32_t id_;
};

}  // namespace

InProcessHub::InProcessHub(std::uint32_t n) : impl_(std::make_shared<Impl>(n)) {
  if (n == 0) throw ProtocolError("transport needs at least one worker");
}

InProcessHub::~InProcessHub() = default;

// one handle per worker per hub: the handle's destructor permanently retires
// that worker's barrier membership
std::unique_ptr<Transport> InProcessHub::handle(std::uint32_t worker) {
  if (worker >= impl_->n)
    throw ProtocolError("worker id " + std::to_string(worker) + " out of range");
  return std::make_unique<InProcessTransport>(impl_, worker);
}

}  // namespace intgrad
