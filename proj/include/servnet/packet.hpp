#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace servnet::wire {

/// One size-bounded fragment of an encoded message.
struct Packet {
  std::string message_id;
  std::size_t index = 0;
  std::size_t total = 1;
  std::string payload;

  bool operator==(const Packet&) const = default;
};

/// Splits msg into max(1, ceil(len/max_size)) packets. An empty message yields
/// a single empty packet. Throws Error(BadPacketSize) when max_size < 1.
std::vector<Packet> split_packets(std::string_view message_id, std::string_view msg,
                                  std::size_t max_size);

/// Rebuilds the original bytes from a complete packet set in any order.
/// Identical duplicates are accepted. Throws Error(MissingPacket) or
/// Error(ConflictingPackets).
std::string reassemble_packets(const std::vector<Packet>& packets);

/// Keyed store of partially received messages shared by concurrent request
/// handlers. Insertion and completion checks are atomic.
class ReassemblyBuffer {
 public:
  using Clock = std::chrono::steady_clock;

  explicit ReassemblyBuffer(std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : timeout_(timeout) {}

  /// Adds a packet. Returns the full message once every index has arrived
  /// and forgets the entry. Throws Error(ConflictingPackets) on a duplicate
  /// index with a different payload or a mismatched total.
  std::optional<std::string> insert(Packet packet, Clock::time_point now = Clock::now());

  /// Drops entries idle for longer than the timeout and returns their ids.
  std::vector<std::string> expire(Clock::time_point now = Clock::now());

  std::size_t pending() const;

 private:
  struct Partial {
    std::size_t total = 0;
    std::map<std::size_t, std::string> parts;
    Clock::time_point last_seen;
  };

  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  std::map<std::string, Partial> partial_;
};

}  // namespace servnet::wire
