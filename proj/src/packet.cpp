#include "servnet/packet.hpp"

#include "servnet/error.hpp"

namespace servnet::wire {

std::vector<Packet> split_packets(std::string_view message_id, std::string_view msg,
                                  std::size_t max_size) {
  if (max_size < 1) fail(ErrorKind::BadPacketSize, "packet size must be at least 1");
  const std::size_t total = msg.empty() ? 1 : (msg.size() + max_size - 1) / max_size;
  std::vector<Packet> packets;
  packets.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto offset = i * max_size;
    const auto chunk = offset < msg.size() ? msg.substr(offset, max_size) : std::string_view{};
    packets.push_back(Packet{std::string(message_id), i, total, std::string(chunk)});
  }
  return packets;
}

std::string reassemble_packets(const std::vector<Packet>& packets) {
  if (packets.empty()) fail(ErrorKind::MissingPacket, "no packets to reassemble");
  const auto& first = packets.front();
  std::vector<const Packet*> slots(first.total, nullptr);
  for (const auto& p : packets) {
    if (p.message_id != first.message_id || p.total != first.total) {
      fail(ErrorKind::ConflictingPackets, "packets belong to different messages");
    }
    if (p.index >= p.total) fail(ErrorKind::ConflictingPackets, "packet index out of range");
    auto& slot = slots[p.index];
    if (slot && slot->payload != p.payload) {
      fail(ErrorKind::ConflictingPackets, "duplicate packet index " + std::to_string(p.index) +
                                              " with a different payload");
    }
    slot = &p;
  }
  std::string msg;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) fail(ErrorKind::MissingPacket, "packet " + std::to_string(i) + " missing");
    msg += slots[i]->payload;
  }
  return msg;
}

std::optional<std::string> ReassemblyBuffer::insert(Packet packet, Clock::time_point now) {
  if (packet.total < 1 || packet.index >= packet.total) {
    fail(ErrorKind::ConflictingPackets, "packet index out of range");
  }
  if (packet.total == 1) return std::move(packet.payload);

  std::lock_guard lock(mutex_);
  auto& entry = partial_[packet.message_id];
  if (entry.total == 0) entry.total = packet.total;
  if (entry.total != packet.total) {
    fail(ErrorKind::ConflictingPackets, "packet total changed for message " + packet.message_id);
  }
  entry.last_seen = now;
  const auto [it, inserted] = entry.parts.try_emplace(packet.index, std::move(packet.payload));
  if (!inserted && it->second != packet.payload) {
    fail(ErrorKind::ConflictingPackets, "duplicate packet index with a different payload");
  }
  if (entry.parts.size() < entry.total) return std::nullopt;

  std::string msg;
  for (auto& [index, part] : entry.parts) msg += part;
  partial_.erase(packet.message_id);
  return msg;
}

std::vector<std::string> ReassemblyBuffer::expire(Clock::time_point now) {
  std::lock_guard lock(mutex_);
  std::vector<std::string> dropped;
  for (auto it = partial_.begin(); it != partial_.end();) {
    if (now - it->second.last_seen > timeout_) {
      dropped.push_back(it->first);
      it = partial_.erase(it);
    } else {
      ++it;
    }
  }
  return dropped;
}

std::size_t ReassemblyBuffer::pending() const {
  std::lock_guard lock(mutex_);
  return partial_.size();
}

}  // namespace servnet::wire
