#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "servnet/error.hpp"
#include "servnet/handle.hpp"
#include "servnet/value.hpp"
#include "servnet/xml.hpp"

namespace servnet::wire {

enum class Encoding { Structured, Opaque };

/// A parameter or result together with the encoding it travels in.
///
/// Structured values become a typed XML tree (`<i>42</i>`, `<l>..</l>`,
/// `<m><e k="..">..</e></m>`); blobs and non-finite floats are outside that
/// lattice. Opaque values are serialized to a versioned binary form and sent
/// base64-encoded as `<o len="N">..</o>`, which accepts every Value.
struct ParamValue {
  Encoding encoding = Encoding::Structured;
  Value value;

  bool operator==(const ParamValue&) const = default;
};

inline constexpr unsigned char kOpaqueFormatVersion = 1;

/// Throws Error(UnsupportedType) when a Structured value is outside the lattice.
ParamValue encode_param(Value value, Encoding mode);

/// Structured when the value fits the XML lattice, Opaque otherwise.
ParamValue encode_param_auto(Value value);

xml::Element param_to_xml(const ParamValue& p);
/// Throws Error(DecodeError).
ParamValue param_from_xml(const xml::Element& element);

std::string serialize_opaque(const Value& value);
/// Throws Error(DecodeError).
Value deserialize_opaque(std::string_view bytes);

/// One RPC invocation.
struct CallEnvelope {
  std::string message_id;
  Handle target;
  std::string method;
  std::vector<ParamValue> params;
  std::optional<std::string> credential;
  std::optional<Handle> reply_to;

  bool operator==(const CallEnvelope&) const = default;
};

/// Outcome of a call: either a result or a fault naming the error kind.
struct ReplyEnvelope {
  std::string message_id;
  std::optional<ParamValue> result;
  ErrorKind fault_kind = ErrorKind::MethodFault;
  std::string fault_message;

  bool ok() const noexcept { return result.has_value(); }
  bool operator==(const ReplyEnvelope&) const = default;
};

std::string encode_envelope(const CallEnvelope& e);
/// Throws Error(DecodeError) for malformed XML or schema violations.
CallEnvelope decode_envelope(std::string_view bytes);

std::string encode_reply(const ReplyEnvelope& r);
ReplyEnvelope decode_reply(std::string_view bytes);

/// Canonical XML bytes of a single parameter value.
std::string encode_param_bytes(const ParamValue& p);

}  // namespace servnet::wire
