#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace servnet {

enum class ErrorKind {
  // core model
  UnknownParent,
  DuplicateChildName,
  InvalidServiceName,
  UnknownService,
  ForeignNode,
  CrossNetworkPermanentLink,
  MalformedUri,
  ParseError,
  // wire protocol
  EncodeError,
  DecodeError,
  BadPacketSize,
  MissingPacket,
  ConflictingPackets,
  UnsupportedType,
  // node server
  UnknownServiceKind,
  ConstructorMismatch,
  UnknownMethod,
  AccessDenied,
  MethodFault,
  TransportError,
  RemoteFault,
  // metadata / access
  InvalidAdminDoc,
  SchemaViolation,
  SharedIdConflict,
  UncoveredMethod,
  InvalidConfig,
  // autonomic
  NoBehaviorInstalled,
  PeerUnreachable,
  EmptyNetwork,
  DemoNotCreated,
  // trust
  IllegalTransition,
  // concepts
  EmptyChain,
  UnknownField,
  UnknownRecord,
  // generic
  BadArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;
std::optional<ErrorKind> error_kind_from_string(std::string_view name) noexcept;

/// Exception carrying a machine-readable kind. RemoteFault errors also carry
/// the kind reported by the remote node.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Error(ErrorKind kind, ErrorKind remote_kind, const std::string& message)
      : std::runtime_error(message), kind_(kind), remote_kind_(remote_kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<ErrorKind> remote_kind() const noexcept { return remote_kind_; }

 private:
  ErrorKind kind_;
  std::optional<ErrorKind> remote_kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace servnet
