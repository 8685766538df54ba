#include "servnet/error.hpp"

#include <array>
#include <utility>

namespace servnet {
namespace {

constexpr std::array<std::pair<ErrorKind, std::string_view>, 35> kNames{{
    {ErrorKind::UnknownParent, "UnknownParent"},
    {ErrorKind::DuplicateChildName, "DuplicateChildName"},
    {ErrorKind::InvalidServiceName, "InvalidServiceName"},
    {ErrorKind::UnknownService, "UnknownService"},
    {ErrorKind::ForeignNode, "ForeignNode"},
    {ErrorKind::CrossNetworkPermanentLink, "CrossNetworkPermanentLink"},
    {ErrorKind::MalformedUri, "MalformedUri"},
    {ErrorKind::ParseError, "ParseError"},
    {ErrorKind::EncodeError, "EncodeError"},
    {ErrorKind::DecodeError, "DecodeError"},
    {ErrorKind::BadPacketSize, "BadPacketSize"},
    {ErrorKind::MissingPacket, "MissingPacket"},
    {ErrorKind::ConflictingPackets, "ConflictingPackets"},
    {ErrorKind::UnsupportedType, "UnsupportedType"},
    {ErrorKind::UnknownServiceKind, "UnknownServiceKind"},
    {ErrorKind::ConstructorMismatch, "ConstructorMismatch"},
    {ErrorKind::UnknownMethod, "UnknownMethod"},
    {ErrorKind::AccessDenied, "AccessDenied"},
    {ErrorKind::MethodFault, "MethodFault"},
    {ErrorKind::TransportError, "TransportError"},
    {ErrorKind::RemoteFault, "RemoteFault"},
    {ErrorKind::InvalidAdminDoc, "InvalidAdminDoc"},
    {ErrorKind::SchemaViolation, "SchemaViolation"},
    {ErrorKind::SharedIdConflict, "SharedIdConflict"},
    {ErrorKind::UncoveredMethod, "UncoveredMethod"},
    {ErrorKind::InvalidConfig, "InvalidConfig"},
    {ErrorKind::NoBehaviorInstalled, "NoBehaviorInstalled"},
    {ErrorKind::PeerUnreachable, "PeerUnreachable"},
    {ErrorKind::EmptyNetwork, "EmptyNetwork"},
    {ErrorKind::DemoNotCreated, "DemoNotCreated"},
    {ErrorKind::IllegalTransition, "IllegalTransition"},
    {ErrorKind::EmptyChain, "EmptyChain"},
    {ErrorKind::UnknownField, "UnknownField"},
    {ErrorKind::UnknownRecord, "UnknownRecord"},
    {ErrorKind::BadArgument, "BadArgument"},
}};

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "Unknown";
}

std::optional<ErrorKind> error_kind_from_string(std::string_view name) noexcept {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

}  // namespace servnet
