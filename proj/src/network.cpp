#include "servnet/network.hpp"

#include <algorithm>
#include <deque>
#include <mutex>

#include "servnet/error.hpp"

namespace servnet {

Network::Network(std::string base_uri) : base_uri_(std::move(base_uri)) {
  if (!is_valid_base_uri(base_uri_)) fail(ErrorKind::MalformedUri, "bad base URI '" + base_uri_ + "'");
}

const ServiceNode* Network::find_in(const ServiceNode& root, const std::vector<std::string>& path) noexcept {
  const ServiceNode* node = &root;
  for (const auto& name : path) {
    const auto it = node->children.find(name);
    if (it == node->children.end()) return nullptr;
    node = it->second.get();
  }
  return node;
}

void Network::check_local(const Handle& h) const {
  if (h.base_uri != base_uri_) {
    fail(ErrorKind::ForeignNode, "handle base '" + h.base_uri + "' is not this node ('" + base_uri_ + "')");
  }
}

ServiceNode& Network::find_service(const Handle& h) const {
  check_local(h);
  const auto* node = h.is_root() ? nullptr : find_in(root_, h.path);
  if (!node) fail(ErrorKind::UnknownService, "no service at '" + h.path_string() + "'");
  return const_cast<ServiceNode&>(*node);
}

Handle Network::add_nested(const Handle& parent, std::string name, ServiceNode node) {
  check_local(parent);
  if (!is_valid_service_name(name)) {
    fail(ErrorKind::InvalidServiceName, "service names must be non-empty without '<', '>' or '/': '" + name + "'");
  }
  std::unique_lock lock(mutex_);
  auto* p = const_cast<ServiceNode*>(find_in(root_, parent.path));
  if (!p) fail(ErrorKind::UnknownParent, "no parent at '" + parent.path_string() + "'");
  if (p->children.contains(name)) {
    fail(ErrorKind::DuplicateChildName, "'" + name + "' already exists under '" + parent.path_string() + "'");
  }
  auto child = parent.child(name);
  p->children.emplace(std::move(name), std::make_shared<ServiceNode>(std::move(node)));
  ++version_;
  return child;
}

void Network::remove_nested(const Handle& h) {
  std::unique_lock lock(mutex_);
  find_service(h);
  auto* parent = const_cast<ServiceNode*>(find_in(root_, h.parent().path));
  parent->children.erase(h.path.back());
  const auto dangling = [&](const Handle& target) {
    return target.path.size() >= h.path.size() &&
           std::equal(h.path.begin(), h.path.end(), target.path.begin());
  };
  std::deque<ServiceNode*> queue{&root_};
  while (!queue.empty()) {
    auto* node = queue.front();
    queue.pop_front();
    std::erase_if(node->permanent_links, dangling);
    for (auto& [name, c] : node->children) queue.push_back(c.get());
  }
  ++version_;
}

std::shared_ptr<const ServiceNode> Network::resolve_handle(const Handle& h) const {
  check_local(h);
  std::shared_lock lock(mutex_);
  if (h.is_root()) fail(ErrorKind::UnknownService, "the network root is not a service");
  const ServiceNode* node = &root_;
  std::shared_ptr<const ServiceNode> found;
  for (const auto& name : h.path) {
    const auto it = node->children.find(name);
    if (it == node->children.end()) fail(ErrorKind::UnknownService, "no service at '" + h.path_string() + "'");
    found = it->second;
    node = found.get();
  }
  return found;
}

bool Network::contains(const Handle& h) const {
  if (h.base_uri != base_uri_ || h.is_root()) return false;
  std::shared_lock lock(mutex_);
  return find_in(root_, h.path) != nullptr;
}

void Network::link_permanent(const Handle& a, const Handle& b, bool create) {
  if (a.base_uri != b.base_uri) {
    fail(ErrorKind::CrossNetworkPermanentLink,
         "permanent links stay within one network: '" + a.base_uri + "' vs '" + b.base_uri + "'");
  }
  std::unique_lock lock(mutex_);
  auto& source = find_service(a);
  find_service(b);
  auto& links = source.permanent_links;
  const auto it = std::find(links.begin(), links.end(), b);
  if (create && it == links.end()) {
    links.push_back(b);
    ++version_;
  } else if (!create && it != links.end()) {
    links.erase(it);
    ++version_;
  }
}

void Network::add_association(const Handle& s, const std::string& uri) {
  if (!is_valid_uri(uri)) fail(ErrorKind::MalformedUri, "not a URI: '" + uri + "'");
  std::unique_lock lock(mutex_);
  auto& node = find_service(s);
  if (std::find(node.associations.begin(), node.associations.end(), uri) == node.associations.end()) {
    node.associations.push_back(uri);
    ++version_;
  }
}

std::vector<Handle> Network::permanent_links(const Handle& s) const {
  std::shared_lock lock(mutex_);
  return find_service(s).permanent_links;
}

std::vector<std::string> Network::associations(const Handle& s) const {
  std::shared_lock lock(mutex_);
  return find_service(s).associations;
}

std::vector<std::string> Network::children(const Handle& parent) const {
  check_local(parent);
  std::shared_lock lock(mutex_);
  const auto* node = find_in(root_, parent.path);
  if (!node) fail(ErrorKind::UnknownService, "no service at '" + parent.path_string() + "'");
  std::vector<std::string> out;
  for (const auto& [name, c] : node->children) out.push_back(name);
  return out;
}

std::vector<Handle> Network::all_services() const {
  std::shared_lock lock(mutex_);
  std::vector<Handle> out;
  std::deque<std::pair<Handle, const ServiceNode*>> queue{{root_handle(), &root_}};
  while (!queue.empty()) {
    auto [h, node] = std::move(queue.front());
    queue.pop_front();
    for (const auto& [name, c] : node->children) {
      auto child = h.child(name);
      out.push_back(child);
      queue.emplace_back(std::move(child), c.get());
    }
  }
  return out;
}

}  // namespace servnet
