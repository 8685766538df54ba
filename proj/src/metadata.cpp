#include "servnet/metadata.hpp"

#include <deque>

#include "servnet/error.hpp"
#include "servnet/wire.hpp"

namespace servnet::meta {
namespace {

[[noreturn]] void schema_error(const std::string& what) {
  fail(ErrorKind::SchemaViolation, "metadata: " + what);
}

[[noreturn]] void admin_error(const std::string& what) {
  fail(ErrorKind::InvalidAdminDoc, "admin document: " + what);
}

xml::Element fragment_element(std::string name, const std::vector<xml::Element>& nodes) {
  xml::Element e(std::move(name));
  e.children = nodes;
  return e;
}

std::string leaf_text(const xml::Element& e, void (*err)(const std::string&)) {
  if (!e.elements().empty()) err("<" + e.name + "> must hold text only");
  return e.text_content();
}

[[noreturn]] void schema_error_fn(const std::string& what) { schema_error(what); }
[[noreturn]] void admin_error_fn(const std::string& what) { admin_error(what); }

xml::Element param_spec_element(const ParamSpec& p) {
  xml::Element e("Param");
  e.set_attribute("name", p.name);
  e.set_attribute("type", p.type);
  return e;
}

ParamSpec param_spec_from(const xml::Element& e) {
  const auto name = e.attribute("name");
  const auto type = e.attribute("type");
  if (e.name != "Param" || !name || !type) schema_error("<Param> needs name and type attributes");
  if (!is_known_tag(*type)) schema_error("unknown parameter type '" + *type + "'");
  return {*name, *type};
}

xml::Element constructors_element(const std::vector<ConstructorDescriptor>& ctors, bool with_args) {
  xml::Element e("Constructors");
  for (const auto& c : ctors) {
    auto& ce = e.add(xml::Element("Constructor"));
    const bool used = with_args && c.args.has_value();
    if (used) ce.set_attribute("used", "true");
    for (std::size_t i = 0; i < c.params.size(); ++i) {
      auto& pe = ce.add(param_spec_element(c.params[i]));
      if (used && i < c.args->size()) {
        pe.add(wire::param_to_xml(wire::encode_param_auto((*c.args)[i])));
      }
    }
  }
  return e;
}

std::vector<ConstructorDescriptor> constructors_from(const xml::Element& e) {
  std::vector<ConstructorDescriptor> out;
  for (const auto& c : e.children) {
    if (c.is_text() || c.name != "Constructor") schema_error("<Constructors> holds only <Constructor>");
    ConstructorDescriptor d;
    const auto used = c.attribute("used");
    if (used && *used != "true") schema_error("used attribute must be \"true\"");
    if (used) d.args.emplace();
    for (const auto& p : c.children) {
      if (p.is_text()) schema_error("stray text in <Constructor>");
      d.params.push_back(param_spec_from(p));
      const auto values = p.elements();
      if (used) {
        if (values.size() != 1) schema_error("used constructor parameters need exactly one value");
        try {
          d.args->push_back(wire::param_from_xml(*values[0]).value);
        } catch (const Error& err) {
          schema_error(err.what());
        }
      } else if (!values.empty()) {
        schema_error("only the used constructor carries argument values");
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

xml::Element methods_element(const MethodTable& methods) {
  xml::Element e("Methods");
  for (const auto& [name, m] : methods) {
    auto& me = e.add(xml::Element("Method"));
    me.set_attribute("name", m.name);
    me.set_attribute("returns", m.returns);
    me.set_attribute("access", m.access_group);
    for (const auto& p : m.params) me.add(param_spec_element(p));
  }
  return e;
}

MethodTable methods_from(const xml::Element& e) {
  MethodTable out;
  for (const auto& m : e.children) {
    if (m.is_text() || m.name != "Method") schema_error("<Methods> holds only <Method>");
    const auto name = m.attribute("name");
    const auto returns = m.attribute("returns");
    const auto access = m.attribute("access");
    if (!name || !returns || !access) schema_error("<Method> needs name, returns and access attributes");
    MethodDescriptor d{*name, {}, *returns, *access};
    for (const auto& p : m.children) {
      if (p.is_text()) schema_error("stray text in <Method>");
      d.params.push_back(param_spec_from(p));
    }
    if (!out.emplace(*name, std::move(d)).second) schema_error("duplicate method '" + *name + "'");
  }
  return out;
}

MetadataDoc shallow_doc(const ServiceNode& node, const Handle& handle) {
  MetadataDoc doc;
  const auto& d = node.description;
  doc.service_type = d.service_type;
  doc.description = d.description;
  doc.other_meta.push_back(service_id_element(node.sid));
  doc.other_meta.insert(doc.other_meta.end(), d.other_meta.begin(), d.other_meta.end());
  doc.class_name = d.class_name;
  doc.handle = handle;
  doc.archive_uris = d.archive_uris;
  doc.constructors = d.constructors;
  doc.methods = effective_methods(node);
  if (!d.uuid.empty()) doc.uuid = d.uuid;
  return doc;
}

void merge_named(std::vector<xml::Element>& into, const std::vector<xml::Element>& extra) {
  for (const auto& e : extra) {
    if (!e.is_text()) {
      const auto it = std::find_if(into.begin(), into.end(), [&](const xml::Element& x) { return x.name == e.name; });
      if (it != into.end()) {
        *it = e;
        continue;
      }
    }
    into.push_back(e);
  }
}

}  // namespace

MethodTable effective_methods(const ServiceNode& node) {
  if (!node.service) return {};
  auto table = node.service->methods();
  if (node.access) {
    for (auto& [name, d] : table) {
      const auto it = node.access->method_group.find(name);
      if (it != node.access->method_group.end()) d.access_group = it->second;
    }
  }
  return table;
}

xml::Element service_id_element(const ServiceId& sid) {
  auto e = xml::Element::leaf(std::string(kServiceIdElement), sid.id);
  e.set_attribute("shared", sid.shared ? "true" : "false");
  return e;
}

std::optional<ServiceId> service_id_of(const MetadataDoc& doc) {
  for (const auto& e : doc.other_meta) {
    if (e.name == kServiceIdElement) {
      return ServiceId{e.text_content(), e.attribute("shared").value_or("false") == "true"};
    }
  }
  return std::nullopt;
}

MetadataDoc generate_metadata(const ServiceNode& node, const Handle& handle, const ServiceNode& root) {
  auto doc = shallow_doc(node, handle);
  for (const auto& [name, child] : node.children) {
    doc.child_meta.push_back(generate_metadata(*child, handle.child(name), root));
  }
  for (const auto& target : node.permanent_links) {
    if (const auto* linked = Network::find_in(root, target.path)) {
      doc.link_meta.push_back(shallow_doc(*linked, target));
    }
  }
  return doc;
}

MetadataDoc generate_metadata(const Network& network, const Handle& service) {
  network.resolve_handle(service);  // UnknownService / ForeignNode
  return network.read([&](const ServiceNode& root) {
    const auto* node = Network::find_in(root, service.path);
    if (!node) fail(ErrorKind::UnknownService, "no service at '" + service.path_string() + "'");
    return generate_metadata(*node, service, root);
  });
}

xml::Element metadata_to_xml(const MetadataDoc& doc) {
  xml::Element root("Service_Meta");
  if (doc.uuid) root.set_attribute("uuid", *doc.uuid);
  root.add_leaf("Service_Type", doc.service_type);
  root.add(fragment_element("Description", doc.description));
  root.add(fragment_element("Other_Meta", doc.other_meta));
  root.add_leaf("Class_Name", doc.class_name);
  append_handle(root.add(xml::Element("Handle")), doc.handle);
  for (const auto& uri : doc.archive_uris) root.add_leaf("Jar_File", uri);
  root.add(constructors_element(doc.constructors, true));
  root.add(methods_element(doc.methods));
  auto& children = root.add(xml::Element("Child_Service_Meta"));
  for (const auto& c : doc.child_meta) children.add(metadata_to_xml(c));
  auto& links = root.add(xml::Element("Link_Service_Meta"));
  for (const auto& l : doc.link_meta) links.add(metadata_to_xml(l));
  return root;
}

std::string encode_metadata(const MetadataDoc& doc) { return xml::serialize(metadata_to_xml(doc)); }

MetadataDoc metadata_from_xml(const xml::Element& root) {
  if (root.name != "Service_Meta") schema_error("root element must be <Service_Meta>");
  MetadataDoc doc;
  for (const auto& [k, v] : root.attributes) {
    if (k != "uuid") schema_error("unexpected attribute '" + k + "'");
    doc.uuid = v;
  }
  for (const auto& c : root.children) {
    if (c.is_text()) schema_error("stray text in <Service_Meta>");
  }
  const auto items = root.elements();
  std::size_t i = 0;
  auto next = [&](std::string_view name) -> const xml::Element* {
    if (i < items.size() && items[i]->name == name) return items[i++];
    return nullptr;
  };
  auto required = [&](std::string_view name) -> const xml::Element& {
    const auto* e = next(name);
    if (!e) schema_error("missing mandatory <" + std::string(name) + ">");
    return *e;
  };
  doc.service_type = leaf_text(required("Service_Type"), schema_error_fn);
  doc.description = required("Description").children;
  doc.other_meta = required("Other_Meta").children;
  doc.class_name = leaf_text(required("Class_Name"), schema_error_fn);
  try {
    doc.handle = handle_from_element(required("Handle"));
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::SchemaViolation) throw;
    schema_error(err.what());
  }
  while (const auto* jar = next("Jar_File")) doc.archive_uris.push_back(leaf_text(*jar, schema_error_fn));
  if (const auto* e = next("Constructors")) doc.constructors = constructors_from(*e);
  if (const auto* e = next("Methods")) doc.methods = methods_from(*e);
  if (const auto* e = next("Child_Service_Meta")) {
    for (const auto* c : e->elements()) doc.child_meta.push_back(metadata_from_xml(*c));
  }
  if (const auto* e = next("Link_Service_Meta")) {
    for (const auto* c : e->elements()) doc.link_meta.push_back(metadata_from_xml(*c));
  }
  if (i != items.size()) schema_error("unexpected element <" + items[i]->name + ">");
  return doc;
}

MetadataDoc decode_metadata(std::string_view bytes) {
  xml::Element root;
  try {
    root = xml::parse(bytes);
  } catch (const Error& err) {
    schema_error(err.what());
  }
  return metadata_from_xml(root);
}

std::string public_static_metadata(const MetadataDoc& doc) {
  xml::Element root("Public_Static_Meta");
  root.add_leaf("Service_Type", doc.service_type);
  root.add(fragment_element("Description", doc.description));
  root.add(fragment_element("Other_Meta", doc.other_meta));
  root.add_leaf("Class_Name", doc.class_name);
  root.add(constructors_element(doc.constructors, false));
  root.add(methods_element(doc.methods));
  return xml::serialize(root);
}

void check_shared_candidate(const Network& network, const ServiceNode& candidate,
                            const std::optional<Handle>& self) {
  if (!candidate.sid.shared) return;
  const auto mine = public_static_metadata(shallow_doc(candidate, network.root_handle()));
  network.read([&](const ServiceNode& root) {
    std::deque<std::pair<Handle, const ServiceNode*>> queue{{network.root_handle(), &root}};
    while (!queue.empty()) {
      auto [h, node] = std::move(queue.front());
      queue.pop_front();
      for (const auto& [name, child] : node->children) {
        auto ch = h.child(name);
        if (child->sid == candidate.sid && (!self || ch != *self)) {
          if (public_static_metadata(shallow_doc(*child, ch)) != mine) {
            fail(ErrorKind::SharedIdConflict, "shared service ID '" + candidate.sid.id +
                                                  "' already published with different metadata at '" +
                                                  ch.path_string() + "'");
          }
        }
        queue.emplace_back(std::move(ch), child.get());
      }
    }
  });
}

void check_shared_consistency(const Network& network, const Handle& service) {
  const auto node = network.resolve_handle(service);
  const auto copy = network.read([&](const ServiceNode&) { return *node; });
  check_shared_candidate(network, copy, service);
}

bool check_mutation_allowed(const MutationRequest& req) noexcept {
  return !(req.sid.shared && req.volatility == Volatility::Dynamic &&
           req.visibility == Visibility::Public && req.target == Target::This);
}

std::string encode_admin_doc(const AdminDoc& doc) {
  xml::Element root("Admin_Doc");
  if (doc.service_type) root.add_leaf("Service_Type", *doc.service_type);
  if (doc.description) root.add(fragment_element("Description", *doc.description));
  if (doc.access) {
    auto& access = root.add(xml::Element("Access"));
    for (const auto& g : doc.access->groups) {
      auto& ge = access.add(xml::Element("Group"));
      ge.set_attribute("id", g.id);
      ge.set_attribute("level", std::to_string(g.level));
      ge.set_attribute("password_hash", g.password_hash);
      for (const auto& ex : g.excluded) ge.add_leaf("Exclude", ex);
    }
    for (const auto& [method, gid] : doc.access->method_group) {
      auto& me = access.add(xml::Element("Method"));
      me.set_attribute("name", method);
      me.set_attribute("group", gid);
    }
  }
  for (const auto& m : doc.autonomic_managers) root.add_leaf("Autonomic_Manager", m);
  if (!doc.extra_meta.empty()) root.add(fragment_element("Extra_Meta", doc.extra_meta));
  if (!doc.private_meta.empty()) root.add(fragment_element("Private_Meta", doc.private_meta));
  if (doc.data) root.add(fragment_element("Data", *doc.data));
  return xml::serialize(root);
}

namespace {

access::AccessConfig access_from(const xml::Element& e) {
  access::AccessConfig cfg;
  for (const auto& c : e.children) {
    if (c.is_text()) admin_error("stray text in <Access>");
    if (c.name == "Group") {
      access::AccessGroup g;
      g.id = c.attribute("id").value_or("");
      const auto level = c.attribute("level");
      if (g.id.empty() || !level) admin_error("<Group> needs id and level attributes");
      try {
        std::size_t used = 0;
        g.level = std::stoi(*level, &used);
        if (used != level->size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        admin_error("bad level '" + *level + "'");
      }
      const auto hash = c.attribute("password_hash");
      const auto plain = c.attribute("password");
      if (hash.has_value() == plain.has_value()) admin_error("<Group> needs exactly one of password or password_hash");
      g.password_hash = hash ? *hash : access::hash_password(*plain);
      for (const auto& ex : c.children) {
        if (ex.is_text() || ex.name != "Exclude") admin_error("<Group> holds only <Exclude>");
        g.excluded.insert(leaf_text(ex, admin_error_fn));
      }
      cfg.groups.push_back(std::move(g));
    } else if (c.name == "Method") {
      const auto name = c.attribute("name");
      const auto group = c.attribute("group");
      if (!name || !group) admin_error("<Method> needs name and group attributes");
      if (!cfg.method_group.emplace(*name, *group).second) admin_error("method '" + *name + "' listed twice");
    } else {
      admin_error("unexpected element <" + c.name + "> in <Access>");
    }
  }
  return cfg;
}

}  // namespace

AdminDoc decode_admin_doc(std::string_view bytes) {
  xml::Element root;
  try {
    root = xml::parse(bytes);
  } catch (const Error& err) {
    admin_error(err.what());
  }
  if (root.name != "Admin_Doc") admin_error("root element must be <Admin_Doc>");
  if (!root.attributes.empty()) admin_error("<Admin_Doc> takes no attributes");
  AdminDoc doc;
  std::set<std::string> seen;
  for (const auto& c : root.children) {
    if (c.is_text()) admin_error("stray text in <Admin_Doc>");
    if (c.name != "Autonomic_Manager" && !seen.insert(c.name).second) admin_error("<" + c.name + "> given twice");
    if (c.name == "Service_Type") doc.service_type = leaf_text(c, admin_error_fn);
    else if (c.name == "Description") doc.description = c.children;
    else if (c.name == "Access") doc.access = access_from(c);
    else if (c.name == "Autonomic_Manager") doc.autonomic_managers.push_back(leaf_text(c, admin_error_fn));
    else if (c.name == "Extra_Meta") doc.extra_meta = c.children;
    else if (c.name == "Private_Meta") doc.private_meta = c.children;
    else if (c.name == "Data") doc.data = c.children;
    else admin_error("unexpected element <" + c.name + ">");
  }
  return doc;
}

void apply_admin_doc(Network& network, const Handle& service, const AdminDoc& doc) {
  const auto target = network.resolve_handle(service);
  if (doc.access) {
    try {
      access::validate(*doc.access);
      access::check_covers(*doc.access, target->service ? target->service->methods() : MethodTable{});
    } catch (const Error& err) {
      admin_error(err.what());
    }
  }
  for (const auto& e : doc.extra_meta) {
    if (e.name == kServiceIdElement) admin_error("the service ID cannot be replaced through Extra_Meta");
  }

  auto candidate = network.read([&](const ServiceNode&) { return *target; });
  auto& d = candidate.description;
  if (doc.service_type) d.service_type = *doc.service_type;
  if (doc.description) d.description = *doc.description;
  merge_named(d.other_meta, doc.extra_meta);
  merge_named(d.private_meta, doc.private_meta);
  if (doc.access) candidate.access = std::make_shared<const access::AccessConfig>(*doc.access);
  if (!doc.autonomic_managers.empty()) candidate.autonomic_managers = doc.autonomic_managers;
  check_shared_candidate(network, candidate, service);

  network.update(service, [&](ServiceNode& node) {
    node.description = std::move(candidate.description);
    node.access = std::move(candidate.access);
    node.autonomic_managers = std::move(candidate.autonomic_managers);
  });
  if (doc.data && target->service) target->service->set_data(xml::serialize_fragment(*doc.data));
}

}  // namespace servnet::meta
