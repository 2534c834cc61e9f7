#include "prepubdiff/xml_tree.hpp"

#include <algorithm>
#include <tuple>

#include <expat.h>
#include <fmt/format.h>

#include "prepubdiff/error.hpp"

namespace prepubdiff::xml {

std::string_view Node::local_name() const noexcept {
  std::string_view n = name;
  if (auto colon = n.find(':'); colon != std::string_view::npos) n.remove_prefix(colon + 1);
  return n;
}

std::optional<std::string_view> Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return std::string_view(v);
  }
  // Allow unprefixed lookup of prefixed attributes (e.g. "id" for "xml:id").
  for (const auto& [k, v] : attributes) {
    const auto colon = k.find(':');
    if (colon != std::string::npos && std::string_view(k).substr(colon + 1) == key) return std::string_view(v);
  }
  return std::nullopt;
}

const Node* Node::child(std::string_view local) const {
  for (const auto& c : children)
    if (c.is_element() && c.local_name() == local) return &c;
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view local) const {
  std::vector<const Node*> out;
  for (const auto& c : children)
    if (c.is_element() && c.local_name() == local) out.push_back(&c);
  return out;
}

namespace {

const Node* find_impl(const Node& n, std::string_view local) {
  for (const auto& c : n.children) {
    if (!c.is_element()) continue;
    if (c.local_name() == local) return &c;
    if (const Node* hit = find_impl(c, local)) return hit;
  }
  return nullptr;
}

void find_all_impl(const Node& n, std::string_view local, std::vector<const Node*>& out) {
  for (const auto& c : n.children) {
    if (!c.is_element()) continue;
    if (c.local_name() == local) out.push_back(&c);
    find_all_impl(c, local, out);
  }
}

void text_impl(const Node& n, std::string& out) {
  if (n.is_text()) {
    out += n.text;
    return;
  }
  for (const auto& c : n.children) text_impl(c, out);
}

struct Builder {
  XML_Parser parser = nullptr;
  std::vector<Node*> stack;
  Node root;
  bool have_root = false;
  bool too_deep = false;

  void stop() { XML_StopParser(parser, XML_FALSE); }
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto& b = *static_cast<Builder*>(data);
  if (b.stack.size() >= kMaxDepth) {
    b.too_deep = true;
    b.stop();
    return;
  }
  Node node;
  node.name = name;
  for (int i = 0; attrs[i] != nullptr; i += 2) node.attributes.emplace_back(attrs[i], attrs[i + 1]);
  if (b.stack.empty()) {
    b.root = std::move(node);
    b.have_root = true;
    b.stack.push_back(&b.root);
  } else {
    auto& siblings = b.stack.back()->children;
    siblings.push_back(std::move(node));
    b.stack.push_back(&siblings.back());
  }
}

void XMLCALL on_end(void* data, const XML_Char*) {
  auto& b = *static_cast<Builder*>(data);
  if (!b.stack.empty()) b.stack.pop_back();
}

void XMLCALL on_text(void* data, const XML_Char* s, int len) {
  auto& b = *static_cast<Builder*>(data);
  if (b.stack.empty() || len <= 0) return;
  auto& siblings = b.stack.back()->children;
  if (!siblings.empty() && siblings.back().is_text()) {
    siblings.back().text.append(s, static_cast<std::size_t>(len));
    return;
  }
  Node t;
  t.kind = Node::Kind::Text;
  t.text.assign(s, static_cast<std::size_t>(len));
  siblings.push_back(std::move(t));
}

struct ParserHandle {
  XML_Parser p;
  explicit ParserHandle(XML_Parser parser) : p(parser) {}
  ~ParserHandle() { XML_ParserFree(p); }
  ParserHandle(const ParserHandle&) = delete;
  ParserHandle& operator=(const ParserHandle&) = delete;
};

}  // namespace

const Node* Node::find(std::string_view local) const { return find_impl(*this, local); }

std::vector<const Node*> Node::find_all(std::string_view local) const {
  std::vector<const Node*> out;
  find_all_impl(*this, local, out);
  return out;
}

std::string Node::text_content() const {
  std::string out;
  text_impl(*this, out);
  return out;
}

Node parse(std::string_view bytes) {
  ParserHandle handle(XML_ParserCreate("UTF-8"));
  if (handle.p == nullptr) throw Error("cannot allocate XML parser");
  Builder builder;
  builder.parser = handle.p;
  XML_SetUserData(handle.p, &builder);
  XML_SetElementHandler(handle.p, on_start, on_end);
  XML_SetCharacterDataHandler(handle.p, on_text);
  XML_SetParamEntityParsing(handle.p, XML_PARAM_ENTITY_PARSING_NEVER);

  // Feed in chunks so inputs larger than INT_MAX stay well-defined.
  constexpr std::size_t kChunk = 1 << 20;
  std::size_t offset = 0;
  XML_Status status = XML_STATUS_OK;
  do {
    const std::size_t n = std::min(kChunk, bytes.size() - offset);
    const bool last = offset + n == bytes.size();
    status = XML_Parse(handle.p, bytes.data() + offset, static_cast<int>(n), last ? XML_TRUE : XML_FALSE);
    offset += n;
    if (status != XML_STATUS_OK || last) break;
  } while (true);

  const auto where = [&] {
    const auto index = XML_GetCurrentByteIndex(handle.p);
    return std::tuple{index < 0 ? std::size_t{0} : static_cast<std::size_t>(index),
                      static_cast<std::size_t>(XML_GetCurrentLineNumber(handle.p)),
                      static_cast<std::size_t>(XML_GetCurrentColumnNumber(handle.p)) + 1};
  };
  if (builder.too_deep) {
    auto [byte, line, col] = where();
    throw ParseError(fmt::format("XML nesting deeper than {}", kMaxDepth), byte, line, col);
  }
  if (status != XML_STATUS_OK) {
    auto [byte, line, col] = where();
    throw ParseError(fmt::format("malformed XML: {}", XML_ErrorString(XML_GetErrorCode(handle.p))),
                     byte, line, col);
  }
  if (!builder.have_root) throw ParseError("XML document has no root element", 0);
  return std::move(builder.root);
}

}  // namespace prepubdiff::xml
