#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prepubdiff::xml {

/// A parsed XML node: an element with children, or a run of character data.
struct Node {
  enum class Kind { Element, Text };

  Kind kind = Kind::Element;
  std::string name;  // qualified element name as written ("ce:title"); empty for text
  std::string text;  // character data, text nodes only
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;

  bool is_element() const noexcept { return kind == Kind::Element; }
  bool is_text() const noexcept { return kind == Kind::Text; }

  /// Name without namespace prefix.
  std::string_view local_name() const noexcept;
  std::optional<std::string_view> attribute(std::string_view name) const;

  /// First direct element child with the given local name.
  const Node* child(std::string_view local) const;
  std::vector<const Node*> children_named(std::string_view local) const;

  /// First descendant element (depth first, document order) with the local name.
  const Node* find(std::string_view local) const;
  std::vector<const Node*> find_all(std::string_view local) const;

  /// All descendant character data concatenated in document order.
  std::string text_content() const;
};

inline constexpr std::size_t kMaxDepth = 512;

/// Parses a complete document and returns its root element. Throws ParseError
/// carrying byte offset, line and column on any malformation, including
/// nesting deeper than kMaxDepth. External entities are never loaded.
Node parse(std::string_view bytes);

}  // namespace prepubdiff::xml
