#pragma once

// A deliberately small YAML subset used for manifests, network catalogs, host
// registries and compose fragments: block mappings, block sequences, flow
// sequences of scalars, and plain/quoted scalars. Anchors, aliases, tags,
// block scalars and multiple documents are rejected. Every scalar is kept as
// the exact string written in the document.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace labcube::yaml {

class Node {
 public:
  enum class Kind { Null, Scalar, Sequence, Mapping };
  using Entry = std::pair<std::string, Node>;

  Node() = default;

  static Node null(int line = 0);
  static Node scalar(std::string value, int line = 0);
  static Node sequence(int line = 0);
  static Node mapping(int line = 0);

  Kind kind() const noexcept { return kind_; }
  bool is_null() const noexcept { return kind_ == Kind::Null; }
  bool is_scalar() const noexcept { return kind_ == Kind::Scalar; }
  bool is_sequence() const noexcept { return kind_ == Kind::Sequence; }
  bool is_mapping() const noexcept { return kind_ == Kind::Mapping; }

  // 1-based source line, 0 for nodes built in code.
  int line() const noexcept { return line_; }

  const std::string& as_scalar() const noexcept { return scalar_; }
  const std::vector<Node>& items() const noexcept { return items_; }
  // Entries keep document order and, on purpose, duplicates; schema layers
  // decide what a duplicate key means.
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  // First entry with the key, or nullptr.
  const Node* find(std::string_view key) const;

  Node& push_back(Node item);
  Node& set(std::string key, Node value);

  bool operator==(const Node& other) const;

 private:
  Kind kind_ = Kind::Null;
  int line_ = 0;
  std::string scalar_;
  std::vector<Node> items_;
  std::vector<Entry> entries_;
};

std::string_view kind_name(Node::Kind kind);

// Throws SyntaxError(line).
Node parse(std::string_view text);

// Emits block style that `parse` reads back to an equal tree.
std::string emit(const Node& root);

}  // namespace labcube::yaml
