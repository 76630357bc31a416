#include "labcube/yaml.hpp"

#include <algorithm>
#include <cstdio>

#include "labcube/error.hpp"

namespace labcube::yaml {

Node Node::null(int line) {
  Node n;
  n.line_ = line;
  return n;
}

Node Node::scalar(std::string value, int line) {
  Node n;
  n.kind_ = Kind::Scalar;
  n.scalar_ = std::move(value);
  n.line_ = line;
  return n;
}

Node Node::sequence(int line) {
  Node n;
  n.kind_ = Kind::Sequence;
  n.line_ = line;
  return n;
}

Node Node::mapping(int line) {
  Node n;
  n.kind_ = Kind::Mapping;
  n.line_ = line;
  return n;
}

const Node* Node::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

Node& Node::push_back(Node item) {
  items_.push_back(std::move(item));
  return items_.back();
}

Node& Node::set(std::string key, Node value) {
  entries_.emplace_back(std::move(key), std::move(value));
  return entries_.back().second;
}

bool Node::operator==(const Node& other) const {
  return kind_ == other.kind_ && scalar_ == other.scalar_ && items_ == other.items_ &&
         entries_ == other.entries_;
}

std::string_view kind_name(Node::Kind kind) {
  switch (kind) {
    case Node::Kind::Null: return "null";
    case Node::Kind::Scalar: return "scalar";
    case Node::Kind::Sequence: return "sequence";
    case Node::Kind::Mapping: return "mapping";
  }
  return "unknown";
}

namespace {

struct Line {
  int no = 0;
  int indent = 0;
  std::string text;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool opens_token(std::string_view text, std::size_t i) {
  if (i == 0) return true;
  const char prev = text[i - 1];
  return prev == ' ' || prev == '[' || prev == ',' || prev == '{';
}

// Removes a trailing comment, honoring quoted scalars.
std::string strip_comment(std::string_view text) {
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote == '"') {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        quote = 0;
      }
    } else if (quote == '\'') {
      if (c == '\'') {
        if (i + 1 < text.size() && text[i + 1] == '\'') {
          ++i;
        } else {
          quote = 0;
        }
      }
    } else if ((c == '"' || c == '\'') && opens_token(text, i)) {
      quote = c;
    } else if (c == '#' && (i == 0 || text[i - 1] == ' ' || text[i - 1] == '\t')) {
      return std::string(text.substr(0, i));
    }
  }
  return std::string(text);
}

bool is_sequence_item(std::string_view text) {
  return text == "-" || text.starts_with("- ");
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses a quoted scalar starting at text[0]; returns the value and the index
// just past the closing quote.
std::pair<std::string, std::size_t> parse_quoted(std::string_view text, int line) {
  const char quote = text.front();
  std::string out;
  std::size_t i = 1;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quote == '\'') {
      if (c == '\'') {
        if (i + 1 < text.size() && text[i + 1] == '\'') {
          out.push_back('\'');
          ++i;
          continue;
        }
        return {out, i + 1};
      }
      out.push_back(c);
      continue;
    }
    if (c == '"') return {out, i + 1};
    if (c != '\\') {
      out.push_back(c);
      continue;
    }
    if (++i >= text.size()) break;
    switch (text[i]) {
      case '\\': out.push_back('\\'); break;
      case '"': out.push_back('"'); break;
      case '/': out.push_back('/'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'x': {
        if (i + 2 >= text.size() || hex_value(text[i + 1]) < 0 || hex_value(text[i + 2]) < 0) {
          throw SyntaxError(line, "bad \\x escape");
        }
        out.push_back(static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2])));
        i += 2;
        break;
      }
      default:
        throw SyntaxError(line, std::string("unknown escape \\") + text[i]);
    }
  }
  throw SyntaxError(line, "unterminated quoted scalar");
}

void reject_unsupported(std::string_view value, int line) {
  if (value.empty()) return;
  switch (value.front()) {
    case '&': throw SyntaxError(line, "anchors are not supported");
    case '*': throw SyntaxError(line, "aliases are not supported");
    case '!': throw SyntaxError(line, "tags are not supported");
    case '|':
    case '>': throw SyntaxError(line, "block scalars are not supported");
    case '%':
    case '@':
    case '`': throw SyntaxError(line, std::string("reserved indicator '") + value.front() + "'");
    default: break;
  }
}

std::string parse_plain(std::string_view value, int line, bool in_flow) {
  reject_unsupported(value, line);
  if (value.front() == ',' || value.front() == ']' || value.front() == '}') {
    throw SyntaxError(line, "unexpected flow indicator");
  }
  if ((value.front() == '?' || value.front() == ':') &&
      (value.size() == 1 || value[1] == ' ')) {
    throw SyntaxError(line, "complex keys are not supported");
  }
  if (value.find(": ") != std::string_view::npos || value.back() == ':') {
    throw SyntaxError(line, "unexpected ':' in plain scalar; quote the value");
  }
  if (in_flow && value.find_first_of("[]{}") != std::string_view::npos) {
    throw SyntaxError(line, "nested flow collections are not supported");
  }
  return std::string(value);
}

Node parse_flow_sequence(std::string_view text, int line) {
  if (text.back() != ']') throw SyntaxError(line, "flow sequence must close on the same line");
  Node seq = Node::sequence(line);
  std::string_view body = trim(text.substr(1, text.size() - 2));
  if (body.empty()) return seq;
  std::size_t i = 0;
  while (true) {
    while (i < body.size() && body[i] == ' ') ++i;
    if (i >= body.size()) throw SyntaxError(line, "empty flow sequence item");
    std::string item;
    std::size_t end;
    if (body[i] == '"' || body[i] == '\'') {
      auto [value, next] = parse_quoted(body.substr(i), line);
      item = std::move(value);
      end = i + next;
      while (end < body.size() && body[end] == ' ') ++end;
    } else {
      end = body.find(',', i);
      if (end == std::string_view::npos) end = body.size();
      std::string_view raw = trim(body.substr(i, end - i));
      if (raw.empty()) throw SyntaxError(line, "empty flow sequence item");
      item = parse_plain(raw, line, true);
    }
    seq.push_back(Node::scalar(std::move(item), line));
    if (end >= body.size()) break;
    if (body[end] != ',') throw SyntaxError(line, "expected ',' in flow sequence");
    i = end + 1;
  }
  return seq;
}

Node parse_inline(std::string_view value, int line) {
  reject_unsupported(value, line);
  if (value.front() == '[') return parse_flow_sequence(value, line);
  if (value.front() == '{') {
    if (trim(value.substr(1)) == "}" ) return Node::mapping(line);
    throw SyntaxError(line, "flow mappings are not supported");
  }
  if (value.front() == '"' || value.front() == '\'') {
    auto [text, next] = parse_quoted(value, line);
    if (!trim(value.substr(next)).empty()) {
      throw SyntaxError(line, "unexpected text after quoted scalar");
    }
    return Node::scalar(std::move(text), line);
  }
  return Node::scalar(parse_plain(value, line, false), line);
}

// Locates the key/value separator of a mapping entry. Returns npos when the
// text is not a mapping entry. For quoted keys, `key` receives the unquoted text.
std::size_t find_key_separator(std::string_view text, int line, std::string* key) {
  if (text.empty() || text.front() == '[' || text.front() == '{') return std::string_view::npos;
  if (text.front() == '"' || text.front() == '\'') {
    auto [value, next] = parse_quoted(text, line);
    std::size_t i = next;
    while (i < text.size() && text[i] == ' ') ++i;
    if (i < text.size() && text[i] == ':' && (i + 1 == text.size() || text[i + 1] == ' ')) {
      if (key) *key = value;
      return i;
    }
    return std::string_view::npos;
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == ':' && (i + 1 == text.size() || text[i + 1] == ' ')) {
      if (key) *key = std::string(trim(text.substr(0, i)));
      return i;
    }
  }
  return std::string_view::npos;
}

class Parser {
 public:
  explicit Parser(std::string_view text) { split(text); }

  Node parse_document() {
    if (lines_.empty()) return Node::null(1);
    if (lines_.front().indent != 0) {
      throw SyntaxError(lines_.front().no, "document must start at column 0");
    }
    Node root = parse_block(0);
    if (pos_ < lines_.size()) throw SyntaxError(lines_[pos_].no, "unexpected content");
    return root;
  }

 private:
  void split(std::string_view text) {
    int no = 0;
    bool seen_content = false;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view raw = text.substr(start, end - start);
      ++no;
      start = end + 1;
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

      std::size_t indent = 0;
      while (indent < raw.size() && (raw[indent] == ' ' || raw[indent] == '\t')) {
        if (raw[indent] == '\t') {
          if (!trim(raw).empty() && trim(raw).front() != '#') {
            throw SyntaxError(no, "tabs are not allowed in indentation");
          }
        }
        ++indent;
      }
      std::string content = strip_comment(raw.substr(indent));
      std::string_view body = trim(content);
      if (body.empty()) {
        if (end == text.size()) break;
        continue;
      }
      if (body == "---" && indent == 0) {
        if (seen_content) throw SyntaxError(no, "multiple documents are not supported");
        seen_content = true;
        continue;
      }
      if (body == "..." && indent == 0) throw SyntaxError(no, "document end markers are not supported");
      seen_content = true;
      lines_.push_back({no, static_cast<int>(indent), std::string(body)});
      if (end == text.size()) break;
    }
  }

  Node parse_block(int indent) {
    const Line& line = lines_[pos_];
    if (is_sequence_item(line.text)) return parse_sequence(indent);
    if (find_key_separator(line.text, line.no, nullptr) != std::string_view::npos) {
      return parse_mapping(indent);
    }
    // A bare scalar only makes sense as the whole document.
    Node value = parse_inline(line.text, line.no);
    ++pos_;
    return value;
  }

  Node parse_nested_or_null(int parent_indent, int line) {
    if (pos_ < lines_.size() && lines_[pos_].indent > parent_indent) {
      return parse_block(lines_[pos_].indent);
    }
    return Node::null(line);
  }

  Node parse_mapping(int indent) {
    Node map = Node::mapping(lines_[pos_].no);
    while (pos_ < lines_.size() && lines_[pos_].indent == indent) {
      const Line line = lines_[pos_];
      if (is_sequence_item(line.text)) {
        throw SyntaxError(line.no, "sequence item where a mapping key was expected");
      }
      std::string key;
      const std::size_t sep = find_key_separator(line.text, line.no, &key);
      if (sep == std::string_view::npos) throw SyntaxError(line.no, "expected 'key: value'");
      if (key.empty()) throw SyntaxError(line.no, "empty mapping key");
      reject_unsupported(key, line.no);
      std::string_view rest = trim(std::string_view(line.text).substr(sep + 1));
      ++pos_;
      Node value;
      if (!rest.empty()) {
        value = parse_inline(rest, line.no);
      } else if (pos_ < lines_.size() && lines_[pos_].indent == indent &&
                 is_sequence_item(lines_[pos_].text)) {
        value = parse_sequence(indent);
      } else {
        value = parse_nested_or_null(indent, line.no);
      }
      map.set(std::move(key), std::move(value));
    }
    if (pos_ < lines_.size() && lines_[pos_].indent > indent) {
      throw SyntaxError(lines_[pos_].no, "unexpected indentation");
    }
    return map;
  }

  Node parse_sequence(int indent) {
    Node seq = Node::sequence(lines_[pos_].no);
    while (pos_ < lines_.size() && lines_[pos_].indent == indent &&
           is_sequence_item(lines_[pos_].text)) {
      Line& line = lines_[pos_];
      std::string_view rest = trim(std::string_view(line.text).substr(1));
      if (rest.empty()) {
        const int no = line.no;
        ++pos_;
        seq.push_back(parse_nested_or_null(indent, no));
        continue;
      }
      if (is_sequence_item(rest) ||
          find_key_separator(rest, line.no, nullptr) != std::string_view::npos) {
        // Re-read the remainder as a block that starts at its own column.
        const int offset = static_cast<int>(line.text.size() - rest.size());
        line.indent = indent + offset;
        line.text = std::string(rest);
        seq.push_back(parse_block(line.indent));
        continue;
      }
      const int no = line.no;
      Node item = parse_inline(rest, no);
      ++pos_;
      seq.push_back(std::move(item));
    }
    if (pos_ < lines_.size() && lines_[pos_].indent > indent) {
      throw SyntaxError(lines_[pos_].no, "unexpected indentation");
    }
    return seq;
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

// Emission

bool needs_quotes(std::string_view s, bool in_flow) {
  if (s.empty()) return true;
  if (std::string_view("-?:,[]{}#&*!|>'\"%@`").find(s.front()) != std::string_view::npos) {
    return true;
  }
  if (s.front() == ' ' || s.back() == ' ' || s.front() == '\t' || s.back() == '\t') return true;
  if (s.find(": ") != std::string_view::npos || s.back() == ':') return true;
  if (s.find(" #") != std::string_view::npos || s.find("\t#") != std::string_view::npos) return true;
  for (char c : s) {
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) return true;
  }
  if (in_flow && s.find_first_of(",[]{}") != std::string_view::npos) return true;
  return false;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
          char buf[5];
          std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

std::string scalar_text(std::string_view s, bool in_flow = false) {
  return needs_quotes(s, in_flow) ? quote(s) : std::string(s);
}

bool all_scalars(const Node& seq) {
  return std::all_of(seq.items().begin(), seq.items().end(),
                     [](const Node& n) { return n.is_scalar(); });
}

std::string flow_sequence(const Node& seq) {
  std::string out = "[";
  for (std::size_t i = 0; i < seq.items().size(); ++i) {
    if (i) out += ", ";
    out += scalar_text(seq.items()[i].as_scalar(), true);
  }
  return out + "]";
}

void emit_mapping(const Node& map, int indent, std::string& out);
void emit_sequence(const Node& seq, int indent, std::string& out);

// Text that follows "key:" or "-" on the same line, or an empty string when
// the value continues on the next lines.
std::string inline_form(const Node& value) {
  switch (value.kind()) {
    case Node::Kind::Null: return "";
    case Node::Kind::Scalar: return " " + scalar_text(value.as_scalar());
    case Node::Kind::Sequence:
      if (value.items().empty() || all_scalars(value)) return " " + flow_sequence(value);
      return "";
    case Node::Kind::Mapping:
      if (value.entries().empty()) return " {}";
      return "";
  }
  return "";
}

bool is_block(const Node& value) {
  return (value.is_sequence() && !value.items().empty() && !all_scalars(value)) ||
         (value.is_mapping() && !value.entries().empty());
}

void emit_block(const Node& value, int indent, std::string& out) {
  if (value.is_mapping()) {
    emit_mapping(value, indent, out);
  } else {
    emit_sequence(value, indent, out);
  }
}

void emit_mapping(const Node& map, int indent, std::string& out) {
  for (const auto& [key, value] : map.entries()) {
    out.append(indent, ' ');
    out += scalar_text(key);
    out += ":";
    if (is_block(value)) {
      out += "\n";
      emit_block(value, indent + 2, out);
    } else {
      out += inline_form(value);
      out += "\n";
    }
  }
}

void emit_sequence(const Node& seq, int indent, std::string& out) {
  for (const auto& item : seq.items()) {
    if (is_block(item)) {
      std::string nested;
      emit_block(item, indent + 2, nested);
      out.append(indent, ' ');
      out += "- ";
      out += nested.substr(static_cast<std::size_t>(indent) + 2);
    } else {
      out.append(indent, ' ');
      out += "-";
      out += inline_form(item);
      out += "\n";
    }
  }
}

}  // namespace

Node parse(std::string_view text) { return Parser(text).parse_document(); }

std::string emit(const Node& root) {
  std::string out;
  if (is_block(root)) {
    emit_block(root, 0, out);
  } else if (root.is_scalar()) {
    out = scalar_text(root.as_scalar()) + "\n";
  } else if (root.is_sequence()) {
    out = flow_sequence(root) + "\n";
  } else if (root.is_mapping()) {
    out = "{}\n";
  }
  return out;
}

}  // namespace labcube::yaml
