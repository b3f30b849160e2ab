#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "devgeo/corpus.hpp"
#include "devgeo/errors.hpp"
#include "devgeo/text.hpp"

namespace devgeo {

namespace {

constexpr std::array<std::string_view, 16> kVoidElements = {
    "area", "base", "br",   "col",   "embed",  "hr",    "img",   "input",
    "link", "meta", "param", "source", "track", "wbr", "keygen", "frame"};

bool is_void(std::string_view tag) {
  return std::find(kVoidElements.begin(), kVoidElements.end(), tag) != kVoidElements.end();
}

bool is_raw_text(std::string_view tag) { return tag == "script" || tag == "style"; }

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '_' || c == ':' || c == '.';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char a = s[pos + i];
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
    if (a != prefix[i]) return false;
  }
  return true;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct NamedEntity {
  std::string_view name;
  std::uint32_t cp;
};

constexpr std::array<NamedEntity, 16> kEntities = {{{"amp", '&'},
                                                    {"lt", '<'},
                                                    {"gt", '>'},
                                                    {"quot", '"'},
                                                    {"apos", '\''},
                                                    {"nbsp", ' '},
                                                    {"copy", 0xA9},
                                                    {"reg", 0xAE},
                                                    {"trade", 0x2122},
                                                    {"deg", 0xB0},
                                                    {"middot", 0xB7},
                                                    {"ndash", 0x2013},
                                                    {"mdash", 0x2014},
                                                    {"hellip", 0x2026},
                                                    {"laquo", 0xAB},
                                                    {"raquo", 0xBB}}};

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const std::size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string_view body = s.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (!body.empty() && body[0] == '#') {
      std::uint32_t cp = 0;
      bool ok = body.size() > 1;
      const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
      for (std::size_t k = hex ? 2 : 1; ok && k < body.size(); ++k) {
        const char c = body[k];
        int v = -1;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
        if (v < 0) ok = false;
        else cp = std::min<std::uint32_t>(cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v), 0x110000);
      }
      if (ok && (!hex || body.size() > 2)) {
        append_utf8(out, cp);
        decoded = true;
      }
    } else {
      for (const auto& e : kEntities) {
        if (e.name == body) {
          append_utf8(out, e.cp);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

struct ImpliedClose {
  std::string_view opening;
  std::array<std::string_view, 3> closes;
  std::array<std::string_view, 4> boundary;
};

constexpr std::array<ImpliedClose, 7> kImpliedCloses = {{
    {"li", {"li", "", ""}, {"ul", "ol", "", ""}},
    {"td", {"td", "th", ""}, {"tr", "table", "", ""}},
    {"th", {"td", "th", ""}, {"tr", "table", "", ""}},
    {"tr", {"tr", "td", "th"}, {"table", "tbody", "thead", "tfoot"}},
    {"option", {"option", "", ""}, {"select", "", "", ""}},
    {"dt", {"dt", "dd", ""}, {"dl", "", "", ""}},
    {"dd", {"dt", "dd", ""}, {"dl", "", "", ""}},
}};

bool contains(const auto& arr, std::string_view v) {
  return !v.empty() && std::find(arr.begin(), arr.end(), v) != arr.end();
}

class TreeBuilder {
 public:
  TreeBuilder() { stack_.push_back(&document_); }

  void text(std::string_view raw) {
    const std::string decoded = decode_entities(raw);
    DomNode& top = *stack_.back();
    top.text.push_back(' ');
    top.text.append(decoded);
  }

  void start(std::string tag, std::vector<std::pair<std::string, std::string>> attrs, bool self_closing) {
    apply_implied_close(tag);
    DomNode& parent = *stack_.back();
    DomNode node;
    node.tag = std::move(tag);
    node.attrs = std::move(attrs);
    parent.children.push_back(std::move(node));
    ++elements_;
    DomNode& child = parent.children.back();
    if (!self_closing && !is_void(child.tag)) stack_.push_back(&child);
  }

  void end(std::string_view tag) {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == tag) {
        stack_.resize(i);
        return;
      }
    }
  }

  std::size_t elements() const { return elements_; }
  DomNode take_document() { return std::move(document_); }

 private:
  void apply_implied_close(std::string_view tag) {
    if (tag == "p") {
      if (stack_.size() > 1 && stack_.back()->tag == "p") stack_.pop_back();
      return;
    }
    for (const auto& rule : kImpliedCloses) {
      if (rule.opening != tag) continue;
      for (std::size_t i = stack_.size(); i-- > 1;) {
        const std::string& open = stack_[i]->tag;
        if (contains(rule.boundary, open)) return;
        if (contains(rule.closes, open)) {
          stack_.resize(i);
          return;
        }
      }
      return;
    }
  }

  DomNode document_;
  std::vector<DomNode*> stack_;
  std::size_t elements_ = 0;
};

void finalize_text(DomNode& node) {
  node.text = collapse_whitespace(node.text);
  for (auto& child : node.children) finalize_text(child);
}

bool has_visible_text(const DomNode& node) {
  return std::any_of(node.text.begin(), node.text.end(), [](char c) { return !is_space(c); });
}

void serialize_node(const DomNode& node, std::size_t depth, std::string& structure, std::string& texts) {
  structure.append(node.tag);
  structure.push_back('(');
  structure.append(std::to_string(depth));
  structure.push_back(')');
  for (const auto& [name, value] : node.attrs) {
    structure.push_back('[');
    structure.append(name);
    structure.push_back(']');
  }
  if (!node.text.empty()) {
    if (!texts.empty()) texts.push_back(kCompositeDelimiter);
    texts.append(node.text);
  }
  for (const auto& child : node.children) serialize_node(child, depth + 1, structure, texts);
}

}  // namespace

std::size_t count_nodes(const DomNode& node) {
  std::size_t n = 1;
  for (const auto& c : node.children) n += count_nodes(c);
  return n;
}

DomTree parse_dom(std::string_view html) {
  if (html.empty()) throw PageUnparseable("empty html");
  bool had_invalid = false;
  const std::string src = sanitize_utf8(html, &had_invalid);
  const std::string_view s = src;

  TreeBuilder builder;
  std::size_t i = 0;
  std::size_t text_start = 0;
  auto flush_text = [&](std::size_t upto) {
    if (upto > text_start) builder.text(s.substr(text_start, upto - text_start));
  };
  auto skip_past = [&](std::size_t from, std::string_view terminator) {
    const std::size_t p = s.find(terminator, from);
    return p == std::string_view::npos ? s.size() : p + terminator.size();
  };

  while (i < s.size()) {
    if (s[i] != '<') {
      ++i;
      continue;
    }
    if (s.compare(i, 4, "<!--") == 0) {
      flush_text(i);
      i = skip_past(i + 4, "-->");
      text_start = i;
      continue;
    }
    if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
      flush_text(i);
      i = skip_past(i + 2, ">");
      text_start = i;
      continue;
    }
    if (i + 1 < s.size() && s[i + 1] == '/') {
      std::size_t j = i + 2;
      while (j < s.size() && is_name_char(s[j])) ++j;
      flush_text(i);
      const std::string name = to_lower_ascii(s.substr(i + 2, j - i - 2));
      i = skip_past(j, ">");
      text_start = i;
      if (!name.empty()) builder.end(name);
      continue;
    }
    if (i + 1 >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i + 1]))) {
      ++i;  // stray '<' stays in the text run
      continue;
    }

    flush_text(i);
    std::size_t j = i + 1;
    while (j < s.size() && is_name_char(s[j])) ++j;
    std::string tag = to_lower_ascii(s.substr(i + 1, j - i - 1));
    std::vector<std::pair<std::string, std::string>> attrs;
    bool self_closing = false;
    while (j < s.size() && s[j] != '>') {
      if (is_space(s[j])) {
        ++j;
        continue;
      }
      if (s[j] == '/') {
        self_closing = j + 1 < s.size() && s[j + 1] == '>';
        ++j;
        continue;
      }
      const std::size_t name_start = j;
      while (j < s.size() && !is_space(s[j]) && s[j] != '=' && s[j] != '>' && s[j] != '/') ++j;
      std::string attr_name = to_lower_ascii(s.substr(name_start, j - name_start));
      if (j == name_start) {
        ++j;
        continue;
      }
      while (j < s.size() && is_space(s[j])) ++j;
      std::string value;
      if (j < s.size() && s[j] == '=') {
        ++j;
        while (j < s.size() && is_space(s[j])) ++j;
        if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
          const char q = s[j];
          const std::size_t close = s.find(q, j + 1);
          const std::size_t end = close == std::string_view::npos ? s.size() : close;
          value = decode_entities(s.substr(j + 1, end - j - 1));
          j = close == std::string_view::npos ? s.size() : close + 1;
        } else {
          const std::size_t vstart = j;
          while (j < s.size() && !is_space(s[j]) && s[j] != '>') ++j;
          value = decode_entities(s.substr(vstart, j - vstart));
        }
      }
      if ((attr_name == "id" || attr_name == "class") &&
          std::none_of(attrs.begin(), attrs.end(), [&](const auto& a) { return a.first == attr_name; })) {
        attrs.emplace_back(std::move(attr_name), collapse_whitespace(value));
      }
    }
    i = j < s.size() ? j + 1 : s.size();
    text_start = i;

    const bool raw = is_raw_text(tag);
    const std::string closing = "</" + tag;
    builder.start(std::move(tag), std::move(attrs), self_closing);
    if (raw && !self_closing) {
      // raw text bodies are dropped entirely
      std::size_t k = i;
      while (k < s.size() && !starts_with_ci(s, k, closing)) ++k;
      if (k < s.size()) {
        builder.end(closing.substr(2));
        i = skip_past(k, ">");
      } else {
        i = s.size();
      }
      text_start = i;
    }
  }
  flush_text(s.size());

  if (builder.elements() == 0 && had_invalid) {
    throw PageUnparseable("undecodable input with no elements");
  }

  DomNode document = builder.take_document();
  finalize_text(document);

  DomTree tree;
  if (document.children.size() == 1 && !has_visible_text(document)) {
    tree.root = std::move(document.children.front());
  } else {
    tree.root = std::move(document);
    tree.root.tag = "html";
  }
  tree.node_count = count_nodes(tree.root);
  return tree;
}

SerializedPage serialize_page(const DomTree& tree, std::string page_id) {
  std::string structure;
  std::string texts;
  serialize_node(tree.root, 0, structure, texts);
  SerializedPage out;
  out.page_id = std::move(page_id);
  out.composite.reserve(structure.size() + 1 + texts.size());
  out.composite.append(structure);
  out.composite.push_back(kCompositeDelimiter);
  out.composite.append(texts);
  return out;
}

}  // namespace devgeo
