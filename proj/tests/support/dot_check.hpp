#pragma once

// Minimal DOT well-formedness checker used as an independent oracle for
// exported diagrams. Accepts the digraph subset the exporter produces:
// node statements, edge statements, subgraphs, and attr assignments.

#include <cctype>
#include <string>
#include <vector>

namespace testsupport {

class DotChecker {
 public:
  bool check(const std::string& text, std::string* error = nullptr) {
    tokens_.clear();
    pos_ = 0;
    if (!lex(text, error)) return false;
    if (!eat_ident("digraph")) return fail(error, "expected 'digraph'");
    if (at_ident()) take();  // graph name
    if (!parse_block()) return fail(error, err_);
    if (pos_ != tokens_.size()) return fail(error, "trailing tokens");
    return true;
  }

 private:
  struct Tok {
    char kind;  // 'i' ident/number, 's' string, or the punct char
    std::string text;
  };

  bool lex(const std::string& text, std::string* error) {
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t s = i;
        while (i < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[i])) ||
                text[i] == '_'))
          ++i;
        tokens_.push_back({'i', text.substr(s, i - s)});
        continue;
      }
      if (c == '"') {
        ++i;
        std::string v;
        bool closed = false;
        while (i < text.size()) {
          if (text[i] == '\\' && i + 1 < text.size()) {
            v += text[i + 1];
            i += 2;
            continue;
          }
          if (text[i] == '"') {
            ++i;
            closed = true;
            break;
          }
          v += text[i++];
        }
        if (!closed) return fail(error, "unterminated string");
        tokens_.push_back({'s', v});
        continue;
      }
      if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
        tokens_.push_back({'>', "->"});
        i += 2;
        continue;
      }
      if (c == '{' || c == '}' || c == '[' || c == ']' || c == ';' ||
          c == ',' || c == '=') {
        tokens_.push_back({c, std::string(1, c)});
        ++i;
        continue;
      }
      return fail(error, std::string("stray character '") + c + "'");
    }
    return true;
  }

  bool at(char kind) const {
    return pos_ < tokens_.size() && tokens_[pos_].kind == kind;
  }
  bool at_ident() const { return at('i'); }
  const Tok& take() { return tokens_[pos_++]; }
  bool eat(char kind) {
    if (!at(kind)) return false;
    take();
    return true;
  }
  bool eat_ident(const std::string& word) {
    if (at_ident() && tokens_[pos_].text == word) {
      take();
      return true;
    }
    return false;
  }

  bool parse_block() {
    if (!eat('{')) return set_err("expected '{'");
    while (!at('}')) {
      if (pos_ >= tokens_.size()) return set_err("unclosed block");
      if (!parse_statement()) return false;
    }
    take();  // }
    return true;
  }

  bool parse_statement() {
    if (eat_ident("subgraph")) {
      if (at_ident()) take();
      return parse_block();
    }
    if (!at_ident()) return set_err("expected a statement");
    take();  // node name / attr name / graph attr
    if (eat('=')) {
      if (!at_ident() && !at('s')) return set_err("expected attr value");
      take();
      eat(';');
      return true;
    }
    if (eat('>')) {
      if (!at_ident()) return set_err("edge needs a target node");
      take();
    }
    if (at('[') && !parse_attr_list()) return false;
    eat(';');
    return true;
  }

  bool parse_attr_list() {
    take();  // [
    while (!at(']')) {
      if (pos_ >= tokens_.size()) return set_err("unclosed attr list");
      if (!at_ident()) return set_err("expected attr name");
      take();
      if (!eat('=')) return set_err("expected '='");
      if (!at_ident() && !at('s')) return set_err("expected attr value");
      take();
      eat(',');
    }
    take();  // ]
    return true;
  }

  bool set_err(const std::string& msg) {
    err_ = msg;
    return false;
  }
  static bool fail(std::string* error, const std::string& msg) {
    if (error) *error = msg;
    return false;
  }

  std::vector<Tok> tokens_;
  std::size_t pos_ = 0;
  std::string err_;
};

}  // namespace testsupport
