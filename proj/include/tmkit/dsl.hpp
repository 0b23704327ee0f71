#pragma once

// Textual .tm language: parser producing a Document (model + event
// declarations + chronology + optional sim config) and a canonical
// printer. The parser is purely syntactic; semantic checks live in
// validate() and build_chronology().

#include <cctype>
#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "tmkit/eventing.hpp"
#include "tmkit/model.hpp"
#include "tmkit/simulator.hpp"

namespace tmkit {

struct SourceSpan {
  int line = 1;    // 1-based
  int column = 1;  // 1-based
  int length = 1;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

struct ParseError {
  enum class Code {
    UnexpectedToken,
    UnclosedBlock,
    DuplicateName,
    UnknownKeyword,
  };
  SourceSpan span;
  Code code = Code::UnexpectedToken;
  std::string message;
};

inline std::string_view to_string(ParseError::Code c) {
  switch (c) {
    case ParseError::Code::UnexpectedToken: return "UNEXPECTED_TOKEN";
    case ParseError::Code::UnclosedBlock: return "UNCLOSED_BLOCK";
    case ParseError::Code::DuplicateName: return "DUPLICATE_NAME";
    case ParseError::Code::UnknownKeyword: return "UNKNOWN_KEYWORD";
  }
  return "?";
}

/// Unresolved event declaration as written in the source; carve_event
/// resolves the selector against the model.
struct EventDecl {
  std::string id;
  std::string name;
  RegionSelector selector;
  int duration = 1;
  std::optional<double> intensity;
  std::vector<FlagAssign> effects;

  friend bool operator==(const EventDecl&, const EventDecl&) = default;
};

struct Document {
  Model model;
  bool has_events = false;
  std::vector<EventDecl> events;
  std::vector<ChronEdge> edges;
  std::optional<std::string> initial;
  std::optional<SimConfig> simcfg;

  friend bool operator==(const Document&, const Document&) = default;

  /// Carves every declared event and assembles the checked chronology.
  Chronology build_chronology_checked() const {
    std::vector<Event> carved;
    for (const auto& d : events) {
      Event ev = carve_event(model, d.id, d.selector, d.duration);
      ev.name = d.name;
      ev.intensity = d.intensity;
      ev.effects = d.effects;
      carved.push_back(std::move(ev));
    }
    if (!initial)
      throw TmError(Errc::UnknownEvent, "document declares no chronology");
    return build_chronology(model, std::move(carved), edges, *initial);
  }
};

struct ParseResult {
  std::optional<Document> document;
  std::vector<ParseError> errors;

  bool ok() const { return errors.empty() && document.has_value(); }
};

// ---------------------------------------------------------------------------
// Lexer

namespace dsl_detail {

enum class Tok {
  Ident,
  Int,
  Float,
  String,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Semi,
  Comma,
  Colon,
  Equals,
  Dot,
  Arrow,      // ->
  DashArrow,  // -.->
  End,
  Bad,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceSpan span;
  long int_value = 0;
  double float_value = 0.0;
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// CRLF/CR are normalized to LF before lexing.
inline std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      out += '\n';
    } else {
      out += text[i];
    }
  }
  return out;
}

inline std::vector<Token> lex(const std::string& src,
                              std::vector<ParseError>& errors) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto push = [&](Tok kind, std::size_t start, int sl, int sc) {
    Token t;
    t.kind = kind;
    t.text = src.substr(start, i - start);
    t.span = {sl, sc, static_cast<int>(i - start)};
    out.push_back(std::move(t));
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    int sl = line, sc = col;
    std::size_t start = i;
    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) advance(1);
      push(Tok::Ident, start, sl, sc);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < src.size() &&
         std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      advance(1);
      bool is_float = false;
      while (i < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[i])) ||
              (src[i] == '.' && i + 1 < src.size() &&
               std::isdigit(static_cast<unsigned char>(src[i + 1]))))) {
        if (src[i] == '.') is_float = true;
        advance(1);
      }
      push(is_float ? Tok::Float : Tok::Int, start, sl, sc);
      Token& t = out.back();
      if (is_float)
        t.float_value = std::stod(t.text);
      else
        std::from_chars(t.text.data(), t.text.data() + t.text.size(),
                        t.int_value);
      continue;
    }
    if (c == '"') {
      advance(1);
      std::string value;
      bool closed = false;
      while (i < src.size()) {
        if (src[i] == '\\' && i + 1 < src.size()) {
          value += src[i + 1];
          advance(2);
          continue;
        }
        if (src[i] == '"') {
          advance(1);
          closed = true;
          break;
        }
        if (src[i] == '\n') break;
        value += src[i];
        advance(1);
      }
      if (!closed)
        errors.push_back({{sl, sc, static_cast<int>(i - start)},
                          ParseError::Code::UnexpectedToken,
                          "unterminated string literal"});
      Token t;
      t.kind = Tok::String;
      t.text = value;
      t.span = {sl, sc, static_cast<int>(i - start)};
      out.push_back(std::move(t));
      continue;
    }
    if (c == '-') {
      if (src.compare(i, 4, "-.->") == 0) {
        advance(4);
        push(Tok::DashArrow, start, sl, sc);
        continue;
      }
      if (src.compare(i, 2, "->") == 0) {
        advance(2);
        push(Tok::Arrow, start, sl, sc);
        continue;
      }
    }
    Tok kind = Tok::Bad;
    switch (c) {
      case '{': kind = Tok::LBrace; break;
      case '}': kind = Tok::RBrace; break;
      case '[': kind = Tok::LBracket; break;
      case ']': kind = Tok::RBracket; break;
      case ';': kind = Tok::Semi; break;
      case ',': kind = Tok::Comma; break;
      case ':': kind = Tok::Colon; break;
      case '=': kind = Tok::Equals; break;
      case '.': kind = Tok::Dot; break;
      default: break;
    }
    advance(1);
    if (kind == Tok::Bad)
      errors.push_back({{sl, sc, 1},
                        ParseError::Code::UnexpectedToken,
                        std::string("stray character '") + c + "'"});
    else
      push(kind, start, sl, sc);
  }
  Token end;
  end.kind = Tok::End;
  end.span = {line, col, 0};
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view text) {
    src_ = normalize_newlines(text);
    tokens_ = lex(src_, errors_);
  }

  ParseResult run() {
    while (!at(Tok::End)) {
      if (!parse_declaration()) sync_toplevel();
    }
    ParseResult res;
    res.errors = std::move(errors_);
    if (res.errors.empty()) res.document = std::move(doc_);
    return res;
  }

 private:
  const Token& peek(std::size_t n = 0) const {
    std::size_t idx = pos_ + n;
    return idx < tokens_.size() ? tokens_[idx] : tokens_.back();
  }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_kw(std::string_view kw) const {
    return at(Tok::Ident) && peek().text == kw;
  }
  const Token& take() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  void error(ParseError::Code code, const std::string& msg) {
    errors_.push_back({peek().span, code, msg});
  }

  bool expect(Tok k, const std::string& what) {
    if (at(k)) {
      take();
      return true;
    }
    error(ParseError::Code::UnexpectedToken,
          "expected " + what + ", got '" + describe(peek()) + "'");
    return false;
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "end of input";
    if (t.kind == Tok::String) return "\"" + t.text + "\"";
    return t.text;
  }

  void sync_toplevel() {
    int depth = 0;
    while (!at(Tok::End)) {
      Tok k = peek().kind;
      if (k == Tok::LBrace) ++depth;
      if (k == Tok::RBrace) {
        if (depth == 0) {
          take();
          return;
        }
        --depth;
      }
      if (k == Tok::Semi && depth == 0) {
        take();
        return;
      }
      take();
    }
  }

  void sync_statement() {
    while (!at(Tok::End) && !at(Tok::Semi) && !at(Tok::RBrace)) take();
    if (at(Tok::Semi)) take();
  }

  bool parse_declaration() {
    if (!at(Tok::Ident)) {
      error(ParseError::Code::UnexpectedToken,
            "expected a declaration, got '" + describe(peek()) + "'");
      return false;
    }
    const std::string& kw = peek().text;
    if (kw == "machine") return parse_machine("");
    if (kw == "sort") return parse_sort();
    if (kw == "guard") return parse_guard();
    if (kw == "flow") return parse_flow();
    if (kw == "trigger") return parse_trigger();
    if (kw == "events") return parse_events();
    if (kw == "simcfg") return parse_simcfg();
    error(ParseError::Code::UnknownKeyword, "unknown keyword '" + kw + "'");
    return false;
  }

  bool parse_machine(const std::string& parent) {
    SourceSpan open = peek().span;
    take();  // machine
    if (!at(Tok::Ident)) {
      error(ParseError::Code::UnexpectedToken, "expected machine name");
      return false;
    }
    std::string name = take().text;
    std::string id = parent.empty() ? name : parent + "." + name;

    // sibling uniqueness is syntactic: the path doubles as the id
    if (doc_.model.find_machine(id)) {
      error(ParseError::Code::DuplicateName,
            "duplicate machine name '" + name + "'");
      return false;
    }
    Machine m;
    m.id = id;
    m.name = name;
    if (!parent.empty()) {
      m.parent = parent;
      for (auto& pm : doc_.model.machines)
        if (pm.id == parent) pm.submachines.push_back(id);
    }
    std::size_t index = doc_.model.machines.size();
    doc_.model.machines.push_back(std::move(m));

    if (!expect(Tok::LBrace, "'{'")) return false;
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) {
        errors_.push_back({open, ParseError::Code::UnclosedBlock,
                           "machine '" + name + "' is never closed"});
        return false;
      }
      if (at_kw("machine")) {
        if (!parse_machine(id)) sync_statement();
        continue;
      }
      // flows and triggers may be written inside the machine that owns
      // them; they land in the model's global arc lists either way
      if (at_kw("flow")) {
        if (!parse_flow()) sync_statement();
        continue;
      }
      if (at_kw("trigger")) {
        if (!parse_trigger()) sync_statement();
        continue;
      }
      if (at(Tok::Ident)) {
        if (auto kind = stage_kind_from(peek().text)) {
          take();
          Stage st;
          st.kind = *kind;
          while (at(Tok::Ident)) {
            std::string ann = peek().text;
            if (ann == "lane") {
              take();
              if (at(Tok::String) || at(Tok::Ident))
                st.lane = take().text;
              else
                error(ParseError::Code::UnexpectedToken, "expected lane name");
            } else if (ann == "queue") {
              take();
              st.has_queue = true;
              if (at(Tok::Int))
                st.queue_capacity = static_cast<int>(take().int_value);
              else if (at_kw("unbounded"))
                take();
              else
                error(ParseError::Code::UnexpectedToken,
                      "expected queue capacity or 'unbounded'");
            } else if (ann == "state") {
              take();
              if (at(Tok::Ident))
                st.state_flag = take().text;
              else
                error(ParseError::Code::UnexpectedToken, "expected flag name");
            } else {
              error(ParseError::Code::UnknownKeyword,
                    "unknown stage annotation '" + ann + "'");
              take();
            }
          }
          expect(Tok::Semi, "';'");
          doc_.model.machines[index].stages.push_back(std::move(st));
          continue;
        }
        error(ParseError::Code::UnknownKeyword,
              "unknown machine item '" + peek().text + "'");
        sync_statement();
        continue;
      }
      error(ParseError::Code::UnexpectedToken,
            "unexpected '" + describe(peek()) + "' in machine body");
      sync_statement();
    }
    take();  // }
    return true;
  }

  // path = ident { "." ident }; returns the dotted string
  bool parse_path(std::string& out) {
    if (!at(Tok::Ident)) {
      error(ParseError::Code::UnexpectedToken, "expected a dotted path");
      return false;
    }
    out = take().text;
    while (at(Tok::Dot)) {
      take();
      if (!at(Tok::Ident)) {
        error(ParseError::Code::UnexpectedToken, "expected path segment");
        return false;
      }
      out += "." + take().text;
    }
    return true;
  }

  // stage-ref = path "." kind [":" lane]; the split is purely syntactic
  bool parse_stage_ref(StageRef& out) {
    std::string path;
    if (!parse_path(path)) return false;
    auto dot = path.rfind('.');
    std::string last = dot == std::string::npos ? path : path.substr(dot + 1);
    auto kind = stage_kind_from(last);
    if (!kind) {
      error(ParseError::Code::UnexpectedToken,
            "stage reference must end in a stage kind (got '" + last + "')");
      return false;
    }
    out.kind = *kind;
    out.machine = dot == std::string::npos ? "" : path.substr(0, dot);
    out.lane = "default";
    if (at(Tok::Colon)) {
      take();
      if (at(Tok::String) || at(Tok::Ident))
        out.lane = take().text;
      else {
        error(ParseError::Code::UnexpectedToken, "expected lane name");
        return false;
      }
    }
    return true;
  }

  bool parse_sort() {
    take();  // sort
    if (!at(Tok::Ident)) {
      error(ParseError::Code::UnexpectedToken, "expected sort name");
      return false;
    }
    ThingSort s;
    s.name = take().text;
    if (doc_.model.find_sort(s.name)) {
      error(ParseError::Code::DuplicateName,
            "duplicate sort name '" + s.name + "'");
      return false;
    }
    if (at_kw("machine")) {
      take();
      std::string ref;
      if (!parse_path(ref)) return false;
      s.machine_ref = ref;
    }
    if (at(Tok::LBrace)) {
      SourceSpan open = take().span;
      while (!at(Tok::RBrace)) {
        if (at(Tok::End)) {
          errors_.push_back({open, ParseError::Code::UnclosedBlock,
                             "sort '" + s.name + "' is never closed"});
          return false;
        }
        if (!at(Tok::Ident)) {
          error(ParseError::Code::UnexpectedToken, "expected attribute name");
          sync_statement();
          continue;
        }
        AttributeSlot slot;
        slot.name = take().text;
        if (!expect(Tok::Colon, "':'")) {
          sync_statement();
          continue;
        }
        std::string kind = at(Tok::Ident) ? take().text : "";
        if (kind == "int")
          slot.kind = AttributeSlot::Kind::Int;
        else if (kind == "string")
          slot.kind = AttributeSlot::Kind::String;
        else if (kind == "bool")
          slot.kind = AttributeSlot::Kind::Bool;
        else {
          error(ParseError::Code::UnknownKeyword,
                "unknown attribute kind '" + kind + "'");
          sync_statement();
          continue;
        }
        expect(Tok::Semi, "';'");
        s.attributes.push_back(std::move(slot));
      }
      take();  // }
    } else {
      if (!expect(Tok::Semi, "';'")) return false;
    }
    doc_.model.sorts.push_back(std::move(s));
    return true;
  }

  bool parse_guard() {
    take();  // guard
    if (!at(Tok::Ident)) {
      error(ParseError::Code::UnexpectedToken, "expected guard id");
      return false;
    }
    Guard g;
    g.id = take().text;
    if (doc_.model.find_guard(g.id)) {
      error(ParseError::Code::DuplicateName,
            "duplicate guard id '" + g.id + "'");
      return false;
    }
    std::string kind = at(Tok::Ident) ? take().text : "";
    if (kind == "range") {
      RangeCheck rc;
      if (!at(Tok::Ident)) {
        error(ParseError::Code::UnexpectedToken, "expected attribute name");
        return false;
      }
      rc.attribute = take().text;
      if (!at(Tok::Int)) {
        error(ParseError::Code::UnexpectedToken, "expected range minimum");
        return false;
      }
      rc.min = take().int_value;
      if (!at(Tok::Int)) {
        error(ParseError::Code::UnexpectedToken, "expected range maximum");
        return false;
      }
      rc.max = take().int_value;
      g.kind = rc;
    } else if (kind == "script") {
      Scripted sc;
      if (!parse_outcome_list(sc.outcomes)) return false;
      g.kind = sc;
    } else if (kind == "bernoulli") {
      Bernoulli b;
      if (at(Tok::Float))
        b.p = take().float_value;
      else if (at(Tok::Int))
        b.p = static_cast<double>(take().int_value);
      else {
        error(ParseError::Code::UnexpectedToken, "expected probability");
        return false;
      }
      g.kind = b;
    } else {
      error(ParseError::Code::UnknownKeyword,
            "unknown guard kind '" + kind + "'");
      return false;
    }
    if (at(Tok::String)) g.description = take().text;
    if (!expect(Tok::Semi, "';'")) return false;
    doc_.model.guards.push_back(std::move(g));
    return true;
  }

  bool parse_outcome_list(std::vector<std::string>& out) {
    if (!expect(Tok::LBracket, "'['")) return false;
    while (true) {
      if (!at(Tok::Ident)) {
        error(ParseError::Code::UnexpectedToken, "expected outcome label");
        return false;
      }
      out.push_back(take().text);
      if (at(Tok::Comma)) {
        take();
        continue;
      }
      break;
    }
    return expect(Tok::RBracket, "']'");
  }

  bool parse_flow() {
    take();  // flow
    FlowArc f;
    if (!parse_stage_ref(f.from)) return false;
    if (!expect(Tok::Arrow, "'->'")) return false;
    if (!parse_stage_ref(f.to)) return false;
    while (at(Tok::Ident)) {
      std::string kw = peek().text;
      if (kw == "guard") {
        take();
        if (!at(Tok::Ident)) {
          error(ParseError::Code::UnexpectedToken, "expected guard id");
          return false;
        }
        f.guard = take().text;
      } else if (kw == "label") {
        take();
        if (!at(Tok::String)) {
          error(ParseError::Code::UnexpectedToken, "expected label string");
          return false;
        }
        f.label = take().text;
      } else {
        error(ParseError::Code::UnknownKeyword,
              "unknown flow annotation '" + kw + "'");
        return false;
      }
    }
    if (!expect(Tok::Semi, "';'")) return false;
    doc_.model.flows.push_back(std::move(f));
    return true;
  }

  bool parse_trigger() {
    take();  // trigger
    TriggerArc t;
    if (!parse_stage_ref(t.from)) return false;
    if (!expect(Tok::DashArrow, "'-.->'")) return false;
    if (!parse_stage_ref(t.to)) return false;
    if (at_kw("label")) {
      take();
      if (!at(Tok::String)) {
        error(ParseError::Code::UnexpectedToken, "expected label string");
        return false;
      }
      t.label = take().text;
    }
    if (!expect(Tok::Semi, "';'")) return false;
    doc_.model.triggers.push_back(std::move(t));
    return true;
  }

  bool parse_events() {
    SourceSpan open = peek().span;
    take();  // events
    if (!expect(Tok::LBrace, "'{'")) return false;
    doc_.has_events = true;
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) {
        errors_.push_back({open, ParseError::Code::UnclosedBlock,
                           "events block is never closed"});
        return false;
      }
      if (at_kw("event")) {
        if (!parse_event()) sync_statement();
        continue;
      }
      if (at_kw("chronology")) {
        if (!parse_chronology()) sync_statement();
        continue;
      }
      error(ParseError::Code::UnknownKeyword,
            "expected 'event' or 'chronology', got '" + describe(peek()) +
                "'");
      sync_statement();
    }
    take();  // }
    return true;
  }

  bool parse_event() {
    SourceSpan open = peek().span;
    take();  // event
    if (!at(Tok::Ident)) {
      error(ParseError::Code::UnexpectedToken, "expected event id");
      return false;
    }
    EventDecl d;
    d.id = take().text;
    for (const auto& e : doc_.events)
      if (e.id == d.id) {
        error(ParseError::Code::DuplicateName,
              "duplicate event id '" + d.id + "'");
        return false;
      }
    if (at(Tok::String)) d.name = take().text;
    if (!expect(Tok::LBrace, "'{'")) return false;
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) {
        errors_.push_back({open, ParseError::Code::UnclosedBlock,
                           "event '" + d.id + "' is never closed"});
        return false;
      }
      std::string kw = at(Tok::Ident) ? peek().text : "";
      if (kw == "region") {
        take();
        while (true) {
          std::string entry;
          if (!parse_region_entry(entry)) return false;
          d.selector.entries.push_back(std::move(entry));
          if (at(Tok::Comma)) {
            take();
            continue;
          }
          break;
        }
        expect(Tok::Semi, "';'");
      } else if (kw == "duration") {
        take();
        if (!at(Tok::Int)) {
          error(ParseError::Code::UnexpectedToken, "expected duration");
          return false;
        }
        d.duration = static_cast<int>(take().int_value);
        expect(Tok::Semi, "';'");
      } else if (kw == "intensity") {
        take();
        if (at(Tok::Float))
          d.intensity = take().float_value;
        else if (at(Tok::Int))
          d.intensity = static_cast<double>(take().int_value);
        else {
          error(ParseError::Code::UnexpectedToken, "expected intensity");
          return false;
        }
        expect(Tok::Semi, "';'");
      } else if (kw == "set") {
        take();
        FlagAssign fx;
        if (!parse_path(fx.flag)) return false;
        if (!expect(Tok::Equals, "'='")) return false;
        if (at_kw("true") || at_kw("false"))
          fx.value = take().text == "true";
        else {
          error(ParseError::Code::UnexpectedToken, "expected true or false");
          return false;
        }
        expect(Tok::Semi, "';'");
        d.effects.push_back(std::move(fx));
      } else {
        error(ParseError::Code::UnknownKeyword,
              "unknown event item '" + describe(peek()) + "'");
        sync_statement();
      }
    }
    take();  // }
    doc_.events.push_back(std::move(d));
    return true;
  }

  // region entry: dotted path [":" lane] [ "->" dotted path [":" lane] ]
  bool parse_region_entry(std::string& out) {
    auto one = [&](std::string& dst) {
      std::string p;
      if (!parse_path(p)) return false;
      if (at(Tok::Colon)) {
        take();
        if (at(Tok::String) || at(Tok::Ident))
          p += ":" + take().text;
        else {
          error(ParseError::Code::UnexpectedToken, "expected lane name");
          return false;
        }
      }
      dst = p;
      return true;
    };
    std::string lhs;
    if (!one(lhs)) return false;
    if (at(Tok::Arrow)) {
      take();
      std::string rhs;
      if (!one(rhs)) return false;
      out = lhs + " -> " + rhs;
    } else {
      out = lhs;
    }
    return true;
  }

  bool parse_chronology() {
    SourceSpan open = peek().span;
    take();  // chronology
    if (!expect(Tok::LBrace, "'{'")) return false;
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) {
        errors_.push_back({open, ParseError::Code::UnclosedBlock,
                           "chronology block is never closed"});
        return false;
      }
      if (at_kw("initial")) {
        take();
        if (!at(Tok::Ident)) {
          error(ParseError::Code::UnexpectedToken, "expected event id");
          return false;
        }
        doc_.initial = take().text;
        expect(Tok::Semi, "';'");
        continue;
      }
      if (at(Tok::Ident)) {
        ChronEdge e;
        e.from = take().text;
        if (!expect(Tok::Arrow, "'->'")) {
          sync_statement();
          continue;
        }
        if (!at(Tok::Ident)) {
          error(ParseError::Code::UnexpectedToken, "expected event id");
          sync_statement();
          continue;
        }
        e.to = take().text;
        if (at(Tok::LBracket)) {
          take();
          if (!at(Tok::Ident)) {
            error(ParseError::Code::UnexpectedToken, "expected guard id");
            return false;
          }
          e.guard = take().text;
          if (!at(Tok::Ident)) {
            error(ParseError::Code::UnexpectedToken, "expected outcome label");
            return false;
          }
          e.outcome = take().text;
          if (!expect(Tok::RBracket, "']'")) return false;
        }
        expect(Tok::Semi, "';'");
        doc_.edges.push_back(std::move(e));
        continue;
      }
      error(ParseError::Code::UnexpectedToken,
            "unexpected '" + describe(peek()) + "' in chronology");
      sync_statement();
    }
    take();  // }
    return true;
  }

  bool parse_simcfg() {
    SourceSpan open = peek().span;
    take();  // simcfg
    if (!expect(Tok::LBrace, "'{'")) return false;
    SimConfig cfg;
    cfg.arrivals.clear();
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) {
        errors_.push_back({open, ParseError::Code::UnclosedBlock,
                           "simcfg block is never closed"});
        return false;
      }
      std::string kw = at(Tok::Ident) ? peek().text : "";
      if (kw == "arrivals") {
        take();
        ArrivalEntry a;
        if (!at(Tok::Int)) {
          error(ParseError::Code::UnexpectedToken, "expected arrival count");
          return false;
        }
        a.count = static_cast<int>(take().int_value);
        if (!at_kw("at")) {
          error(ParseError::Code::UnexpectedToken, "expected 'at'");
          return false;
        }
        take();
        if (!at(Tok::Int)) {
          error(ParseError::Code::UnexpectedToken, "expected arrival period");
          return false;
        }
        a.period = static_cast<int>(take().int_value);
        expect(Tok::Semi, "';'");
        cfg.arrivals.push_back(a);
      } else if (kw == "horizon" || kw == "seed") {
        take();
        if (!at(Tok::Int)) {
          error(ParseError::Code::UnexpectedToken, "expected integer");
          return false;
        }
        long v = take().int_value;
        if (kw == "horizon")
          cfg.horizon = static_cast<int>(v);
        else
          cfg.seed = static_cast<unsigned long long>(v);
        expect(Tok::Semi, "';'");
      } else if (kw == "sort") {
        take();
        if (!at(Tok::Ident)) {
          error(ParseError::Code::UnexpectedToken, "expected sort name");
          return false;
        }
        cfg.sort = take().text;
        expect(Tok::Semi, "';'");
      } else if (kw == "script") {
        take();
        if (!at(Tok::Ident)) {
          error(ParseError::Code::UnexpectedToken, "expected guard id");
          return false;
        }
        std::string gid = take().text;
        std::vector<std::string> outcomes;
        if (!parse_outcome_list(outcomes)) return false;
        expect(Tok::Semi, "';'");
        cfg.scripts[gid] = std::move(outcomes);
      } else if (kw == "attr") {
        take();
        if (!at(Tok::Ident)) {
          error(ParseError::Code::UnexpectedToken, "expected attribute name");
          return false;
        }
        std::string name = take().text;
        if (!expect(Tok::Equals, "'='")) return false;
        AttrValue value;
        if (at(Tok::Int))
          value = take().int_value;
        else if (at(Tok::String))
          value = take().text;
        else if (at_kw("true") || at_kw("false"))
          value = take().text == "true";
        else {
          error(ParseError::Code::UnexpectedToken, "expected attribute value");
          return false;
        }
        expect(Tok::Semi, "';'");
        cfg.attributes[name] = std::move(value);
      } else {
        error(ParseError::Code::UnknownKeyword,
              "unknown simcfg item '" + describe(peek()) + "'");
        sync_statement();
      }
    }
    take();  // }
    doc_.simcfg = std::move(cfg);
    return true;
  }

  std::string src_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<ParseError> errors_;
  Document doc_;
};

}  // namespace dsl_detail

inline ParseResult parse(std::string_view text) {
  return dsl_detail::Parser(text).run();
}

// ---------------------------------------------------------------------------
// Canonical printer

namespace dsl_detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string ref_text(const StageRef& r) {
  std::string s = r.machine;
  if (!s.empty()) s += '.';
  s += to_string(r.kind);
  if (r.lane != "default") s += ":" + quote(r.lane);
  return s;
}

inline void print_machine(const Model& model, const Machine& m, int indent,
                          std::string& out) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  out += pad + "machine " + m.name + " {\n";
  std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  for (const auto& s : m.stages) {
    out += inner + std::string(to_string(s.kind));
    if (s.lane != "default") out += " lane " + quote(s.lane);
    if (s.has_queue) {
      out += " queue ";
      out += s.queue_capacity ? std::to_string(*s.queue_capacity)
                              : std::string("unbounded");
    }
    if (s.state_flag) out += " state " + *s.state_flag;
    out += ";\n";
  }
  for (const auto& sub : m.submachines)
    if (const Machine* child = model.find_machine(sub))
      print_machine(model, *child, indent + 1, out);
  out += pad + "}\n";
}

}  // namespace dsl_detail

/// Canonical text: 2-space indent, one declaration per line, machines in
/// declaration order, flows before triggers. parse(serialize(m)) is
/// structurally equal to m and serialize is a fixpoint.
inline std::string serialize(const Model& model) {
  {
    ValidationReport rep = validate(model);
    if (!rep.ok())
      throw TmError(Errc::InvalidModel,
                    "cannot serialize a model with " +
                        std::to_string(rep.error_count()) + " violation(s)");
  }
  using dsl_detail::quote;
  using dsl_detail::ref_text;
  std::string out;
  for (const Machine* root : model.roots())
    dsl_detail::print_machine(model, *root, 0, out);
  for (const auto& s : model.sorts) {
    out += "sort " + s.name;
    if (s.machine_ref) out += " machine " + *s.machine_ref;
    if (s.attributes.empty()) {
      out += ";\n";
    } else {
      out += " {\n";
      for (const auto& a : s.attributes)
        out += "  " + a.name + ": " + std::string(to_string(a.kind)) + ";\n";
      out += "}\n";
    }
  }
  for (const auto& g : model.guards) {
    out += "guard " + g.id + " ";
    if (const auto* rc = std::get_if<RangeCheck>(&g.kind))
      out += "range " + rc->attribute + " " + std::to_string(rc->min) + " " +
             std::to_string(rc->max);
    else if (const auto* sc = std::get_if<Scripted>(&g.kind)) {
      out += "script [";
      for (std::size_t i = 0; i < sc->outcomes.size(); ++i)
        out += (i ? ", " : "") + sc->outcomes[i];
      out += "]";
    } else {
      out += "bernoulli " +
             dsl_detail::format_number(std::get<Bernoulli>(g.kind).p);
    }
    if (!g.description.empty()) out += " " + quote(g.description);
    out += ";\n";
  }
  for (const auto& f : model.flows) {
    out += "flow " + ref_text(f.from) + " -> " + ref_text(f.to);
    if (f.guard) out += " guard " + *f.guard;
    if (f.label) out += " label " + quote(*f.label);
    out += ";\n";
  }
  for (const auto& t : model.triggers) {
    out += "trigger " + ref_text(t.from) + " -.-> " + ref_text(t.to);
    if (t.label) out += " label " + quote(*t.label);
    out += ";\n";
  }
  return out;
}

inline std::string serialize(const Document& doc) {
  using dsl_detail::quote;
  std::string out = serialize(doc.model);
  if (doc.has_events) {
    out += "events {\n";
    for (const auto& e : doc.events) {
      out += "  event " + e.id;
      if (!e.name.empty()) out += " " + quote(e.name);
      out += " {\n";
      if (!e.selector.entries.empty()) {
        out += "    region ";
        for (std::size_t i = 0; i < e.selector.entries.size(); ++i) {
          if (i) out += ", ";
          // lane suffixes re-quote on output
          std::string entry = e.selector.entries[i];
          out += entry;
        }
        out += ";\n";
      }
      if (e.duration != 1)
        out += "    duration " + std::to_string(e.duration) + ";\n";
      if (e.intensity)
        out +=
            "    intensity " + dsl_detail::format_number(*e.intensity) + ";\n";
      for (const auto& fx : e.effects)
        out += "    set " + fx.flag + " = " + (fx.value ? "true" : "false") +
               ";\n";
      out += "  }\n";
    }
    if (doc.initial) {
      out += "  chronology {\n";
      out += "    initial " + *doc.initial + ";\n";
      for (const auto& e : doc.edges) {
        out += "    " + e.from + " -> " + e.to;
        if (e.guard) out += " [" + *e.guard + " " + *e.outcome + "]";
        out += ";\n";
      }
      out += "  }\n";
    }
    out += "}\n";
  }
  if (doc.simcfg) {
    const SimConfig& c = *doc.simcfg;
    out += "simcfg {\n";
    for (const auto& a : c.arrivals)
      out += "  arrivals " + std::to_string(a.count) + " at " +
             std::to_string(a.period) + ";\n";
    out += "  horizon " + std::to_string(c.horizon) + ";\n";
    out += "  seed " + std::to_string(c.seed) + ";\n";
    if (!c.sort.empty()) out += "  sort " + c.sort + ";\n";
    for (const auto& [gid, script] : c.scripts) {
      out += "  script " + gid + " [";
      for (std::size_t i = 0; i < script.size(); ++i)
        out += (i ? ", " : "") + script[i];
      out += "];\n";
    }
    for (const auto& [name, value] : c.attributes) {
      out += "  attr " + name + " = ";
      if (const auto* s = std::get_if<std::string>(&value))
        out += quote(*s);
      else
        out += to_string(value);
      out += ";\n";
    }
    out += "}\n";
  }
  return out;
}

}  // namespace tmkit
