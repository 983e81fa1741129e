#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <unordered_set>

#include "skn/syntax.hpp"

namespace skn {

ParseError::ParseError(const std::string& message, SourceLocation where)
    : std::runtime_error(
          fmt::format("{}:{}: {}", where.line, where.column, message)),
      where_(where) {}

namespace {

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

struct Sexp {
  enum class Kind { atom, list, brace };
  Kind kind = Kind::atom;
  std::string text;
  std::vector<Sexp> items;
  SourceLocation loc;

  bool is_atom() const { return kind == Kind::atom; }
  bool is_list() const { return kind == Kind::list; }
  bool is_atom(std::string_view s) const { return is_atom() && text == s; }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  Sexp read() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", loc());
    const SourceLocation start = loc();
    const char c = text_[pos_];
    if (c == '(' || c == '{') {
      const char close = c == '(' ? ')' : '}';
      advance();
      Sexp s;
      s.kind = c == '(' ? Sexp::Kind::list : Sexp::Kind::brace;
      s.loc = start;
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) {
          throw ParseError(fmt::format("unclosed '{}'", c), start);
        }
        if (text_[pos_] == close) {
          advance();
          return s;
        }
        if (text_[pos_] == ')' || text_[pos_] == '}') {
          throw ParseError(fmt::format("mismatched '{}'", text_[pos_]), loc());
        }
        s.items.push_back(read());
      }
    }
    if (c == ')' || c == '}') {
      throw ParseError(fmt::format("unexpected '{}'", c), start);
    }
    Sexp s;
    s.loc = start;
    while (pos_ < text_.size() && !delimiter(text_[pos_])) {
      s.text += text_[pos_];
      advance();
    }
    return s;
  }

 private:
  static bool delimiter(char c) {
    return c == '(' || c == ')' || c == '{' || c == '}' || c == ';' ||
           c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
                 c == '\v') {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(text_[pos_]) & 0xC0) != 0x80) {
      ++col_;  // count code points, not UTF-8 continuation bytes
    }
    ++pos_;
  }

  SourceLocation loc() const { return {line_, col_}; }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Syntax
// ---------------------------------------------------------------------------

const std::set<std::string, std::less<>> kGoalKeywords = {
    "conj", "disj", "fresh", "==", "=/=", "factor", "defrel"};
const std::set<std::string, std::less<>> kValueKeywords = {"sole", "left",
                                                           "right", "pair"};
const std::set<std::string, std::less<>> kTypeKeywords = {"Unit", "Sum", "Prod",
                                                          "Pair"};

bool is_forall(const Sexp& s) { return s.is_atom("forall") || s.is_atom("∀"); }

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void expect_identifier(const Sexp& s, std::string_view what) {
  if (!s.is_atom()) {
    throw ParseError(fmt::format("expected {} name", what), s.loc);
  }
  if (s.text == ":" || s.text == "." || is_forall(s)) {
    throw ParseError(fmt::format("'{}' is not a valid {} name", s.text, what),
                     s.loc);
  }
}

Type parse_type_sexp(const Sexp& s) {
  if (s.is_atom()) {
    if (s.text == "Unit") return Type::unit();
    if (kTypeKeywords.count(s.text)) {
      throw ParseError(fmt::format("'{}' needs two type arguments", s.text), s.loc);
    }
    if (all_digits(s.text)) {
      throw ParseError(
          fmt::format("numeric type '{}' is not supported; write a Sum of Units",
                      s.text),
          s.loc);
    }
    expect_identifier(s, "type variable");
    return Type::var(s.text);
  }
  if (!s.is_list() || s.items.empty() || !s.items[0].is_atom()) {
    throw ParseError("malformed type", s.loc);
  }
  const std::string& head = s.items[0].text;
  if (head == "Sum" || head == "Prod" || head == "Pair") {
    if (s.items.size() != 3) {
      throw ParseError(fmt::format("'{}' takes exactly two types", head), s.loc);
    }
    Type a = parse_type_sexp(s.items[1]);
    Type b = parse_type_sexp(s.items[2]);
    return head == "Sum" ? Type::sum(std::move(a), std::move(b))
                         : Type::prod(std::move(a), std::move(b));
  }
  throw ParseError(fmt::format("unknown type constructor '{}'", head), s.loc);
}

using Renames = std::vector<std::pair<std::string, std::string>>;

std::string resolve(const Renames& renames, const std::string& name) {
  for (auto it = renames.rbegin(); it != renames.rend(); ++it) {
    if (it->first == name) return it->second;
  }
  return name;
}

Value parse_value_sexp(const Sexp& s, const Renames& renames) {
  if (s.is_atom()) {
    if (s.text == "sole") return Value::sole();
    if (kValueKeywords.count(s.text)) {
      throw ParseError(fmt::format("'{}' is a constructor, not a value", s.text),
                       s.loc);
    }
    expect_identifier(s, "variable");
    return Value::var(resolve(renames, s.text));
  }
  if (!s.is_list() || s.items.empty() || !s.items[0].is_atom()) {
    throw ParseError("malformed value", s.loc);
  }
  const std::string& head = s.items[0].text;
  if (head == "left" || head == "right") {
    std::optional<Type> annot;
    std::size_t i = 1;
    if (s.items.size() == 3 && s.items[1].kind == Sexp::Kind::brace) {
      if (s.items[1].items.size() != 1) {
        throw ParseError("annotation holds exactly one type", s.items[1].loc);
      }
      annot = parse_type_sexp(s.items[1].items[0]);
      i = 2;
    } else if (s.items.size() != 2) {
      throw ParseError(fmt::format("'{}' takes one value", head), s.loc);
    }
    Value inner = parse_value_sexp(s.items[i], renames);
    return head == "left" ? Value::left(std::move(inner), std::move(annot))
                          : Value::right(std::move(inner), std::move(annot));
  }
  if (head == "pair") {
    if (s.items.size() != 3) {
      throw ParseError("'pair' takes exactly two values", s.loc);
    }
    return Value::pair(parse_value_sexp(s.items[1], renames),
                       parse_value_sexp(s.items[2], renames));
  }
  throw ParseError(fmt::format("unknown value constructor '{}'", head), s.loc);
}

// `(x : τ)`
Param parse_binder(const Sexp& s) {
  if (!s.is_list() || s.items.size() != 3 || !s.items[1].is_atom(":")) {
    throw ParseError("expected a binding of the form (name : type)", s.loc);
  }
  expect_identifier(s.items[0], "variable");
  if (s.items[0].text == "sole" || kGoalKeywords.count(s.items[0].text)) {
    throw ParseError(fmt::format("'{}' cannot be bound", s.items[0].text),
                     s.items[0].loc);
  }
  return Param{s.items[0].text, parse_type_sexp(s.items[2])};
}

bool is_binder(const Sexp& s) {
  return s.is_list() && s.items.size() == 3 && s.items[1].is_atom(":");
}

// Either one binder or a list of binders.
std::vector<std::pair<Param, SourceLocation>> parse_binders(const Sexp& s) {
  std::vector<std::pair<Param, SourceLocation>> out;
  if (is_binder(s)) {
    out.emplace_back(parse_binder(s), s.loc);
    return out;
  }
  if (!s.is_list() || s.items.empty()) {
    throw ParseError("expected one or more (name : type) bindings", s.loc);
  }
  for (const auto& b : s.items) out.emplace_back(parse_binder(b), b.loc);
  return out;
}

void collect_atoms(const Sexp& s, std::unordered_set<std::string>& out) {
  if (s.is_atom()) {
    out.insert(s.text);
    return;
  }
  for (const auto& i : s.items) collect_atoms(i, out);
}

class BodyParser {
 public:
  BodyParser(std::unordered_set<std::string> taken, std::vector<std::string> scope)
      : taken_(std::move(taken)), scope_(std::move(scope)) {}

  Goal parse(const Sexp& s) {
    if (!s.is_list() || s.items.empty() || !s.items[0].is_atom()) {
      throw ParseError("expected a goal", s.loc);
    }
    const std::string& head = s.items[0].text;
    const auto nargs = s.items.size() - 1;
    if (head == "conj" || head == "disj") {
      if (nargs < 2) {
        throw ParseError(fmt::format("'{}' needs at least two subgoals", head),
                         s.loc);
      }
      std::vector<Goal> gs;
      for (std::size_t i = 1; i < s.items.size(); ++i) gs.push_back(parse(s.items[i]));
      return head == "conj" ? Goal::conj_all(gs) : Goal::disj_all(gs);
    }
    if (head == "fresh") {
      if (nargs != 2) {
        throw ParseError("'fresh' takes a binding list and exactly one goal", s.loc);
      }
      auto binders = parse_binders(s.items[1]);
      const auto scope_mark = scope_.size();
      const auto rename_mark = renames_.size();
      std::vector<Param> bound;
      for (auto& [p, where] : binders) {
        for (const auto& b : bound) {
          if (b.name == p.name) {
            throw ParseError(fmt::format("duplicate fresh variable '{}'", p.name),
                             where);
          }
        }
        bound.push_back(p);
      }
      std::vector<Param> actual;
      for (const auto& p : bound) {
        std::string name = p.name;
        if (std::find(scope_.begin(), scope_.end(), name) != scope_.end()) {
          name = gensym(p.name);
          renames_.emplace_back(p.name, name);
        }
        scope_.push_back(name);
        actual.push_back(Param{name, p.type});
      }
      Goal body = parse(s.items[2]);
      scope_.resize(scope_mark);
      renames_.resize(rename_mark);
      for (auto it = actual.rbegin(); it != actual.rend(); ++it) {
        body = Goal::fresh(it->name, it->type, std::move(body));
      }
      return body;
    }
    if (head == "==" || head == "=/=") {
      if (nargs != 2) {
        throw ParseError(fmt::format("'{}' takes exactly two values", head), s.loc);
      }
      Value a = parse_value_sexp(s.items[1], renames_);
      Value b = parse_value_sexp(s.items[2], renames_);
      return head == "==" ? Goal::unify(std::move(a), std::move(b))
                          : Goal::disunify(std::move(a), std::move(b));
    }
    if (head == "factor") {
      if (nargs != 1 || !s.items[1].is_atom()) {
        throw ParseError("'factor' takes exactly one weight literal", s.loc);
      }
      return Goal::factor(s.items[1].text);
    }
    if (head == "defrel") {
      throw ParseError("'defrel' is only allowed at top level", s.loc);
    }
    if (kValueKeywords.count(head) || head == ":" || is_forall(s.items[0])) {
      throw ParseError(fmt::format("'{}' is not a goal", head), s.loc);
    }
    std::vector<Value> args;
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      args.push_back(parse_value_sexp(s.items[i], renames_));
    }
    return Goal::call(head, std::move(args));
  }

 private:
  std::string gensym(const std::string& base) {
    for (int n = 1;; ++n) {
      std::string candidate = fmt::format("{}~{}", base, n);
      if (taken_.insert(candidate).second) return candidate;
    }
  }

  std::unordered_set<std::string> taken_;
  std::vector<std::string> scope_;
  Renames renames_;
};

RelationDef parse_defrel(const Sexp& s) {
  if (!s.is_list() || s.items.empty() || !s.items[0].is_atom("defrel")) {
    throw ParseError("expected (defrel (name params...) goal)", s.loc);
  }
  if (s.items.size() != 3) {
    throw ParseError("'defrel' takes a header and exactly one goal", s.loc);
  }
  const Sexp& header = s.items[1];
  if (!header.is_list() || header.items.empty()) {
    throw ParseError("malformed relation header", header.loc);
  }
  RelationDef rel;
  expect_identifier(header.items[0], "relation");
  rel.name = header.items[0].text;
  if (kGoalKeywords.count(rel.name) || kValueKeywords.count(rel.name)) {
    throw ParseError(fmt::format("'{}' is reserved", rel.name), header.items[0].loc);
  }

  std::size_t i = 1;
  bool explicit_tyvars = false;
  if (i < header.items.size() && is_forall(header.items[i])) {
    explicit_tyvars = true;
    ++i;
    while (i < header.items.size() && !header.items[i].is_atom(".")) {
      const Sexp& tv = header.items[i];
      expect_identifier(tv, "type variable");
      if (kTypeKeywords.count(tv.text)) {
        throw ParseError(fmt::format("'{}' is not a type variable", tv.text), tv.loc);
      }
      if (std::find(rel.tyvars.begin(), rel.tyvars.end(), tv.text) !=
          rel.tyvars.end()) {
        throw ParseError(fmt::format("duplicate type variable '{}'", tv.text),
                         tv.loc);
      }
      rel.tyvars.push_back(tv.text);
      ++i;
    }
    if (i >= header.items.size()) {
      throw ParseError("expected '.' after the type variable list", header.loc);
    }
    ++i;  // '.'
  }

  for (; i < header.items.size(); ++i) {
    for (auto& [p, where] : parse_binders(header.items[i])) {
      for (const auto& q : rel.params) {
        if (q.name == p.name) {
          throw ParseError(fmt::format("duplicate parameter '{}'", p.name), where);
        }
      }
      rel.params.push_back(std::move(p));
    }
  }

  if (!explicit_tyvars) {
    for (const auto& p : rel.params) {
      for (auto& a : free_type_vars(p.type)) {
        if (std::find(rel.tyvars.begin(), rel.tyvars.end(), a) == rel.tyvars.end()) {
          rel.tyvars.push_back(a);
        }
      }
    }
  }

  std::unordered_set<std::string> taken;
  collect_atoms(s, taken);
  std::vector<std::string> scope;
  for (const auto& p : rel.params) scope.push_back(p.name);
  BodyParser body(std::move(taken), std::move(scope));
  rel.body = body.parse(s.items[2]);
  return rel;
}

}  // namespace

Program parse_program(std::string_view text) {
  Reader reader(text);
  Program prog;
  while (!reader.at_end()) {
    Sexp s = reader.read();
    RelationDef rel = parse_defrel(s);
    if (prog.find(rel.name)) {
      throw ParseError(fmt::format("duplicate relation '{}'", rel.name), s.loc);
    }
    prog.relations.push_back(std::move(rel));
  }
  return prog;
}

Type parse_type(std::string_view text) {
  Reader reader(text);
  Sexp s = reader.read();
  if (!reader.at_end()) throw ParseError("trailing input after type", s.loc);
  return parse_type_sexp(s);
}

Value parse_value(std::string_view text) {
  Reader reader(text);
  Sexp s = reader.read();
  if (!reader.at_end()) throw ParseError("trailing input after value", s.loc);
  return parse_value_sexp(s, {});
}

}  // namespace skn
