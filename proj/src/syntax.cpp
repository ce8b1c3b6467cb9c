#include "docsynth/syntax.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

#include "docsynth/error.hpp"

namespace docsynth {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Parser {
 public:
  Parser(std::string_view text, std::string source)
      : text_(text), source_(std::move(source)) {}

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  Clause clause() {
    reset_vars();
    Clause c;
    c.head = atom();
    skip_ws();
    if (peek(":-")) {
      pos_ += 2;
      c.body = conjunction();
    }
    expect('.');
    c.var_names = names_;
    return c;
  }

  std::vector<Atom> goals(std::vector<std::string>* names) {
    reset_vars();
    auto out = conjunction();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '.') ++pos_;
    if (!at_end()) fail("trailing input");
    if (names) *names = names_;
    return out;
  }

  Term single_term(std::vector<std::string>* names) {
    reset_vars();
    Term t = term();
    if (!at_end()) fail("trailing input");
    if (names) *names = names_;
    return t;
  }

 private:
  std::vector<Atom> conjunction() {
    std::vector<Atom> body;
    body.push_back(atom());
    skip_ws();
    while (pos_ < text_.size() && text_[pos_] == ',') {
      ++pos_;
      body.push_back(atom());
      skip_ws();
    }
    return body;
  }

  Atom atom() {
    Term t = term();
    if (t.is_symbol()) return Atom{t.name(), {}};
    if (t.is_compound()) return Atom{t.name(), {t.args().begin(), t.args().end()}};
    fail("expected an atom");
  }

  Term term() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '[') return list();
    if (c == '\'') return functor_or_symbol(quoted());
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return number();
    if (c == '_' || std::isupper(static_cast<unsigned char>(c))) return variable();
    if (std::islower(static_cast<unsigned char>(c))) return functor_or_symbol(identifier());
    fail(std::string("unexpected character '") + c + "'");
  }

  Term functor_or_symbol(std::string name) {
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      std::vector<Term> args;
      args.push_back(term());
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        args.push_back(term());
        skip_ws();
      }
      expect(')');
      return Term::compound(std::move(name), std::move(args));
    }
    return Term::symbol(std::move(name));
  }

  Term list() {
    ++pos_;  // '['
    std::vector<Term> elems;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return Term::list({});
    }
    elems.push_back(term());
    skip_ws();
    while (pos_ < text_.size() && text_[pos_] == ',') {
      ++pos_;
      elems.push_back(term());
      skip_ws();
    }
    expect(']');
    return Term::list(std::move(elems));
  }

  Term number() {
    std::size_t start = pos_;
    if (text_[pos_] == '-') ++pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || p != text_.data() + pos_) fail("malformed integer");
    return Term::integer(v);
  }

  Term variable() {
    std::string name = identifier();
    if (name == "_") {
      names_.push_back("_");
      return Term::var(static_cast<int>(names_.size()) - 1);
    }
    auto it = vars_.find(name);
    if (it != vars_.end()) return Term::var(it->second);
    int id = static_cast<int>(names_.size());
    names_.push_back(name);
    vars_.emplace(name, id);
    return Term::var(id);
  }

  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string quoted() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated quoted atom");
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("dangling escape");
        out.push_back(text_[pos_++]);
      } else if (c == '\'') {
        if (pos_ < text_.size() && text_[pos_] == '\'') {
          out.push_back('\'');
          ++pos_;
        } else {
          return out;
        }
      } else {
        out.push_back(c);
      }
    }
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool peek(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void reset_vars() {
    vars_.clear();
    names_.clear();
  }

  [[noreturn]] void fail(const std::string& what) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source_ + ":" + std::to_string(line) + ":" + std::to_string(col), what);
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::unordered_map<std::string, int> vars_;
  std::vector<std::string> names_;
};

}  // namespace

std::vector<Clause> parse_program(std::string_view text, const std::string& source) {
  Parser p(text, source);
  std::vector<Clause> out;
  while (!p.at_end()) out.push_back(p.clause());
  return out;
}

Clause parse_clause(std::string_view text) {
  auto all = parse_program(text);
  if (all.size() != 1) throw ParseError("<text>", "expected exactly one clause");
  return std::move(all.front());
}

Term parse_term(std::string_view text, std::vector<std::string>* var_names) {
  return Parser(text, "<term>").single_term(var_names);
}

std::vector<Atom> parse_goals(std::string_view text, std::vector<std::string>* var_names) {
  return Parser(text, "<goal>").goals(var_names);
}

std::string quote_symbol(std::string_view s) {
  bool plain = !s.empty() && std::islower(static_cast<unsigned char>(s[0]));
  for (char c : s) plain = plain && is_ident_char(c);
  if (plain) return std::string(s);
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

namespace {

void print(const Term& t, const std::vector<std::string>* names, std::string& out) {
  switch (t.kind()) {
    case Term::Kind::Var: {
      int id = t.var_id();
      if (names && id >= 0 && id < static_cast<int>(names->size()) && (*names)[id] != "_")
        out += (*names)[id];
      else
        out += "_G" + std::to_string(id);
      break;
    }
    case Term::Kind::Symbol:
      out += quote_symbol(t.name());
      break;
    case Term::Kind::Int:
      out += std::to_string(t.int_value());
      break;
    case Term::Kind::Compound:
    case Term::Kind::List: {
      if (t.is_compound()) {
        out += quote_symbol(t.name());
        out += '(';
      } else {
        out += '[';
      }
      bool first = true;
      for (const auto& a : t.args()) {
        if (!first) out += ',';
        first = false;
        print(a, names, out);
      }
      out += t.is_compound() ? ')' : ']';
      break;
    }
  }
}

}  // namespace

std::string to_string(const Term& t, const std::vector<std::string>* var_names) {
  std::string out;
  print(t, var_names, out);
  return out;
}

std::string to_string(const Atom& a, const std::vector<std::string>* var_names) {
  std::string out = quote_symbol(a.predicate);
  if (a.args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ',';
    print(a.args[i], var_names, out);
  }
  out += ')';
  return out;
}

std::string to_string(const Clause& c) {
  std::string out = to_string(c.head, &c.var_names);
  if (!c.body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i) out += ", ";
      out += to_string(c.body[i], &c.var_names);
    }
  }
  out += '.';
  return out;
}

}  // namespace docsynth
