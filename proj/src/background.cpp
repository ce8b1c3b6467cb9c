#include "docsynth/background.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "catalog_text.hpp"
#include "docsynth/error.hpp"
#include "docsynth/syntax.hpp"

namespace docsynth {

namespace {

SlotKind slot_kind(const Term& t, const std::string& where) {
  if (t.is_symbol()) {
    const auto& n = t.name();
    if (n == "keyword") return SlotKind::Keyword;
    if (n == "delimiter") return SlotKind::Delimiter;
    if (n == "dtype") return SlotKind::DataTypeTag;
    if (n == "delimiter_type") return SlotKind::DelimiterType;
    if (n == "index") return SlotKind::Index;
  }
  throw ParseError(where, "unknown slot kind " + to_string(t));
}

TransitionRole role_of(const Term& t, const std::string& where) {
  if (t.is_symbol()) {
    if (t.name() == "anchor") return TransitionRole::Anchor;
    if (t.name() == "navigate") return TransitionRole::Navigate;
    if (t.name() == "terminal") return TransitionRole::Terminal;
  }
  throw ParseError(where, "unknown transition role " + to_string(t));
}

}  // namespace

std::string_view default_catalog_text() { return detail::kDefaultCatalog; }

const TransitionSystem& default_catalog() {
  static const TransitionSystem system = load_catalog(default_catalog_text(), "background.pl");
  return system;
}

TransitionSystem load_catalog(std::string_view text, const std::string& source) {
  TransitionSystem sys;
  sys.source_text = std::string(text);
  std::vector<Clause> rules;
  for (auto& c : parse_program(text, source)) {
    if (c.head.predicate == "transition" && c.head.arity() == 3 && c.is_fact()) {
      const std::string where = source + ": " + to_string(c);
      const Term& sig = c.head.args[0];
      TransitionDef def;
      if (sig.is_symbol()) {
        def.name = sig.name();
      } else if (sig.is_compound()) {
        def.name = sig.name();
        for (const auto& s : sig.args()) def.slots.push_back(slot_kind(s, where));
      } else {
        throw ParseError(where, "transition signature must be a name or name(slots)");
      }
      def.role = role_of(c.head.args[1], where);
      if (!c.head.args[2].is_symbol()) throw ParseError(where, "reading must be a quoted string");
      def.interpretation = c.head.args[2].name();
      if (sys.find(def.name)) throw ParseError(where, "duplicate transition " + def.name);
      sys.transitions.push_back(std::move(def));
    } else {
      rules.push_back(std::move(c));
    }
  }
  for (auto& c : rules) sys.rules.add(std::move(c));
  for (const auto& def : sys.transitions)
    if (!sys.rules.find(def.name, def.arity()))
      throw LogicError(source + ": transition " + def.name + "/" + std::to_string(def.arity()) +
                       " has no defining clause");
  return sys;
}

TransitionSystem load_catalog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rules file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_catalog(ss.str(), path);
}

const std::vector<TransitionDef>& catalog(const TransitionSystem& system) {
  return system.transitions;
}

std::string interpret(const TransitionDef& def, const Atom& literal,
                      const std::vector<std::string>& var_names) {
  auto show = [&](const Term& t) {
    if (t.is_symbol()) return t.name();
    return to_string(t, &var_names);
  };
  std::string out;
  const std::string& pat = def.interpretation;
  for (std::size_t i = 0; i < pat.size(); ++i) {
    if (pat[i] == '{') {
      auto close = pat.find('}', i);
      if (close != std::string::npos) {
        std::string key = pat.substr(i + 1, close - i - 1);
        const std::size_t n = literal.args.size();
        if (key == "in" && n >= 2) {
          out += show(literal.args[n - 2]);
        } else if (key == "out" && n >= 1) {
          out += show(literal.args[n - 1]);
        } else if (!key.empty() && std::isdigit(static_cast<unsigned char>(key[0]))) {
          std::size_t idx = std::stoul(key);
          if (idx < n) out += show(literal.args[idx]);
        } else {
          out += pat.substr(i, close - i + 1);
        }
        i = close;
        continue;
      }
    }
    out += pat[i];
  }
  return out;
}

}  // namespace docsynth
