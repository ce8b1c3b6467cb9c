#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "docsynth/term.hpp"

namespace docsynth {

// Prolog-like surface syntax:
//
//   name(Args) :- lit1, lit2, ..., litK.
//
// Variables start with an uppercase letter or '_' ('_' alone is anonymous
// and fresh at every occurrence). Constants are lowercase identifiers,
// single-quoted strings or integers. Lists use brackets. '%' starts a
// comment running to end of line.

// Parses every clause in text. `source` names the input in error messages.
std::vector<Clause> parse_program(std::string_view text,
                                  const std::string& source = "<text>");
Clause parse_clause(std::string_view text);
// A single term; variables are numbered in first-occurrence order and
// their names appended to var_names when non-null.
Term parse_term(std::string_view text, std::vector<std::string>* var_names = nullptr);
// A conjunction "g1, g2." (trailing period optional).
std::vector<Atom> parse_goals(std::string_view text, std::vector<std::string>* var_names);

// Printing. Variables without a known name print as _G<id>.
std::string to_string(const Term& t, const std::vector<std::string>* var_names = nullptr);
std::string to_string(const Atom& a, const std::vector<std::string>* var_names = nullptr);
// One line, terminated by '.'.
std::string to_string(const Clause& c);

// Quotes a symbol when it is not a plain lowercase identifier.
std::string quote_symbol(std::string_view s);

}  // namespace docsynth
