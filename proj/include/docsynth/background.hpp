#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "docsynth/engine.hpp"

namespace docsynth {

// The built-in transition catalog (data/background.pl).
std::string_view default_catalog_text();
const TransitionSystem& default_catalog();

// Loads a catalog from rules text: transition/3 declarations plus the
// defining clauses. Throws ParseError / LogicError on malformed input.
TransitionSystem load_catalog(std::string_view text, const std::string& source = "<catalog>");
TransitionSystem load_catalog_file(const std::string& path);

// The transition declarations in priority order.
const std::vector<TransitionDef>& catalog(const TransitionSystem& system);

// Reading of one program literal, e.g. C = The block with the word "Diagnosen".
std::string interpret(const TransitionDef& def, const Atom& literal,
                      const std::vector<std::string>& var_names);

}  // namespace docsynth
