#pragma once

/**
 * Plain-text fixture format for tabular models, one logit row per context.
 *
 *   # comment
 *   vocab a b c <eos>
 *   eos <eos>
 *   order 1
 *   horizon 4
 *   row . -0.4 0.3 0.3 -0.5      # "." is the empty context
 *   row a -0.5 0.4 0.3 -0.2
 *   default 0 0 0 0              # optional fallback row
 *
 * Context entries are symbol names; logits are one real per vocabulary
 * entry in vocabulary order ("-inf" masks an entry). Round-trips exactly
 * through write/parse at 17 significant digits.
 */

#include <iosfwd>
#include <string>

#include "steer/tabular/tabular_lm.hpp"

namespace steer::tabular {

TabularLM parse_fixture(std::istream& in);
TabularLM load_fixture(const std::string& path);

void write_fixture(std::ostream& out, const TabularLM& model);
void save_fixture(const std::string& path, const TabularLM& model);

}  // namespace steer::tabular
