#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bdsim/tree.hpp"

namespace bdsim {

// One tree as a single-line JSON object (round-trip exact doubles).
std::string tree_to_json(const MarkedTree& tree);

// Parses and validates one tree line. Throws ConfigError on malformed input:
// bad parent links, sibling ranks out of order, child birth not matching the
// parent's death, or children hanging off a non-branch node.
MarkedTree tree_from_json(const std::string& line);

// JSONL: one tree per line.
void write_trees_jsonl(std::ostream& os, const std::vector<MarkedTree>& trees);
std::vector<MarkedTree> read_trees_jsonl(std::istream& is);

}  // namespace bdsim
