#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace rarehmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Alphabet index of one symbol in a path. Alphabets here are tiny.
using Symbol = std::uint8_t;
using SymbolSeq = std::vector<Symbol>;

}  // namespace rarehmm
