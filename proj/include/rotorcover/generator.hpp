#pragma once

#include "rotorcover/matrix.hpp"
#include "rotorcover/rational.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rotorcover {

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Base multigraph of a periodic tree, given as one ordered child-type word per
// vertex type. The order of a word is the planar embedding: it fixes which
// child the k-th rotor position points at, so repeated entries (multi-edges)
// are kept as-is and never collapsed into weights.
//
// Types are 1-based in files and error messages, 0-based in memory; the
// parser/serializer is the only place that converts.
struct Generator {
    int n_types = 0;
    std::vector<std::vector<int>> words; // words[i][k] = type of (k+1)-th child of type i
    // Per-type rotor distribution over {0..d_i} if the file supplied one
    // (empty vector = use the uniform law for that type).
    std::vector<std::vector<Rational>> rotor_overrides;

    int degree(int i) const { return static_cast<int>(words[i].size()); }
    bool operator==(const Generator&) const = default;
};

// Parses the generator file format:
//   n_types = <int>
//   word.<i>  = [<t1>, <t2>, ...]
//   rotor.<i> = [<p0>, ..., <p_{d_i}>]   (optional)
// Unknown keys are an error. Validates entry ranges, nonempty words and
// strong connectivity of the induced graph.
Generator parse_generator(std::string_view text);
Generator load_generator(const std::string& path);
std::string serialize_generator(const Generator& g);

// Standalone law file: rotor.<i> lines only, validated against g's degrees.
std::vector<std::vector<Rational>> parse_rotor_overrides(const std::string& law_text,
                                                         const Generator& g);

// d_ij = number of occurrences of type j in the word of type i.
MatQ adjacency(const Generator& g);
MatD adjacency_real(const Generator& g);

// True iff every word reads the same forwards and backwards.
bool is_palindromic(const Generator& g);

} // namespace rotorcover
