#pragma once

#include <string>
#include <vector>

#include "vcm/terms.hpp"

namespace vcm {

// Mean formula grammar:
//   mean := term ('+' term)*
//   term := '1' | IDENT | IDENT '.' IDENT
// Whitespace is insignificant, identifiers are [A-Za-z_][A-Za-z0-9_]* and
// case-sensitive. Whether an IDENT names a factor or a covariate is
// resolved later against a design. Duplicate terms are rejected.
std::vector<MeanTerm> parse_mean(const std::string& text);

// Covariance formula grammar:
//   cov  := term ('+' term)*
//   term := 'I' | 'E(' factorexpr ')' | KERNEL '(' IDENT ')'
//   factorexpr := IDENT | IDENT '.' IDENT
//   KERNEL := 'exch' | 'bm' | 'spl3' | 'slope'
// A missing identity term is inserted at position 0; a duplicate `I` or a
// duplicate of any other term is rejected.
std::vector<CovarianceTerm> parse_cov(const std::string& text);

std::string format_mean(const std::vector<MeanTerm>& terms);
std::string format_cov(const std::vector<CovarianceTerm>& terms);

}  // namespace vcm
