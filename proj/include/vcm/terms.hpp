#pragma once

#include <string>

namespace vcm {

// One term of a mean formula: `1`, a bare name (factor or covariate,
// resolved later against the design), or a two-factor cross `A.B`.
struct MeanTerm {
  enum class Kind { intercept, name, cross };

  Kind kind = Kind::intercept;
  std::string left;
  std::string right;

  static MeanTerm intercept() { return {Kind::intercept, "", ""}; }
  static MeanTerm name(std::string id) { return {Kind::name, std::move(id), ""}; }
  static MeanTerm cross(std::string a, std::string b) {
    return {Kind::cross, std::move(a), std::move(b)};
  }

  std::string label() const;
  friend bool operator==(const MeanTerm&, const MeanTerm&) = default;
};

enum class KernelKind { exchangeable, brownian, cubic, random_slope };

// Surface spelling of a kernel in covariance formulas.
std::string kernel_name(KernelKind kind);

// Degree of the polynomial space the kernel must be contrasted against to
// be a valid (generalized) covariance: exchangeable 0, brownian 1, cubic 2,
// random_slope 0.
int kernel_cpd_order(KernelKind kind);

// One term of a covariance formula: `I`, a block factor `E(A)` / `E(A.B)`,
// or a kernel over a quantitative covariate.
struct CovarianceTerm {
  enum class Kind { identity, block, kernel };

  Kind kind = Kind::identity;
  std::string factor_left;   // block terms
  std::string factor_right;  // nonempty only for E(A.B)
  KernelKind kernel = KernelKind::exchangeable;
  std::string covariate;     // kernel terms

  static CovarianceTerm identity() { return {}; }
  static CovarianceTerm block(std::string factor, std::string crossed = "");
  static CovarianceTerm kernel_term(KernelKind kind, std::string covariate);

  int cpd_order() const;
  std::string label() const;
  friend bool operator==(const CovarianceTerm&, const CovarianceTerm&) = default;
};

}  // namespace vcm
