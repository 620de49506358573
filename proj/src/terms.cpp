#include "vcm/terms.hpp"

#include <utility>

namespace vcm {

std::string MeanTerm::label() const {
  switch (kind) {
    case Kind::intercept: return "1";
    case Kind::name: return left;
    case Kind::cross: return left + "." + right;
  }
  return {};
}

std::string kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::exchangeable: return "exch";
    case KernelKind::brownian: return "bm";
    case KernelKind::cubic: return "spl3";
    case KernelKind::random_slope: return "slope";
  }
  return {};
}

int kernel_cpd_order(KernelKind kind) {
  switch (kind) {
    case KernelKind::exchangeable: return 0;
    case KernelKind::brownian: return 1;
    case KernelKind::cubic: return 2;
    case KernelKind::random_slope: return 0;
  }
  return 0;
}

CovarianceTerm CovarianceTerm::block(std::string factor, std::string crossed) {
  CovarianceTerm term;
  term.kind = Kind::block;
  term.factor_left = std::move(factor);
  term.factor_right = std::move(crossed);
  return term;
}

CovarianceTerm CovarianceTerm::kernel_term(KernelKind kind, std::string covariate) {
  CovarianceTerm term;
  term.kind = Kind::kernel;
  term.kernel = kind;
  term.covariate = std::move(covariate);
  return term;
}

int CovarianceTerm::cpd_order() const {
  return kind == Kind::kernel ? kernel_cpd_order(kernel) : 0;
}

std::string CovarianceTerm::label() const {
  switch (kind) {
    case Kind::identity: return "I";
    case Kind::block:
      return "E(" + factor_left + (factor_right.empty() ? "" : "." + factor_right) + ")";
    case Kind::kernel: return kernel_name(kernel) + "(" + covariate + ")";
  }
  return {};
}

}  // namespace vcm
