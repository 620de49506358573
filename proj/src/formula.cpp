#include "vcm/formula.hpp"

#include <algorithm>
#include <cctype>

#include "vcm/errors.hpp"

namespace vcm {

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  std::size_t pos() const { return pos_; }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const std::string& what) {
    skip_ws();
    if (!consume(c)) throw FormulaError("expected '" + std::string(1, c) + "' " + what, pos_);
  }

  std::string ident(const std::string& what) {
    skip_ws();
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) {
      throw FormulaError("expected " + what, pos_);
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

MeanTerm parse_mean_term(Scanner& scan) {
  scan.skip_ws();
  if (scan.consume('1')) return MeanTerm::intercept();
  const std::string first = scan.ident("a term ('1', a name, or a cross A.B)");
  if (scan.consume('.')) {
    const std::size_t dot_pos = scan.pos();
    const std::string second = scan.ident("a factor name after '.'");
    if (scan.peek() == '.') {
      throw FormulaError("crosses deeper than two factors are not supported", scan.pos());
    }
    (void)dot_pos;
    return MeanTerm::cross(first, second);
  }
  return MeanTerm::name(first);
}

KernelKind kernel_from_name(const std::string& name, std::size_t offset) {
  if (name == "exch") return KernelKind::exchangeable;
  if (name == "bm") return KernelKind::brownian;
  if (name == "spl3") return KernelKind::cubic;
  if (name == "slope") return KernelKind::random_slope;
  throw FormulaError("unknown kernel name '" + name + "'", offset);
}

CovarianceTerm parse_cov_term(Scanner& scan) {
  scan.skip_ws();
  const std::size_t start = scan.pos();
  const std::string head =
      scan.ident("a covariance term ('I', 'E(...)', or a kernel)");
  if (head == "I") return CovarianceTerm::identity();
  if (head == "E") {
    scan.expect('(', "after 'E'");
    const std::string left = scan.ident("a factor name");
    std::string right;
    if (scan.consume('.')) {
      right = scan.ident("a factor name after '.'");
      if (scan.peek() == '.') {
        throw FormulaError("crosses deeper than two factors are not supported", scan.pos());
      }
    }
    scan.expect(')', "to close 'E('");
    return CovarianceTerm::block(left, right);
  }
  scan.skip_ws();
  if (scan.peek() != '(') {
    throw FormulaError("expected a covariance term ('I', 'E(...)', or a kernel)", start);
  }
  const KernelKind kind = kernel_from_name(head, start);
  scan.expect('(', "after kernel name");
  const std::string covariate = scan.ident("a covariate name");
  scan.expect(')', "to close the kernel argument");
  return CovarianceTerm::kernel_term(kind, covariate);
}

template <typename Term>
void reject_duplicate(const std::vector<Term>& terms, const Term& candidate,
                      std::size_t offset) {
  if (std::find(terms.begin(), terms.end(), candidate) != terms.end()) {
    throw FormulaError("duplicate term '" + candidate.label() + "'", offset);
  }
}

}  // namespace

std::vector<MeanTerm> parse_mean(const std::string& text) {
  Scanner scan(text);
  std::vector<MeanTerm> terms;
  while (true) {
    scan.skip_ws();
    const std::size_t start = scan.pos();
    MeanTerm term = parse_mean_term(scan);
    reject_duplicate(terms, term, start);
    terms.push_back(std::move(term));
    if (scan.at_end()) break;
    if (!scan.consume('+')) {
      throw FormulaError("expected '+' between terms", scan.pos());
    }
  }
  return terms;
}

std::vector<CovarianceTerm> parse_cov(const std::string& text) {
  Scanner scan(text);
  std::vector<CovarianceTerm> terms;
  bool saw_identity = false;
  while (true) {
    scan.skip_ws();
    const std::size_t start = scan.pos();
    CovarianceTerm term = parse_cov_term(scan);
    if (term.kind == CovarianceTerm::Kind::identity) {
      if (saw_identity) throw FormulaError("duplicate 'I'", start);
      saw_identity = true;
    } else {
      reject_duplicate(terms, term, start);
      terms.push_back(std::move(term));
    }
    if (scan.at_end()) break;
    if (!scan.consume('+')) {
      throw FormulaError("expected '+' between terms", scan.pos());
    }
  }
  // The identity generator always leads, written or not.
  terms.insert(terms.begin(), CovarianceTerm::identity());
  return terms;
}

std::string format_mean(const std::vector<MeanTerm>& terms) {
  std::string out;
  for (const auto& term : terms) {
    if (!out.empty()) out += " + ";
    out += term.label();
  }
  return out;
}

std::string format_cov(const std::vector<CovarianceTerm>& terms) {
  std::string out;
  for (const auto& term : terms) {
    if (!out.empty()) out += " + ";
    out += term.label();
  }
  return out;
}

}  // namespace vcm
