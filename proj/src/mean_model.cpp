#include "vcm/mean_model.hpp"

#include <utility>

#include "vcm/errors.hpp"
#include "vcm/linalg.hpp"

namespace vcm {

namespace {

TreatmentFactor resolve_cross(const MeanTerm& term, const Design& design) {
  for (const auto& name : {term.left, term.right}) {
    if (!design.has_factor(name)) {
      if (design.has_covariate(name)) {
        throw ModelError("'" + term.label() + "': '" + name +
                         "' is a covariate; crosses need factors");
      }
      throw ModelError("unknown name '" + name + "' in term '" + term.label() + "'");
    }
  }
  return cross(design.factor(term.left), design.factor(term.right));
}

}  // namespace

std::vector<MeanTerm> MeanModel::terms() const {
  std::vector<MeanTerm> out;
  out.reserve(blocks.size());
  for (const auto& block : blocks) out.push_back(block.term);
  return out;
}

MeanModel mean_model_matrix(const std::vector<MeanTerm>& terms, const Design& design) {
  const int n = design.n_units();
  MeanModel model;
  std::vector<Eigen::MatrixXd> columns;
  int total_cols = 0;

  for (const auto& term : terms) {
    MeanModelBlock block;
    block.term = term;
    block.col_start = total_cols;
    switch (term.kind) {
      case MeanTerm::Kind::intercept: {
        columns.push_back(Eigen::MatrixXd::Ones(n, 1));
        block.col_count = 1;
        model.column_names.push_back("1");
        break;
      }
      case MeanTerm::Kind::name: {
        if (design.has_factor(term.left)) {
          block.factor = design.factor(term.left);
          columns.push_back(indicator(block.factor));
          block.col_count = block.factor.n_levels();
          for (const auto& level : block.factor.levels) {
            model.column_names.push_back(term.left + "=" + level);
          }
        } else if (design.has_covariate(term.left)) {
          columns.push_back(design.covariate(term.left));
          block.col_count = 1;
          block.is_covariate = true;
          model.column_names.push_back(term.left);
        } else {
          throw ModelError("unknown name '" + term.left + "' in mean formula");
        }
        break;
      }
      case MeanTerm::Kind::cross: {
        block.factor = resolve_cross(term, design);
        columns.push_back(indicator(block.factor));
        block.col_count = block.factor.n_levels();
        for (const auto& level : block.factor.levels) {
          model.column_names.push_back(term.label() + "=" + level);
        }
        const TreatmentFactor& left = design.factor(term.left);
        const TreatmentFactor& right = design.factor(term.right);
        for (int i = 0; i < n; ++i) {
          block.left_labels.push_back(left.level_of(i));
          block.right_labels.push_back(right.level_of(i));
        }
        break;
      }
    }
    total_cols += block.col_count;
    model.blocks.push_back(std::move(block));
  }

  model.matrix.resize(n, total_cols);
  int at = 0;
  for (const auto& part : columns) {
    model.matrix.middleCols(at, part.cols()) = part;
    at += static_cast<int>(part.cols());
  }
  model.rank = linalg::rank(model.matrix);
  return model;
}

bool is_ring(const MeanModel& model) {
  const auto& m = model.matrix;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.rows());
  if (!linalg::in_span(m, ones)) return false;
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    for (Eigen::Index j = i; j < m.cols(); ++j) {
      const Eigen::VectorXd product = m.col(i).cwiseProduct(m.col(j));
      if (!linalg::in_span(m, product)) return false;
    }
  }
  return true;
}

bool deletion_closure_check(const std::vector<MeanTerm>& terms, const Design& design,
                            const std::string& factor_name, const std::string& level) {
  const TreatmentFactor& factor = design.factor(factor_name);
  const int level_idx = factor.level_index(level);
  if (level_idx < 0) {
    throw ModelError("factor '" + factor_name + "' has no level '" + level + "'");
  }
  std::vector<int> survivors;
  for (int i = 0; i < factor.n_units(); ++i) {
    if (factor.assignment[i] != level_idx) survivors.push_back(i);
  }
  if (survivors.empty()) {
    throw ModelError("deleting level '" + level + "' of '" + factor_name +
                     "' leaves no units");
  }

  const MeanModel full = mean_model_matrix(terms, design);
  Eigen::MatrixXd restricted_rows(survivors.size(), full.matrix.cols());
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    restricted_rows.row(i) = full.matrix.row(survivors[i]);
  }
  const MeanModel rebuilt = mean_model_matrix(terms, design.restricted(survivors));
  return linalg::same_span(restricted_rows, rebuilt.matrix);
}

}  // namespace vcm
