#include "dtp/events.hpp"

#include <cmath>
#include <sstream>

#include "dtp/error.hpp"

namespace dtp {

ValidationReport validate_event(const ExogenousEvent& e) {
  ValidationReport report;
  const auto n = static_cast<std::size_t>(e.matrix.rows());
  if (static_cast<std::size_t>(e.matrix.cols()) != n)
    report.issues.push_back({"event " + e.name, "matrix is not square"});
  if (e.occurrence.size() != n)
    report.issues.push_back({"event " + e.name, "occurrence vector has wrong length"});
  for (std::size_t i = 0; i < n; ++i) {
    const double sum = row_sum(e.matrix, i);
    if (std::abs(sum - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os << "row sum " << sum << " != 1";
      report.issues.push_back({"event " + e.name + ", row " + std::to_string(i), os.str()});
    }
  }
  for (std::size_t i = 0; i < e.occurrence.size(); ++i)
    if (!(e.occurrence[i] >= 0.0 && e.occurrence[i] <= 1.0))
      report.issues.push_back({"event " + e.name + ", state " + std::to_string(i),
                               "occurrence probability outside [0,1]"});
  return report;
}

Matrix effective_event_matrix(const ExogenousEvent& e) {
  const auto n = e.matrix.rows();
  if (static_cast<std::size_t>(n) != e.occurrence.size())
    throw Error(ErrorKind::Argument, "occurrence vector length differs from matrix size");
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double occ = e.occurrence[i];
    for (Matrix::InnerIterator it(e.matrix, i); it; ++it)
      if (occ * it.value() != 0.0) entries.emplace_back(i, it.col(), occ * it.value());
    if (occ < 1.0) entries.emplace_back(i, i, 1.0 - occ);
  }
  Matrix out(n, n);
  out.setFromTriplets(entries.begin(), entries.end());  // duplicates are summed
  out.makeCompressed();
  return out;
}

CommutativityReport check_commutative(std::span<const ExogenousEvent> events, double tol) {
  std::vector<Matrix> eff;
  eff.reserve(events.size());
  for (const auto& e : events) eff.push_back(effective_event_matrix(e));

  CommutativityReport report;
  for (std::size_t i = 0; i < eff.size(); ++i) {
    for (std::size_t j = i + 1; j < eff.size(); ++j) {
      const Matrix ab = eff[i] * eff[j];
      const Matrix ba = eff[j] * eff[i];
      const Matrix diff = ab - ba;
      CommutativityWitness worst{i, j, 0, 0, 0.0};
      for (Eigen::Index r = 0; r < diff.outerSize(); ++r)
        for (Matrix::InnerIterator it(diff, r); it; ++it)
          if (std::abs(it.value()) > worst.discrepancy)
            worst = {i, j, static_cast<std::size_t>(r), static_cast<std::size_t>(it.col()),
                     std::abs(it.value())};
      if (worst.discrepancy > tol) {
        report.commutative = false;
        report.witness = worst;
        return report;
      }
    }
  }
  return report;
}

ActionRecord compile_implicit_action(const ActionRecord& action,
                                     std::span<const ExogenousEvent> events,
                                     const CompileOptions& options) {
  if (events.size() >= 2 && !options.explicit_order) {
    const auto report = check_commutative(events, options.commute_tol);
    if (!report.commutative) {
      const auto& w = *report.witness;
      std::ostringstream os;
      os << "events '" << events[w.first].name << "' and '" << events[w.second].name
         << "' do not commute (discrepancy " << w.discrepancy << " at row " << w.row
         << ", column " << w.col << "); supply an explicit ordering";
      throw Error(ErrorKind::CompositionOrder, os.str());
    }
  }
  ActionRecord out = action;
  for (const auto& e : events) {
    Matrix next = out.matrix * effective_event_matrix(e);
    next.prune(0.0);
    next.makeCompressed();
    out.matrix = std::move(next);
  }
  return out;
}

}  // namespace dtp
