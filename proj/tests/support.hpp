#pragma once

// Shared generators for the test suites.

#include <vector>

#include <Eigen/Dense>

#include "precopt/precond.hpp"
#include "precopt/rng.hpp"
#include "precopt/sym.hpp"

namespace precopt::testing {

inline SymMatrix random_sym(SeqRng& rng, int d, double scale = 1.0) {
  return SymMatrix(scale * rng.normal_matrix(d, d));
}

inline SymMatrix random_psd(SeqRng& rng, int d, double scale = 1.0) {
  Eigen::MatrixXd b = rng.normal_matrix(d, d);
  return SymMatrix(scale * (b * b.transpose()) / d);
}

inline SymMatrix random_pd(SeqRng& rng, int d, double ridge = 0.1) {
  return random_psd(rng, d).add_scaled_identity(ridge);
}

// A representative collection of sets with total dimension dim. KronLeft
// variants are included when dim factors.
inline std::vector<PreconditionerSet> sets_of_dim(int dim) {
  std::vector<PreconditionerSet> out = {PreconditionerSet::Scalar(dim),
                                        PreconditionerSet::Diagonal(dim),
                                        PreconditionerSet::Full(dim)};
  for (int dl = 2; dl < dim; ++dl)
    if (dim % dl == 0) out.push_back(PreconditionerSet::KronLeft(dl, dim / dl));
  return out;
}

// Random strictly-PD member of the set's cone with unit trace.
inline SymMatrix random_unit_trace_member(const PreconditionerSet& set, SeqRng& rng) {
  switch (set.kind) {
    case SetKind::Scalar:
      return SymMatrix::Scaled(set.dim, 1.0 / set.dim);
    case SetKind::Diagonal: {
      Eigen::VectorXd h(set.dim);
      for (int i = 0; i < set.dim; ++i) h[i] = rng.uniform(0.05, 1.0);
      return SymMatrix::Diag(h / h.sum());
    }
    case SetKind::Full: {
      const SymMatrix p = random_pd(rng, set.dim, 0.05);
      return (1.0 / p.trace()) * p;
    }
    case SetKind::KronLeft: {
      const SymMatrix a = random_pd(rng, set.dL, 0.05);
      const SymMatrix k(detail::kron_with_identity(a.mat(), set.dR));
      return (1.0 / k.trace()) * k;
    }
  }
  throw InvalidInput("random_unit_trace_member: unknown kind");
}

// Random strictly-PD member with arbitrary scale.
inline SymMatrix random_member(const PreconditionerSet& set, SeqRng& rng) {
  const SymMatrix h = random_unit_trace_member(set, rng);
  return rng.uniform(0.5, 5.0) * h;
}

}  // namespace precopt::testing
