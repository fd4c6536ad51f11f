// Copyright 2026 The ilcjump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Trial-to-trial error model: the lifted matrix G mapping stacked force
// offsets over the contact samples to the change of per-sample error.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

#include "ilcjump/model/types.hpp"

namespace ilcjump::ilc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// How state offsets behave after the last input. `kPropagated` keeps
/// pushing them through A; `kFrozen` reuses the exponent of the last
/// contact sample for every flight row.
enum class FlightErrorModel { kPropagated, kFrozen };

inline const char* flight_model_name(FlightErrorModel m) {
  return m == FlightErrorModel::kFrozen ? "frozen" : "propagated";
}

inline FlightErrorModel parse_flight_model(const std::string& s) {
  if (s == "propagated") return FlightErrorModel::kPropagated;
  if (s == "frozen") return FlightErrorModel::kFrozen;
  throw ModelInputError("unknown flight error model '" + s + "'");
}

/// Rows are samples 1..N (6 rows each), columns the N_c inputs (4 each).
struct LiftedModel {
  int n = 0;
  int n_c = 0;
  MatrixXd g;

  Eigen::Block<const MatrixXd> block(int m, int j) const {
    return g.block(6 * (m - 1), 4 * j, 6, 4);
  }
  Eigen::Block<const MatrixXd> row(int m) const {
    return g.block(6 * (m - 1), 0, 6, g.cols());
  }

  /// Stacked rows for the listed samples.
  MatrixXd rows(const std::vector<int>& samples) const {
    MatrixXd out(6 * static_cast<Eigen::Index>(samples.size()), g.cols());
    for (size_t i = 0; i < samples.size(); ++i) {
      out.middleRows(6 * static_cast<Eigen::Index>(i), 6) = row(samples[i]);
    }
    return out;
  }
};

inline LiftedModel build_lifted(const DiscreteModel& model, const PhaseSchedule& sch,
                                FlightErrorModel flight = FlightErrorModel::kPropagated) {
  sch.validate();
  const int nc = sch.n_c();
  const int n = sch.n();
  if (static_cast<int>(model.b_mats.size()) != nc) {
    throw DimensionError("build_lifted: model has " + std::to_string(model.b_mats.size()) +
                         " input matrices, schedule needs " + std::to_string(nc));
  }
  std::vector<Mat6> pow(static_cast<size_t>(n) + 1);
  pow[0] = Mat6::Identity();
  for (int i = 1; i <= n; ++i) pow[static_cast<size_t>(i)] = model.a_mat * pow[static_cast<size_t>(i - 1)];

  LiftedModel lm;
  lm.n = n;
  lm.n_c = nc;
  lm.g = MatrixXd::Zero(6 * n, 4 * nc);
  for (int m = 1; m <= n; ++m) {
    const int last = std::min(m, nc);
    for (int j = 0; j < last; ++j) {
      int e = m - 1 - j;
      if (flight == FlightErrorModel::kFrozen && m > nc) e = nc - 1 - j;
      lm.g.block(6 * (m - 1), 4 * j, 6, 4) =
          pow[static_cast<size_t>(e)] * model.b_mats[static_cast<size_t>(j)];
    }
  }
  return lm;
}

inline VectorXd stack_inputs(const ControlSequence& u) {
  VectorXd z(4 * static_cast<Eigen::Index>(u.size()));
  for (size_t t = 0; t < u.size(); ++t) z.segment<4>(4 * static_cast<Eigen::Index>(t)) = u[t];
  return z;
}

inline ControlSequence unstack_inputs(const VectorXd& z) {
  if (z.size() % 4 != 0) throw DimensionError("unstack_inputs: length not a multiple of 4");
  ControlSequence u(static_cast<size_t>(z.size() / 4));
  for (size_t t = 0; t < u.size(); ++t) u[t] = z.segment<4>(4 * static_cast<Eigen::Index>(t));
  return u;
}

/// e_{k+1} = e_k - G du for samples 1..N; sample 0 is unaffected.
inline std::vector<Vec6> predict_error(const std::vector<Vec6>& e_k, const LiftedModel& lm,
                                       const VectorXd& du) {
  if (static_cast<int>(e_k.size()) != lm.n + 1) {
    throw DimensionError("predict_error: expected N + 1 error samples");
  }
  if (du.size() != lm.g.cols()) {
    throw DimensionError("predict_error: du has " + std::to_string(du.size()) +
                         " entries, expected " + std::to_string(lm.g.cols()));
  }
  const VectorXd delta = lm.g * du;
  std::vector<Vec6> out = e_k;
  for (int m = 1; m <= lm.n; ++m) {
    out[static_cast<size_t>(m)] -= delta.segment<6>(6 * (m - 1));
  }
  return out;
}

}  // namespace ilcjump::ilc
