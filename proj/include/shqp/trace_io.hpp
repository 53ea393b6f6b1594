// Copyright 2026 The SHQP Authors
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

// Trace serialization. Doubles are printed with 17 significant digits so a
// trace can be replayed bit for bit.

#ifndef SHQP_TRACE_IO_HPP_
#define SHQP_TRACE_IO_HPP_

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "shqp/solvers.hpp"

namespace shqp {

inline std::string Exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string JoinExact(const Vector& x, char sep = ';') {
  std::string out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i > 0) out += sep;
    out += Exact(x[i]);
  }
  return out;
}

// Columns: outer_i, inner_j, step_kind, x, dist_to_set_1..m, qp_active_size,
// qp_kkt_residual. QP columns are empty on non-QP rows.
inline void WriteTraceCsv(std::ostream& os, const Trace& trace, int m) {
  os << "outer_i,inner_j,step_kind,x";
  for (int l = 1; l <= m; ++l) os << ",dist_to_set_" << l;
  os << ",qp_active_size,qp_kkt_residual\n";
  for (const auto& r : trace.records) {
    os << r.outer << ',' << r.inner << ',' << ToString(r.kind) << ','
       << JoinExact(r.x);
    for (double d : r.distances) os << ',' << Exact(d);
    if (r.qp) {
      os << ',' << r.qp->active_size << ',' << Exact(r.qp->kkt_residual);
    } else {
      os << ",,";
    }
    os << '\n';
  }
}

inline std::string TraceCsv(const Trace& trace, int m) {
  std::ostringstream os;
  WriteTraceCsv(os, trace, m);
  return os.str();
}

inline nlohmann::json TraceJson(const Trace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace.records) {
    nlohmann::json row;
    row["outer_i"] = r.outer;
    row["inner_j"] = r.inner;
    row["step_kind"] = ToString(r.kind);
    if (r.set_index >= 0) row["set"] = r.set_index + 1;
    nlohmann::json x = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.x.size(); ++i) x.push_back(r.x[i]);
    row["x"] = x;
    row["dist_to_set"] = r.distances;
    if (r.qp) {
      row["qp_constraints"] = r.qp->constraints;
      row["qp_active_size"] = r.qp->active_size;
      row["qp_kkt_residual"] = r.qp->kkt_residual;
    }
    if (r.merit) row["merit"] = *r.merit;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace shqp

#endif  // SHQP_TRACE_IO_HPP_
