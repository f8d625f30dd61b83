#include "elgof/testkit.hpp"

#include "elgof/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace elgof {

ElStatistics el_statistics(const MarkedProcessEval& mpe, double cap, double tol) {
  if (!(cap > 0.0)) throw Error(ErrorCode::invalid_argument, "cap must be positive");
  ElStatistics st;
  const Index grid = mpe.grid_size();
  st.ell_curve.resize(grid);
  for (Index g = 0; g < grid; ++g) {
    const auto column = mpe.marks.col(g);
    const double ell = el_log_ratio_value(
        std::span<const double>(column.data(), static_cast<std::size_t>(column.size())), tol);
    st.ell_curve(g) = ell;
    if (std::isinf(ell)) {
      ++st.degenerate_count;
      st.capped = true;
      st.T_n += mpe.grid_weight(g) * cap;
    } else {
      st.T_n += mpe.grid_weight(g) * ell;
    }
    st.S_n = std::max(st.S_n, ell);
  }
  st.degenerate_variance_count = mpe.degenerate_variance_count();
  return st;
}

IrfStatistics irf_from_process(const Vector& process, const Vector& grid_weight) {
  IrfStatistics st;
  st.ks = process.cwiseAbs().maxCoeff();
  st.cvm = grid_weight.dot(process.cwiseAbs2());
  return st;
}

IrfStatistics irf_statistics(const MarkedProcessEval& mpe) {
  return irf_from_process(mpe.process(), mpe.grid_weight);
}

Decision decide(double observed, std::span<const double> replicates, double level) {
  if (replicates.empty()) {
    throw Error(ErrorCode::invalid_argument, "no bootstrap replicates");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "level must lie in (0, 1)");
  }
  const auto exceed = std::count_if(replicates.begin(), replicates.end(),
                                    [observed](double r) { return r >= observed; });
  Decision d;
  d.observed = observed;
  d.level = level;
  d.replicates = replicates.size();
  d.p_value = static_cast<double>(1 + exceed) / static_cast<double>(replicates.size() + 1);
  d.reject = d.p_value <= level;
  return d;
}

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::el_ks: return "EL-KS";
    case TestKind::el_cvm: return "EL-CVM";
    case TestKind::irf_ks: return "IRF-KS";
    case TestKind::irf_cvm: return "IRF-CVM";
  }
  return "?";
}

TestKind parse_test_kind(const std::string& text) {
  std::string key;
  for (char c : text) key += c == '_' ? '-' : static_cast<char>(std::tolower(c));
  if (key == "el-ks") return TestKind::el_ks;
  if (key == "el-cvm") return TestKind::el_cvm;
  if (key == "irf-ks") return TestKind::irf_ks;
  if (key == "irf-cvm") return TestKind::irf_cvm;
  throw Error(ErrorCode::invalid_argument, "unknown test '" + text + "'");
}

}  // namespace elgof
