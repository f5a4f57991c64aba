#include "flexhrc/tpik/solver.hpp"

namespace flexhrc::tpik {

template HierarchyResult<double> solve_hierarchy<double>(const std::vector<LevelProblem<double>>&, Eigen::Index,
                                                         const Damping<double>&, const VecX<double>&);

}  // namespace flexhrc::tpik
