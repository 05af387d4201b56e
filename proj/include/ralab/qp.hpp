#pragma once

#include "ralab/common.hpp"

namespace ralab {

struct QpResult {
    RVec x;
    double objective = 0.0;
    bool feasible = false;
    int iterations = 0;
};

// Dense strictly convex QP via the Goldfarb-Idnani dual active-set method:
//   min 0.5 x'Gx + g0'x   s.t.   CI' x + ci0 >= 0   (one constraint per column of CI)
// Meant for small n; the number of constraints may be large.
QpResult solve_qp(const RMat& G, const RVec& g0, const RMat& CI, const RVec& ci0, int max_iter = 20000);

}  // namespace ralab
