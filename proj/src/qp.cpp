#include "ralab/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ralab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

bool add_constraint(RMat& R, RMat& J, RVec& d, int& iq, double& r_norm) {
    const int n = static_cast<int>(d.size());
    for (int j = n - 1; j >= iq + 1; --j) {
        double cc = d[j - 1];
        double ss = d[j];
        const double h = std::hypot(cc, ss);
        if (h == 0.0) continue;
        d[j] = 0.0;
        ss /= h;
        cc /= h;
        if (cc < 0.0) {
            cc = -cc;
            ss = -ss;
            d[j - 1] = -h;
        } else {
            d[j - 1] = h;
        }
        const double xny = ss / (1.0 + cc);
        for (int k = 0; k < n; ++k) {
            const double t1 = J(k, j - 1);
            const double t2 = J(k, j);
            J(k, j - 1) = t1 * cc + t2 * ss;
            J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
        }
    }
    ++iq;
    for (int i = 0; i < iq; ++i) R(i, iq - 1) = d[i];
    if (std::abs(d[iq - 1]) <= kEps * r_norm) return false;
    r_norm = std::max(r_norm, std::abs(d[iq - 1]));
    return true;
}

void delete_constraint(RMat& R, RMat& J, std::vector<int>& A, RVec& u, int& iq, int l) {
    const int n = static_cast<int>(R.rows());
    int qq = -1;
    for (int i = 0; i < iq; ++i)
        if (A[i] == l) {
            qq = i;
            break;
        }
    if (qq < 0) return;
    for (int i = qq; i < iq - 1; ++i) {
        A[i] = A[i + 1];
        u[i] = u[i + 1];
        for (int j = 0; j < n; ++j) R(j, i) = R(j, i + 1);
    }
    A[iq - 1] = A[iq];
    u[iq - 1] = u[iq];
    A[iq] = -1;
    u[iq] = 0.0;
    for (int j = 0; j < iq; ++j) R(j, iq - 1) = 0.0;
    --iq;
    if (iq == 0) return;
    for (int j = qq; j < iq; ++j) {
        double cc = R(j, j);
        double ss = R(j + 1, j);
        const double h = std::hypot(cc, ss);
        if (h == 0.0) continue;
        cc /= h;
        ss /= h;
        R(j + 1, j) = 0.0;
        if (cc < 0.0) {
            R(j, j) = -h;
            cc = -cc;
            ss = -ss;
        } else {
            R(j, j) = h;
        }
        const double xny = ss / (1.0 + cc);
        for (int k = j + 1; k < iq; ++k) {
            const double t1 = R(j, k);
            const double t2 = R(j + 1, k);
            R(j, k) = t1 * cc + t2 * ss;
            R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
        }
        for (int k = 0; k < n; ++k) {
            const double t1 = J(k, j);
            const double t2 = J(k, j + 1);
            J(k, j) = t1 * cc + t2 * ss;
            J(k, j + 1) = xny * (J(k, j) + t1) - t2;
        }
    }
}

}  // namespace

QpResult solve_qp(const RMat& G, const RVec& g0, const RMat& CI, const RVec& ci0, int max_iter) {
    const int n = static_cast<int>(G.rows());
    const int m = static_cast<int>(CI.cols());
    if (G.cols() != n || g0.size() != n || CI.rows() != n || ci0.size() != m)
        throw ShapeError("solve_qp: inconsistent dimensions");

    Eigen::LLT<RMat> llt(G);
    if (llt.info() != Eigen::Success) throw NumericError("solve_qp: G is not positive definite");
    const RMat L = llt.matrixL();
    RMat J = L.transpose().triangularView<Eigen::Upper>().solve(RMat::Identity(n, n));
    const double c1 = G.trace();
    const double c2 = J.trace();

    QpResult res;
    RVec x = -llt.solve(g0);
    double f = 0.5 * g0.dot(x);

    RMat R = RMat::Zero(n, n);
    RVec d(n), z(n), r(n + 1), u = RVec::Zero(n + 1), s(m), x_old(n), u_old(n + 1);
    std::vector<int> A(n + 1, -1), A_old(n + 1, -1);
    std::vector<bool> inactive(m, true), allowed(m, true);
    int iq = 0;
    double r_norm = 1.0;
    int ip = 0;

    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        // step 1
        for (int i = 0; i < iq; ++i) inactive[A[i]] = false;
        double psi = 0.0;
        for (int i = 0; i < m; ++i) {
            allowed[i] = true;
            s[i] = CI.col(i).dot(x) + ci0[i];
            psi += std::min(0.0, s[i]);
        }
        if (std::abs(psi) <= m * kEps * c1 * c2 * 100.0) {
            res.x = x;
            res.objective = f;
            res.feasible = true;
            return res;
        }
        for (int i = 0; i < iq; ++i) {
            u_old[i] = u[i];
            A_old[i] = A[i];
        }
        x_old = x;

    step2:
        {
            double ss = 0.0;
            ip = -1;
            for (int i = 0; i < m; ++i)
                if (s[i] < ss && inactive[i] && allowed[i]) {
                    ss = s[i];
                    ip = i;
                }
            if (ip < 0) {
                res.x = x;
                res.objective = f;
                res.feasible = true;
                return res;
            }
        }
        const RVec np = CI.col(ip);
        u[iq] = 0.0;
        A[iq] = ip;

        for (int inner = 0;; ++inner) {
            if (inner > 10 * (m + n) + 100) throw NumericError("solve_qp: cycling in dual steps");
            // step 2a
            d = J.transpose() * np;
            z.setZero();
            for (int j = iq; j < n; ++j) z += J.col(j) * d[j];
            for (int i = iq - 1; i >= 0; --i) {
                double sum = d[i];
                for (int j = i + 1; j < iq; ++j) sum -= R(i, j) * r[j];
                r[i] = sum / R(i, i);
            }
            // step 2b
            int l = -1;
            double t1 = kInf;
            for (int k = 0; k < iq; ++k)
                if (r[k] > 0.0 && u[k] / r[k] < t1) {
                    t1 = u[k] / r[k];
                    l = A[k];
                }
            double t2 = kInf;
            if (z.squaredNorm() > kEps) {
                t2 = -s[ip] / z.dot(np);
                if (t2 < 0.0) t2 = kInf;
            }
            const double t = std::min(t1, t2);
            if (t >= kInf) {
                res.x = x;
                res.objective = f;
                res.feasible = false;
                return res;
            }
            if (t2 >= kInf) {
                for (int k = 0; k < iq; ++k) u[k] -= t * r[k];
                u[iq] += t;
                inactive[l] = true;
                delete_constraint(R, J, A, u, iq, l);
                continue;
            }
            x += t * z;
            f += t * z.dot(np) * (0.5 * t + u[iq]);
            for (int k = 0; k < iq; ++k) u[k] -= t * r[k];
            u[iq] += t;
            if (std::abs(t - t2) < kEps) {
                if (!add_constraint(R, J, d, iq, r_norm)) {
                    // linearly dependent on the active set: exclude it and retry from the saved point
                    allowed[ip] = false;
                    delete_constraint(R, J, A, u, iq, ip);
                    for (int i = 0; i < m; ++i) inactive[i] = true;
                    for (int i = 0; i < iq; ++i) {
                        A[i] = A_old[i];
                        u[i] = u_old[i];
                        inactive[A[i]] = false;
                    }
                    x = x_old;
                    goto step2;
                }
                inactive[ip] = false;
                break;
            }
            inactive[l] = true;
            delete_constraint(R, J, A, u, iq, l);
            s[ip] = CI.col(ip).dot(x) + ci0[ip];
        }
    }
    throw NumericError("solve_qp: iteration cap reached");
}

}  // namespace ralab
