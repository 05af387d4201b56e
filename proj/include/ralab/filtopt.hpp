#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ralab/common.hpp"
#include "ralab/waveform.hpp"

namespace ralab {

// Ceiling on the real spectrum of z, bins k = 0..bins/2 of a bins-point DFT.
struct MaskSpec {
    int bins = 1024;
    RVec b_up;
};

// Bandwidth mask around a reference pulse: peak * (1 + margin) where
// |F_ref| >= occupied * peak, stop_floor * peak elsewhere.
MaskSpec mask_from_pulse(const PulseShape& ref, int bins = 1024, double occupied = 0.01, double stop_floor = 0.03,
                         double margin = 0.0);
MaskSpec constant_mask(double ceiling, int bins = 1024);
SpectralBox mask_box(const MaskSpec& mask, int support, double floor = 1e-6);

void write_mask_csv(const MaskSpec& mask, const std::string& path);
MaskSpec read_mask_csv(const std::string& path);

// One scenario: A(z) = sum_i z_i B[i] + prior, i = 0..support.
struct DesignTerm {
    std::vector<CMat> B;
    CMat prior;
};

// The objective averages N_R Tr A^-1 over the terms (a single term is the
// one-scenario problem).
struct DesignProblem {
    int m_osf = 1;
    int support = 0;
    int n_antennas = 1;
    std::vector<DesignTerm> terms;
};

// B_0 = X^H X / s2, B_i = X^H (C_i + C_i') X / s2 with C_i the shift by i samples.
DesignTerm build_design_term(const CMat& X, const RVec& gamma, double noise_var, int support, double prior_factor = 2.0);
DesignProblem build_design_problem(const CMat& X, const RVec& gamma, double noise_var, int m_osf, int n_antennas,
                                   int support = -1, double prior_factor = 2.0);
void add_scenario(DesignProblem& problem, const CMat& X, const RVec& gamma, double noise_var,
                  double prior_factor = 2.0);

CMat design_matrix(const DesignTerm& term, const RVec& z);

// z holds z_0..z_support. Throws InfeasiblePointError when A(z) is not positive definite.
std::pair<double, RVec> objective_and_gradient(const DesignProblem& problem, const RVec& z);
double design_objective(const DesignProblem& problem, const RVec& z);

struct FilterOptParams {
    int max_iters = 200;
    double armijo = 1e-4;
    double rel_tol = 1e-8;
    double spectral_floor = 1e-6;
    double feas_tol = 1e-6;
};

struct FilterDesignResult {
    PulseShape pulse;
    double init_objective = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // accepted iterates, init first
    double max_violation = 0.0;           // worst mask violation over accepted iterates
};

// Independent coefficients z_0..z_support of a pulse (z_0 is the center tap).
RVec free_coefficients(const PulseShape& pulse, int support);

// Projected gradient with Armijo backtracking; the projection is the exact
// Euclidean projection onto {z_0 = 1, floor <= F(z) <= b_up}.
FilterDesignResult optimize_filter(const DesignProblem& problem, const MaskSpec& mask, const PulseShape& init,
                                   const FilterOptParams& params = {});

}  // namespace ralab
