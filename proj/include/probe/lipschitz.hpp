#pragma once

#include <vector>

#include "probe/gnn.hpp"
#include "probe/linalg.hpp"

namespace probe {

// Activation constants and weight-matrix norms whose products form the
// theoretical bounds.
struct LipschitzProfile {
    double p = 2.0;
    double c_softmax = 1.0;
    std::vector<double> c_softplus;     // per layer, all 1
    std::vector<double> self_norms;     // ||W_a^l||
    std::vector<double> neighbor_norms; // ||W_n^l||
    double fc_norm = 0.0;               // ||W_fc||
    double fc_norm_t = 0.0;             // ||W_fc^T||
    double self_norm_1_t = 0.0;         // ||(W_a^1)^T||

    double gamma11 = 0.0;  // C_fc ||W_fc|| prod_l C_l ||W_a^l||
    double gamma12 = 0.0;  // same with neighbor weights
    // gamma3 = ||y - yhat||_p * gamma3_weights (prediction-dependent factor
    // supplied by the caller)
    double gamma3_weights = 0.0;  // ||W_fc^T|| prod_l ||W_a^l|| ||(W_a^1)^T||

    bool spectral_converged = true;
};

// p in {1, 2, inf}; 2 uses power-iteration spectral norms.
LipschitzProfile lipschitz_profile(const GnnModel& model, double p = 2.0);

double matrix_p_norm(const Matrix& m, double p);

}  // namespace probe
