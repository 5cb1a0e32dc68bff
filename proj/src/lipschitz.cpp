#include "probe/lipschitz.hpp"

#include <cmath>
#include <stdexcept>

namespace probe {

double matrix_p_norm(const Matrix& m, double p) {
    if (p == 1.0) return operator_norm_1(m);
    if (std::isinf(p)) return operator_norm_inf(m);
    if (p == 2.0) return spectral_norm(m).value;
    throw std::invalid_argument("matrix_p_norm: p must be 1, 2 or inf");
}

LipschitzProfile lipschitz_profile(const GnnModel& model, double p) {
    LipschitzProfile prof;
    prof.p = p;
    prof.c_softmax = 1.0;
    auto norm_of = [&](const Matrix& m) {
        if (p == 2.0) {
            const SpectralResult r = spectral_norm(m);
            if (!r.converged) prof.spectral_converged = false;
            return r.value;
        }
        return matrix_p_norm(m, p);
    };
    for (int l = 0; l < model.layer_count(); ++l) {
        prof.c_softplus.push_back(1.0);  // sup of sigmoid
        prof.self_norms.push_back(norm_of(model.layer(l).w_self));
        prof.neighbor_norms.push_back(norm_of(model.layer(l).w_neighbor));
    }
    prof.fc_norm = norm_of(model.classifier_weight());
    prof.fc_norm_t = norm_of(transpose(model.classifier_weight()));
    prof.self_norm_1_t = model.layer_count() > 0 ? norm_of(transpose(model.layer(0).w_self)) : 0.0;

    prof.gamma11 = prof.c_softmax * prof.fc_norm;
    prof.gamma12 = prof.c_softmax * prof.fc_norm;
    for (int l = 0; l < model.layer_count(); ++l) {
        prof.gamma11 *= prof.c_softplus[l] * prof.self_norms[l];
        prof.gamma12 *= prof.c_softplus[l] * prof.neighbor_norms[l];
    }
    prof.gamma3_weights = prof.fc_norm_t;
    for (double s : prof.self_norms) prof.gamma3_weights *= s;
    prof.gamma3_weights *= prof.self_norm_1_t;
    return prof;
}

}  // namespace probe
