#include <algorithm>
#include <cmath>

#include "probe/explainers.hpp"

namespace probe {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Matrix gaussian_gram(const Vec& vals, double sigma) {
    const int n = static_cast<int>(vals.size());
    Matrix k(n, n);
    const double denom = 2.0 * sigma * sigma;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = vals[i] - vals[j];
            k(i, j) = std::exp(-d * d / denom);
        }
    return k;
}

// H K H with H = I - 11^T/n, then Frobenius normalization
Matrix center_normalize(const Matrix& k) {
    const int n = k.rows;
    Vec row_mean(n, 0.0), col_mean(n, 0.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            row_mean[i] += k(i, j);
            col_mean[j] += k(i, j);
            total += k(i, j);
        }
    for (double& x : row_mean) x /= n;
    for (double& x : col_mean) x /= n;
    total /= static_cast<double>(n) * n;
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = k(i, j) - row_mean[i] - col_mean[j] + total;
    const double f = frobenius(out);
    if (f > 1e-300)
        for (double& x : out.data) x /= f;
    return out;
}

}  // namespace

Vec hsic_lasso_solve(const std::vector<Matrix>& grams, const Matrix& output_gram, double rho,
                     int max_sweeps, double tol, int* sweeps_used) {
    const int m = static_cast<int>(grams.size());
    Vec beta(m, 0.0);
    // precomputed inner products make each sweep O(M^2)
    Matrix gram_dots(m, m);
    Vec l_dots(m);
    for (int i = 0; i < m; ++i) {
        l_dots[i] = frobenius_inner(grams[i], output_gram);
        for (int j = i; j < m; ++j) {
            gram_dots(i, j) = frobenius_inner(grams[i], grams[j]);
            gram_dots(j, i) = gram_dots(i, j);
        }
    }
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (int k = 0; k < m; ++k) {
            const double diag = gram_dots(k, k);
            if (diag <= 1e-300) {
                beta[k] = 0.0;
                continue;
            }
            double g = l_dots[k];
            for (int j = 0; j < m; ++j)
                if (j != k) g -= beta[j] * gram_dots(k, j);
            const double nb = std::max(0.0, (g - rho) / diag);
            max_change = std::max(max_change, std::abs(nb - beta[k]));
            beta[k] = nb;
        }
        if (max_change < tol) {
            ++sweep;
            break;
        }
    }
    if (sweeps_used) *sweeps_used = sweep;
    return beta;
}

double hsic_objective(const std::vector<Matrix>& grams, const Matrix& output_gram, const Vec& beta,
                      double rho) {
    Matrix resid = output_gram;
    for (std::size_t k = 0; k < grams.size(); ++k)
        for (std::size_t i = 0; i < resid.data.size(); ++i)
            resid.data[i] -= beta[k] * grams[k].data[i];
    double obj = 0.0;
    for (double x : resid.data) obj += x * x;
    obj *= 0.5;
    for (double b : beta) obj += rho * std::abs(b);
    return obj;
}

GraphLimeResult graphlime(const GnnModel& model, const ComputationSubgraph& sg, double p,
                          const GraphLimeOptions& opts) {
    const int n = static_cast<int>(sg.nodes.size());
    if (n < 3)
        throw TooFewSamplesError("graphlime: node " + std::to_string(sg.target) + " has only " +
                                 std::to_string(n - 1) + " sampled neighbors");
    const int m = sg.features.cols;

    GraphLimeResult res;
    GraphLimeArtifacts& art = res.artifacts;
    art.samples = sg.nodes;
    art.rho = opts.rho;

    // per-sample softmax predictions within the subgraph view
    std::vector<Vec> preds(n);
    for (int i = 0; i < n; ++i) preds[i] = forward_probabilities(model, sg, sg.nodes[i]);

    if (opts.fixed_sigma_x) {
        art.sigma_x = *opts.fixed_sigma_x;
    } else {
        std::vector<double> dists;
        dists.reserve(static_cast<std::size_t>(m) * n * (n - 1) / 2);
        for (int k = 0; k < m; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    dists.push_back(std::abs(sg.features(i, k) - sg.features(j, k)));
        const double med = median(std::move(dists));
        art.sigma_x = med > 0.0 ? med : 1.0;
    }
    if (opts.fixed_sigma_y) {
        art.sigma_y = *opts.fixed_sigma_y;
    } else {
        std::vector<double> dists;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) dists.push_back(norm2(sub(preds[i], preds[j])));
        const double med = median(std::move(dists));
        art.sigma_y = med > 0.0 ? med : 1.0;
    }

    for (int k = 0; k < m; ++k) {
        Vec vals(n);
        for (int i = 0; i < n; ++i) vals[i] = sg.features(i, k);
        Matrix raw = gaussian_gram(vals, art.sigma_x);
        art.gram_centered.push_back(center_normalize(raw));
        art.gram_raw.push_back(std::move(raw));
        art.sample_values.push_back(std::move(vals));
    }
    if (opts.fixed_output_gram) {
        art.output_gram_centered = *opts.fixed_output_gram;
    } else {
        Matrix lraw(n, n);
        const double denom = 2.0 * art.sigma_y * art.sigma_y;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double d = norm2(sub(preds[i], preds[j]));
                lraw(i, j) = std::exp(-d * d / denom);
            }
        art.output_gram_centered = center_normalize(lraw);
    }

    art.beta = hsic_lasso_solve(art.gram_centered, art.output_gram_centered, opts.rho, 10000, 1e-8,
                                &art.sweeps_used);

    Explanation e;
    e.kind = ExplanationKind::NodeFeature;
    e.method_tag = "graphlime";
    e.node = sg.target;
    e.top_p = p;
    e.node_scores = art.beta;
    e.node_mask = top_p_mask(e.node_scores, p);
    res.explanation = std::move(e);
    return res;
}

}  // namespace probe
