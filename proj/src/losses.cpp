#include "v2p/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace v2p {

namespace {
constexpr double kLogFloor = 1e-12;
}

LossValue suppression_loss(const AttentionMap& attn, const SuppressionSet& g) {
    if (attn.grid != g.grid) {
        throw std::invalid_argument("suppression_loss: attention and suppression set grids differ");
    }
    LossValue out;
    out.grad.assign(attn.probs.size(), 0.0);
    for (std::uint32_t i : g.indices) {
        out.value += attn.probs[i];
        out.grad[i] = 1.0;
    }
    return out;
}

LossValue kl_action_loss(const LabelMap& target, const AttentionMap& attn) {
    if (target.grid != attn.grid) {
        throw std::invalid_argument("kl_action_loss: target and attention grids differ");
    }
    LossValue out;
    const std::size_t m = attn.probs.size();
    out.grad.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double p = target.values[i];
        if (p < 0.0) {
            throw std::invalid_argument("kl_action_loss: negative target entry");
        }
        if (p == 0.0) continue; // 0 * log(0/a) = 0
        const double a = std::max(attn.probs[i], kLogFloor);
        out.value += p * std::log(p / a);
        if (attn.probs[i] > kLogFloor) {
            out.grad[i] = -p / a;
        }
    }
    return out;
}

CombinedLoss combined_loss(const LabelMap& target, const AttentionMap& attn,
                           const SuppressionSet& g, double lambda1, double lambda2,
                           double l_ntp) {
    if (lambda1 < 0.0 || lambda2 < 0.0) {
        throw std::invalid_argument("combined_loss: weights must be non-negative");
    }
    const LossValue sup = suppression_loss(attn, g);
    const LossValue attn_loss = kl_action_loss(target, attn);

    CombinedLoss out;
    out.breakdown.l_ntp = l_ntp;
    out.breakdown.l_sup = sup.value;
    out.breakdown.l_attn = attn_loss.value;
    out.breakdown.lambda1 = lambda1;
    out.breakdown.lambda2 = lambda2;
    out.breakdown.total = l_ntp + lambda1 * sup.value + lambda2 * attn_loss.value;

    out.grad.resize(attn.probs.size());
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
        out.grad[i] = lambda1 * sup.grad[i] + lambda2 * attn_loss.grad[i];
    }
    return out;
}

} // namespace v2p
