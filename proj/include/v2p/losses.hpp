#pragma once

#include "v2p/head.hpp"
#include "v2p/labels.hpp"

#include <vector>

namespace v2p {

/// Combined training objective: total = l_ntp + lambda1*l_sup + lambda2*l_attn.
/// l_ntp is an externally supplied scalar with no gradient into the head.
struct LossBreakdown {
    double l_ntp = 0.0;
    double l_sup = 0.0;
    double l_attn = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double total = 0.0;
};

struct LossValue {
    double value = 0.0;
    std::vector<double> grad; // d(value)/d(probs)
};

/// Total attention mass over the suppression set; gradient is the indicator
/// vector of the set. Throws std::invalid_argument on grid mismatch.
LossValue suppression_loss(const AttentionMap& attn, const SuppressionSet& g);

/// KL(target || attn) with 0*log(0/a) = 0 and a_i floored at 1e-12 inside
/// the log. Gradient w.r.t. a_i is -p_i/a_i (before softmax backprop).
/// Throws std::invalid_argument on grid mismatch or negative target entries.
LossValue kl_action_loss(const LabelMap& target, const AttentionMap& attn);

struct CombinedLoss {
    LossBreakdown breakdown;
    std::vector<double> grad; // lambda1*grad(l_sup) + lambda2*grad(l_attn)
};

/// Throws std::invalid_argument for negative weights.
CombinedLoss combined_loss(const LabelMap& target, const AttentionMap& attn,
                           const SuppressionSet& g, double lambda1, double lambda2,
                           double l_ntp = 0.0);

} // namespace v2p
