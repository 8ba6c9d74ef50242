#pragma once

#include <string>
#include <vector>

namespace lc {

enum class LossKind { l1, l2, huber };

const char* loss_kind_name(LossKind k);
LossKind parse_loss_kind(const std::string& text);

struct LossResult {
    double value = 0.0;
    std::vector<float> grad;  // d(loss)/d(pred), same length as preds
};

/// L1 = (1/M) sum |p - t|; subgradient sign(p - t)/M, 0 at equality.
LossResult loss_l1(const std::vector<float>& preds, const std::vector<float>& targets);

/// L2 = (1/M) sum (p - t)^2; gradient 2(p - t)/M.
LossResult loss_l2(const std::vector<float>& preds, const std::vector<float>& targets);

/// Per element: 0.5*a^2 when |a| <= delta, else delta*|a| - 0.5*delta^2,
/// averaged over M; gradient (a or delta*sign(a))/M. Continuous and C1 at the
/// branch point.
LossResult loss_huber(const std::vector<float>& preds, const std::vector<float>& targets,
                      float delta);

LossResult compute_loss(LossKind kind, const std::vector<float>& preds,
                        const std::vector<float>& targets, float delta);

}  // namespace lc
