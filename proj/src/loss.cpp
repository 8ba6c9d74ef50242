#include "loss.hpp"

#include <cmath>

#include "error.hpp"

namespace lc {

namespace {

void check_batch(const std::vector<float>& preds, const std::vector<float>& targets,
                 const char* op) {
    if (preds.empty()) raise_usage(std::string(op) + ": empty batch");
    if (preds.size() != targets.size())
        raise_usage(std::string(op) + ": " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(targets.size()) + " targets");
}

}  // namespace

const char* loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::l1: return "l1";
        case LossKind::l2: return "l2";
        case LossKind::huber: return "huber";
    }
    return "?";
}

LossKind parse_loss_kind(const std::string& text) {
    if (text == "l1") return LossKind::l1;
    if (text == "l2") return LossKind::l2;
    if (text == "huber") return LossKind::huber;
    raise_usage("unknown loss '" + text + "' (expected l1, l2 or huber)");
}

LossResult loss_l1(const std::vector<float>& preds, const std::vector<float>& targets) {
    check_batch(preds, targets, "loss_l1");
    const double inv_m = 1.0 / double(preds.size());
    LossResult r;
    r.grad.resize(preds.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double a = double(preds[i]) - targets[i];
        sum += std::fabs(a);
        r.grad[i] = float((a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0)) * inv_m);
    }
    r.value = sum * inv_m;
    return r;
}

LossResult loss_l2(const std::vector<float>& preds, const std::vector<float>& targets) {
    check_batch(preds, targets, "loss_l2");
    const double inv_m = 1.0 / double(preds.size());
    LossResult r;
    r.grad.resize(preds.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double a = double(preds[i]) - targets[i];
        sum += a * a;
        r.grad[i] = float(2.0 * a * inv_m);
    }
    r.value = sum * inv_m;
    return r;
}

LossResult loss_huber(const std::vector<float>& preds, const std::vector<float>& targets,
                      float delta) {
    if (!(delta > 0.0f)) raise_usage("loss_huber: delta must be > 0");
    check_batch(preds, targets, "loss_huber");
    const double d = delta;
    const double inv_m = 1.0 / double(preds.size());
    LossResult r;
    r.grad.resize(preds.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double a = double(preds[i]) - targets[i];
        if (std::fabs(a) <= d) {
            sum += 0.5 * a * a;
            r.grad[i] = float(a * inv_m);
        } else {
            sum += d * std::fabs(a) - 0.5 * d * d;
            r.grad[i] = float((a > 0.0 ? d : -d) * inv_m);
        }
    }
    r.value = sum * inv_m;
    return r;
}

LossResult compute_loss(LossKind kind, const std::vector<float>& preds,
                        const std::vector<float>& targets, float delta) {
    switch (kind) {
        case LossKind::l1: return loss_l1(preds, targets);
        case LossKind::l2: return loss_l2(preds, targets);
        case LossKind::huber: return loss_huber(preds, targets, delta);
    }
    raise_usage("compute_loss: bad loss kind");
}

}  // namespace lc
