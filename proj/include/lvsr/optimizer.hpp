// Adam with bias correction and optional global-norm gradient clipping.
// Moment tensors are keyed by parameter name so they can ride along in
// checkpoints and make resumed runs bit-identical.
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "lvsr/params.hpp"
#include "lvsr/tensor.hpp"

namespace lvsr {

struct Adam {
    double lr = 1e-4;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::map<std::string, Tensor> m, v;

    // one update over `active`; gradients are read from Parameter::grad
    void step(const std::vector<Parameter*>& active, double clip_norm) {
        double factor = 1.0;
        if (clip_norm > 0.0) {
            double sq = 0.0;
            for (const Parameter* p : active)
                for (double gv : p->grad.data) sq += gv * gv;
            double norm = std::sqrt(sq);
            if (norm > clip_norm) factor = clip_norm / norm;
        }
        ++t;
        double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (Parameter* p : active) {
            Tensor& mt = moment(m, *p);
            Tensor& vt = moment(v, *p);
            for (size_t i = 0; i < p->value.data.size(); ++i) {
                double gv = p->grad.data[i] * factor;
                mt.data[i] = beta1 * mt.data[i] + (1.0 - beta1) * gv;
                vt.data[i] = beta2 * vt.data[i] + (1.0 - beta2) * gv * gv;
                double mhat = mt.data[i] / c1;
                double vhat = vt.data[i] / c2;
                p->value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

private:
    static Tensor& moment(std::map<std::string, Tensor>& store, const Parameter& p) {
        auto it = store.find(p.name);
        if (it == store.end()) it = store.emplace(p.name, Tensor(p.value.shape)).first;
        check(it->second.same_shape(p.value), "adam: moment shape mismatch for " + p.name);
        return it->second;
    }
};

}  // namespace lvsr
