// Named parameter storage with group tags, used by every trainable module.
#pragma once

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lvsr/tensor.hpp"

namespace lvsr {

struct Parameter {
    std::string name;
    std::string group;  // "backbone" | "seam" | "temporal" | "tsam" | "codec"
    Tensor value;
    Tensor grad;
};

// Owns parameters with stable addresses; iteration order is creation order,
// which fixes optimizer update order and checkpoint layout.
class ParamSet {
public:
    ParamSet() = default;
    // copies would alias the original's storage through order_/by_name_
    ParamSet(const ParamSet&) = delete;
    ParamSet& operator=(const ParamSet&) = delete;
    ParamSet(ParamSet&&) = default;
    ParamSet& operator=(ParamSet&&) = default;

    Parameter& create(const std::string& name, std::vector<int> shape, const std::string& group) {
        check(by_name_.find(name) == by_name_.end(), "duplicate parameter name: " + name);
        store_.emplace_back();
        Parameter& p = store_.back();
        p.name = name;
        p.group = group;
        p.value = Tensor(std::move(shape));
        p.grad = Tensor(p.value.shape);
        order_.push_back(&p);
        by_name_[name] = &p;
        return p;
    }

    Parameter* find(const std::string& name) {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? nullptr : it->second;
    }
    const Parameter* find(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? nullptr : it->second;
    }

    const std::vector<Parameter*>& all() { return order_; }
    std::vector<const Parameter*> all() const {
        return std::vector<const Parameter*>(order_.begin(), order_.end());
    }

    size_t size() const { return order_.size(); }

    std::vector<Parameter*> group(const std::string& g) {
        std::vector<Parameter*> r;
        for (Parameter* p : order_)
            if (p->group == g) r.push_back(p);
        return r;
    }

    std::vector<Parameter*> select(const std::function<bool(const Parameter&)>& pred) {
        std::vector<Parameter*> r;
        for (Parameter* p : order_)
            if (pred(*p)) r.push_back(p);
        return r;
    }

    int64_t count_total() const {
        int64_t n = 0;
        for (const Parameter* p : order_) n += p->value.numel();
        return n;
    }

    int64_t count_group(const std::string& g) const {
        int64_t n = 0;
        for (const Parameter* p : order_)
            if (p->group == g) n += p->value.numel();
        return n;
    }

    void zero_grads() {
        for (Parameter* p : order_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
    }

    uint64_t checksum_group(const std::string& g) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (const Parameter* p : order_)
            if (p->group == g) h = checksum(p->value, h);
        return h;
    }

    uint64_t checksum_where(const std::function<bool(const Parameter&)>& pred) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (const Parameter* p : order_)
            if (pred(*p)) h = checksum(p->value, h);
        return h;
    }

    uint64_t checksum_all() const {
        return checksum_where([](const Parameter&) { return true; });
    }

    // test helper: overwrite every value with N(0, scale^2)
    void randomize(Rng& rng, double scale = 0.2) {
        for (Parameter* p : order_) rng.fill_normal(p->value, scale);
    }

private:
    std::deque<Parameter> store_;
    std::vector<Parameter*> order_;
    std::unordered_map<std::string, Parameter*> by_name_;
};

}  // namespace lvsr
