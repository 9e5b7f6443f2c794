#pragma once

// Minimal reverse-mode tape over TensorT. A Graph is built per forward pass;
// nodes hold the value, a lazily allocated gradient, and a backward closure
// that scatters the node's gradient into its parents. Parameters live outside
// the tape in a ParamStore and receive gradients through leaf closures.

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "spjf/tensor.hpp"

namespace spjf {

template <class T>
struct ParamStore {
    struct Entry {
        std::string name;
        TensorT<T> value, grad, m, v;  // m, v: Adam moments
    };
    std::vector<Entry> entries;

    int add(const std::string& name, TensorT<T> init) {
        Entry e;
        e.name = name;
        e.grad = init;
        e.grad.fill(0);
        e.m = e.grad;
        e.v = e.grad;
        e.value = std::move(init);
        entries.push_back(std::move(e));
        return int(entries.size()) - 1;
    }
    Entry& operator[](int id) { return entries[size_t(id)]; }
    const Entry& operator[](int id) const { return entries[size_t(id)]; }

    void zero_grad() {
        for (auto& e : entries) e.grad.fill(0);
    }
    size_t scalar_count() const {
        size_t n = 0;
        for (auto& e : entries) n += e.value.size();
        return n;
    }
    // per top-level prefix (text before the first '.')
    std::map<std::string, size_t> count_by_module() const {
        std::map<std::string, size_t> out;
        for (auto& e : entries) {
            auto dot = e.name.find('.');
            out[e.name.substr(0, dot)] += e.value.size();
        }
        return out;
    }
    bool all_finite() const {
        for (auto& e : entries)
            if (!e.value.all_finite()) return false;
        return true;
    }
    int find(const std::string& name) const {
        for (size_t i = 0; i < entries.size(); ++i)
            if (entries[i].name == name) return int(i);
        return -1;
    }
};

template <class T>
class Graph {
  public:
    using Back = std::function<void(Graph&, int)>;

    int add_node(TensorT<T> val, bool needs_grad, Back back = nullptr) {
        nodes_.push_back(Node{std::move(val), TensorT<T>(), std::move(back), needs_grad, false});
        return int(nodes_.size()) - 1;
    }
    int leaf(TensorT<T> val, bool needs_grad = false) {
        return add_node(std::move(val), needs_grad);
    }
    int param(ParamStore<T>& store, int pid) {
        int id = add_node(store[pid].value, true, [&store, pid](Graph& g, int self) {
            auto& pg = store[pid].grad;
            const auto& sg = g.grad_of(self);
            for (size_t i = 0; i < pg.v.size(); ++i) pg.v[i] += sg.v[i];
        });
        return id;
    }

    const TensorT<T>& val(int id) const { return nodes_[size_t(id)].val; }
    bool needs(int id) const { return nodes_[size_t(id)].needs; }

    // Accumulation target; allocates a zero tensor on first touch.
    TensorT<T>& grad_acc(int id) {
        Node& nd = nodes_[size_t(id)];
        if (!nd.grad_live) {
            nd.grad = nd.val;
            nd.grad.fill(0);
            nd.grad_live = true;
        }
        return nd.grad;
    }
    const TensorT<T>& grad_of(int id) const { return nodes_[size_t(id)].grad; }
    bool grad_live(int id) const { return nodes_[size_t(id)].grad_live; }

    void backward(int loss_id) {
        if (val(loss_id).size() != 1)
            throw std::invalid_argument("backward: loss must be a scalar node");
        grad_acc(loss_id).v[0] = T(1);
        for (int id = loss_id; id >= 0; --id) {
            Node& nd = nodes_[size_t(id)];
            if (nd.needs && nd.grad_live && nd.back) nd.back(*this, id);
        }
    }

    size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        TensorT<T> val;
        TensorT<T> grad;
        Back back;
        bool needs;
        bool grad_live;
    };
    std::vector<Node> nodes_;
};

}  // namespace spjf
