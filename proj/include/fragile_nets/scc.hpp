#pragma once

#include <vector>

namespace fragile_nets {

// Tarjan strongly connected components over a dense 0/1 adjacency.
// Components come out in reverse topological order (successors first);
// members of each component are sorted ascending.
class SccFinder {
 public:
  explicit SccFinder(const std::vector<std::vector<int>>& adj)
      : adj_(adj),
        n_(static_cast<int>(adj.size())),
        index_(n_, -1),
        low_(n_, 0),
        on_stack_(n_, 0) {
    for (int v = 0; v < n_; ++v)
      if (index_[v] < 0) strongconnect(v);
    for (auto& comp : components_) {
      for (std::size_t i = 1; i < comp.size(); ++i) {
        int key = comp[i];
        std::size_t j = i;
        while (j > 0 && comp[j - 1] > key) {
          comp[j] = comp[j - 1];
          --j;
        }
        comp[j] = key;
      }
    }
  }

  const std::vector<std::vector<int>>& components() const { return components_; }

  // Maps vertex -> index into components().
  std::vector<int> component_of() const {
    std::vector<int> owner(n_, -1);
    for (std::size_t c = 0; c < components_.size(); ++c)
      for (int v : components_[c]) owner[v] = static_cast<int>(c);
    return owner;
  }

 private:
  void strongconnect(int v) {
    index_[v] = low_[v] = counter_++;
    stack_.push_back(v);
    on_stack_[v] = 1;
    for (int w = 0; w < n_; ++w) {
      if (!adj_[v][w]) continue;
      if (index_[w] < 0) {
        strongconnect(w);
        low_[v] = std::min(low_[v], low_[w]);
      } else if (on_stack_[w]) {
        low_[v] = std::min(low_[v], index_[w]);
      }
    }
    if (low_[v] == index_[v]) {
      std::vector<int> comp;
      int w;
      do {
        w = stack_.back();
        stack_.pop_back();
        on_stack_[w] = 0;
        comp.push_back(w);
      } while (w != v);
      components_.push_back(std::move(comp));
    }
  }

  const std::vector<std::vector<int>>& adj_;
  int n_;
  int counter_ = 0;
  std::vector<int> index_, low_;
  std::vector<char> on_stack_;
  std::vector<int> stack_;
  std::vector<std::vector<int>> components_;
};

// True when the component is genuinely cyclic: more than one member, or a
// single member with a self-edge.
inline bool component_has_cycle(const std::vector<int>& comp,
                                const std::vector<std::vector<int>>& adj) {
  if (comp.size() > 1) return true;
  int v = comp[0];
  return adj[v][v] != 0;
}

}  // namespace fragile_nets
