#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ddpgpp/nn.hpp"
#include "ddpgpp/rng.hpp"

namespace ddpgpp {

// One experience tuple. `terminal` means the episode ended at x_next by
// failure or goal; hitting the step limit records terminal=false so that
// bootstrapping continues across the truncation.
struct Transition {
  Vector x;
  Vector u;
  double r = 0.0;
  Vector x_next;
  bool terminal = false;
};

// Bounded FIFO store of transitions with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(int64_t capacity, int state_dim, int control_dim);

  void push(const Transition& t);
  std::vector<Transition> sample(int batch_size, Rng& rng) const;

  int64_t size() const { return count_; }
  int64_t capacity() const { return capacity_; }
  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }

  // i = 0 is the oldest stored transition.
  const Transition& at(int64_t i) const;

  // One transition per row: x..., u..., r, x_next..., terminal.
  void dump_csv(std::ostream& os) const;

 private:
  int64_t capacity_;
  int state_dim_;
  int control_dim_;
  std::vector<Transition> storage_;
  int64_t next_ = 0;
  int64_t count_ = 0;
};

}  // namespace ddpgpp
