#include "ddpgpp/replay.hpp"

#include <ostream>
#include <stdexcept>

namespace ddpgpp {

ReplayBuffer::ReplayBuffer(int64_t capacity, int state_dim, int control_dim)
    : capacity_(capacity), state_dim_(state_dim), control_dim_(control_dim) {
  if (capacity <= 0) throw std::invalid_argument("replay capacity must be positive");
  if (state_dim <= 0 || control_dim <= 0)
    throw std::invalid_argument("replay dims must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (static_cast<int>(t.x.size()) != state_dim_ ||
      static_cast<int>(t.x_next.size()) != state_dim_)
    throw std::invalid_argument("push: state dim mismatch");
  if (static_cast<int>(t.u.size()) != control_dim_)
    throw std::invalid_argument("push: control dim mismatch");
  if (count_ < capacity_) {
    storage_.push_back(t);
    ++count_;
  } else {
    storage_[static_cast<size_t>(next_)] = t;
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(int batch_size, Rng& rng) const {
  if (count_ == 0) throw std::invalid_argument("sample: buffer is empty");
  if (batch_size < 1) throw std::invalid_argument("sample: batch_size must be >= 1");
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i)
    batch.push_back(storage_[static_cast<size_t>(rng.uniform_int(count_))]);
  return batch;
}

const Transition& ReplayBuffer::at(int64_t i) const {
  if (i < 0 || i >= count_) throw std::invalid_argument("at: index out of range");
  // Before wrap-around next_ == count_ % capacity_, so this is oldest-first
  // in both phases.
  const int64_t idx = count_ < capacity_ ? i : (next_ + i) % capacity_;
  return storage_[static_cast<size_t>(idx)];
}

void ReplayBuffer::dump_csv(std::ostream& os) const {
  for (int i = 0; i < state_dim_; ++i) os << 'x' << i << ',';
  for (int i = 0; i < control_dim_; ++i) os << 'u' << i << ',';
  os << "r,";
  for (int i = 0; i < state_dim_; ++i) os << "x_next" << i << ',';
  os << "terminal\n";
  os.precision(17);
  for (int64_t i = 0; i < count_; ++i) {
    const Transition& t = at(i);
    for (double v : t.x) os << v << ',';
    for (double v : t.u) os << v << ',';
    os << t.r << ',';
    for (double v : t.x_next) os << v << ',';
    os << (t.terminal ? 1 : 0) << '\n';
  }
}

}  // namespace ddpgpp
