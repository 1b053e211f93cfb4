#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "decmarl/rng.hpp"
#include "decmarl/types.hpp"

namespace decmarl {

// Dense MLP with ReLU hidden layers and identity output. Parameters live in
// one flat vector (per layer: weight matrix row-major out x in, then bias),
// so Adam, soft updates, and parameter averaging all work on plain spans.
//
// Forward multiplies through a transposed weight cache so the inner loops are
// saxpy-shaped (no floating-point reductions) and auto-vectorize cleanly.
class Mlp {
 public:
  explicit Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw ConfigError("mlp needs at least one layer");
    for (int d : dims_)
      if (d <= 0) throw ConfigError("mlp layer sizes must be positive");
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      w_off_.push_back(off);
      off += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
      b_off_.push_back(off);
      off += dims_[l + 1];
    }
    params_.assign(off, 0.0);
    wt_.resize(num_layers());
    for (std::size_t l = 0; l < num_layers(); ++l)
      wt_[l].assign(static_cast<std::size_t>(dims_[l]) * dims_[l + 1], 0.0);
  }

  const std::vector<int>& dims() const { return dims_; }
  std::size_t num_layers() const { return dims_.size() - 1; }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::size_t num_params() const { return params_.size(); }

  std::span<const double> params() const { return params_; }
  std::span<double> params_mut() {
    wt_dirty_ = true;
    return params_;
  }
  void set_params(std::span<const double> p) {
    if (p.size() != params_.size()) throw ConfigError("parameter size mismatch");
    std::copy(p.begin(), p.end(), params_.begin());
    wt_dirty_ = true;
  }

  const double* weight(std::size_t layer) const { return params_.data() + w_off_[layer]; }
  const double* bias(std::size_t layer) const { return params_.data() + b_off_[layer]; }
  std::size_t weight_offset(std::size_t layer) const { return w_off_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return b_off_[layer]; }

  void init(Rng& rng) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const double limit = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
      double* w = params_.data() + w_off_[l];
      const std::size_t wn = static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
      for (std::size_t i = 0; i < wn; ++i) w[i] = next_uniform(rng, -limit, limit);
      double* b = params_.data() + b_off_[l];
      for (int i = 0; i < dims_[l + 1]; ++i) b[i] = next_uniform(rng, -limit, limit);
    }
    wt_dirty_ = true;
  }

  // Post-activation outputs per layer; acts.back() is the network output.
  struct Workspace {
    int batch = 0;
    std::vector<std::vector<double>> acts;
  };

  void forward(const double* x, int batch, Workspace& ws) const {
    sync_transposed();
    ws.batch = batch;
    ws.acts.resize(num_layers());
    const double* in = x;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const int ni = dims_[l];
      const int no = dims_[l + 1];
      auto& out = ws.acts[l];
      out.assign(static_cast<std::size_t>(batch) * no, 0.0);
      const double* b = bias(l);
      const double* wt = wt_[l].data();
      for (int r = 0; r < batch; ++r) {
        const double* xr = in + static_cast<std::size_t>(r) * ni;
        double* yr = out.data() + static_cast<std::size_t>(r) * no;
        for (int o = 0; o < no; ++o) yr[o] = b[o];
        for (int i = 0; i < ni; ++i) {
          const double xi = xr[i];
          const double* wrow = wt + static_cast<std::size_t>(i) * no;
          for (int o = 0; o < no; ++o) yr[o] += xi * wrow[o];
        }
      }
      if (l + 1 < num_layers())
        for (double& v : out)
          if (v < 0.0) v = 0.0;
      in = out.data();
    }
  }

  std::vector<double> forward(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(input_size()))
      throw ConfigError("mlp input size mismatch");
    Workspace ws;
    forward(x.data(), 1, ws);
    return ws.acts.back();
  }

  // Reverse-mode gradients for the flat parameter vector. `grad` must hold
  // num_params() entries and is overwritten. When dx is non-null it receives
  // d(loss)/d(input), batch x input_size.
  void backward(const double* x, int batch, const Workspace& ws,
                const double* dout, double* grad, double* dx = nullptr) const {
    const std::size_t layers = num_layers();
    std::fill(grad, grad + num_params(), 0.0);
    std::vector<double> cur(dout, dout + static_cast<std::size_t>(batch) * dims_.back());
    std::vector<double> nxt;
    for (std::size_t l = layers; l-- > 0;) {
      const int ni = dims_[l];
      const int no = dims_[l + 1];
      const double* in = (l == 0) ? x : ws.acts[l - 1].data();
      double* gw = grad + w_off_[l];
      double* gb = grad + b_off_[l];
      const double* w = weight(l);
      for (int r = 0; r < batch; ++r) {
        const double* dr = cur.data() + static_cast<std::size_t>(r) * no;
        const double* xr = in + static_cast<std::size_t>(r) * ni;
        for (int o = 0; o < no; ++o) {
          const double d = dr[o];
          gb[o] += d;
          double* gwrow = gw + static_cast<std::size_t>(o) * ni;
          for (int i = 0; i < ni; ++i) gwrow[i] += d * xr[i];
        }
      }
      const bool need_dx = l > 0 || dx != nullptr;
      if (!need_dx) break;
      nxt.assign(static_cast<std::size_t>(batch) * ni, 0.0);
      for (int r = 0; r < batch; ++r) {
        const double* dr = cur.data() + static_cast<std::size_t>(r) * no;
        double* tr = nxt.data() + static_cast<std::size_t>(r) * ni;
        for (int o = 0; o < no; ++o) {
          const double d = dr[o];
          const double* wrow = w + static_cast<std::size_t>(o) * ni;
          for (int i = 0; i < ni; ++i) tr[i] += d * wrow[i];
        }
      }
      if (l > 0) {
        const double* act = ws.acts[l - 1].data();
        for (std::size_t i = 0; i < nxt.size(); ++i)
          if (act[i] <= 0.0) nxt[i] = 0.0;
      }
      cur.swap(nxt);
    }
    if (dx != nullptr)
      std::copy(cur.begin(), cur.end(),
                dx);
  }

 private:
  void sync_transposed() const {
    if (!wt_dirty_) return;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const int ni = dims_[l];
      const int no = dims_[l + 1];
      const double* w = weight(l);
      double* t = wt_[l].data();
      for (int o = 0; o < no; ++o)
        for (int i = 0; i < ni; ++i)
          t[static_cast<std::size_t>(i) * no + o] = w[static_cast<std::size_t>(o) * ni + i];
    }
    wt_dirty_ = false;
  }

  std::vector<int> dims_;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_;
  std::vector<std::size_t> b_off_;
  mutable std::vector<std::vector<double>> wt_;
  mutable bool wt_dirty_ = true;
};

// Bias-corrected Adam over a flat parameter vector.
class Adam {
 public:
  Adam(double lr, std::size_t n) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  double learning_rate() const { return lr_; }
  long step_count() const { return t_; }

  void reset() {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
    t_ = 0;
  }

  void step(std::span<double> p, std::span<const double> g) {
    if (p.size() != m_.size() || g.size() != m_.size())
      throw ConfigError("adam shape mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i] * g[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      p[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  double lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

inline void soft_update(std::span<double> target, std::span<const double> online,
                        double tau) {
  if (target.size() != online.size()) throw ConfigError("soft_update shape mismatch");
  if (tau < 0.0 || tau > 1.0) throw ConfigError("tau must lie in [0,1]");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = (1.0 - tau) * target[i] + tau * online[i];
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

struct Transition {
  std::vector<double> x;
  int action = 0;
  double reward = 0.0;
  std::vector<double> x_next;
  bool done = false;
};

// Ring buffer; overwrites oldest once full. Sampling is uniform with
// replacement from the buffer's own RNG stream.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed)
      : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }
  bool ready(std::size_t batch) const { return data_.size() >= batch; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  // Indices of a uniformly drawn batch; false when under-filled.
  bool sample(std::size_t batch, std::vector<std::size_t>& out) {
    if (!ready(batch)) return false;
    out.resize(batch);
    for (std::size_t i = 0; i < batch; ++i)
      out[i] = static_cast<std::size_t>(next_below(rng_, data_.size()));
    return true;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

// Flat CSV with a shape header, round-trips exactly via %.17g.
inline void save_params(const Mlp& net, std::ostream& out) {
  out << "dims";
  for (int d : net.dims()) out << ',' << d;
  out << '\n';
  char buf[40];
  for (double v : net.params()) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << '\n';
  }
}

inline void load_params(Mlp& net, std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("parameter file is empty");
  std::istringstream header(line);
  std::string tag;
  std::getline(header, tag, ',');
  if (tag != "dims") throw ConfigError("parameter file missing shape header");
  std::vector<int> dims;
  while (std::getline(header, tag, ',')) dims.push_back(std::stoi(tag));
  if (dims != net.dims()) throw ConfigError("parameter shape mismatch");
  std::vector<double> p;
  p.reserve(net.num_params());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    p.push_back(std::stod(line));
  }
  if (p.size() != net.num_params()) throw ConfigError("parameter count mismatch");
  net.set_params(p);
}

}  // namespace decmarl
