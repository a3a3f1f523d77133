#include "catnet/wtden/ssm.hpp"

#include <cmath>
#include <stdexcept>

#include "../numerics/ops_internal.hpp"
#include "catnet/numerics/init.hpp"
#include "catnet/numerics/ops.hpp"

namespace catnet::wtden {

using detail::parent_grad;

SsmParams make_ssm_params(ParameterSet& params, const std::string& prefix, std::size_t channels,
                          std::size_t state_dim, std::mt19937_64& rng) {
  if (channels == 0 || state_dim == 0) {
    throw std::invalid_argument("make_ssm_params: channels and state_dim must be positive");
  }
  const std::size_t c = channels, n = state_dim;
  SsmParams p;
  p.state_dim = n;
  p.step_weight = params.add(prefix + ".step.weight", init::scaled_uniform({c, c}, c, rng, 0.1));
  // softplus(-3) ~ 0.05: short initial steps, so states integrate many tokens.
  p.step_bias = params.add(prefix + ".step.bias", Tensor({c}, -3.0));
  p.in_weight = params.add(prefix + ".in.weight", init::scaled_uniform({c, n}, c, rng));
  p.in_bias = params.add(prefix + ".in.bias", Tensor({n}));
  p.out_weight = params.add(prefix + ".out.weight", init::scaled_uniform({c, n}, c, rng));
  p.out_bias = params.add(prefix + ".out.bias", Tensor({n}));
  Tensor dlog({c, n});
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < n; ++j) dlog[i * n + j] = std::log(static_cast<double>(j + 1));
  p.decay_log = params.add(prefix + ".decay_log", dlog);
  p.skip = params.add(prefix + ".skip", Tensor({c}, 1.0));
  return p;
}

Var ssm_recurrence(const Var& x, const Var& step, const Var& decay, const Var& in_gate,
                   const Var& out_gate) {
  const Shape& xs = x.shape();
  detail::require(xs.size() == 2 && xs[0] > 0, [&] { return "ssm_recurrence: x must be non-empty L x C, got " +
                                                  shape_str(xs); });
  const std::size_t len = xs[0], c = xs[1];
  const std::size_t n = decay.shape().size() == 2 ? decay.shape()[1] : 0;
  detail::require(step.shape() == xs && decay.shape() == Shape{c, n} &&
                      in_gate.shape() == Shape{len, n} && out_gate.shape() == Shape{len, n}, [&] { return
                  "ssm_recurrence: inconsistent shapes x " + shape_str(xs) + " step " +
                      shape_str(step.shape()) + " decay " + shape_str(decay.shape()) + " in " +
                      shape_str(in_gate.shape()) + " out " + shape_str(out_gate.shape()); });

  const double* xv = x.value().data().data();
  const double* dv = step.value().data().data();
  const double* av = decay.value().data().data();
  const double* bv = in_gate.value().data().data();
  const double* cv = out_gate.value().data().data();
  // States and per-token decay factors are kept for the backward pass.
  auto states = std::make_shared<std::vector<double>>(len * c * n);
  auto factors = std::make_shared<std::vector<double>>(len * c * n);
  Tensor y({len, c});
  std::vector<double> h(c * n, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t k = 0; k < c; ++k) {
      const double d = dv[t * c + k], u = d * xv[t * c + k];
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t s = k * n + j;
        const double f = std::exp(d * av[s]);
        h[s] = f * h[s] + u * bv[t * n + j];
        acc += cv[t * n + j] * h[s];
        (*states)[t * c * n + s] = h[s];
        (*factors)[t * c * n + s] = f;
      }
      y[t * c + k] = acc;
    }
  }

  return make_result(std::move(y), {x, step, decay, in_gate, out_gate},
                     [len, c, n, states, factors](const Node& node) {
    const double* xv = node.parents[0]->value.data().data();
    const double* dv = node.parents[1]->value.data().data();
    const double* av = node.parents[2]->value.data().data();
    const double* bv = node.parents[3]->value.data().data();
    const double* cv = node.parents[4]->value.data().data();
    const double* gy = node.grad.data().data();
    double* gx = parent_grad(node, 0);
    double* gd = parent_grad(node, 1);
    double* ga = parent_grad(node, 2);
    double* gb = parent_grad(node, 3);
    double* gc = parent_grad(node, 4);
    const std::vector<double>& hs = *states;
    const std::vector<double>& fs = *factors;
    // dh carries dL/dh_t accumulated from later tokens.
    std::vector<double> dh(c * n, 0.0);
    for (std::size_t t = len; t-- > 0;) {
      const std::size_t base = t * c * n;
      for (std::size_t k = 0; k < c; ++k) {
        const double g = gy[t * c + k], d = dv[t * c + k], xk = xv[t * c + k];
        double gdk = 0.0, gxk = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t s = k * n + j;
          const double h = hs[base + s];
          if (gc) gc[t * n + j] += g * h;
          const double dhs = dh[s] + g * cv[t * n + j];
          const double prev = t > 0 ? hs[base - c * n + s] : 0.0;
          const double f = fs[base + s];
          const double dfa = dhs * prev * f;  // d/d(step * A)
          gdk += dfa * av[s] + dhs * bv[t * n + j] * xk;
          if (ga) ga[s] += dfa * d;
          if (gb) gb[t * n + j] += dhs * d * xk;
          gxk += dhs * d * bv[t * n + j];
          dh[s] = dhs * f;
        }
        if (gd) gd[t * c + k] += gdk;
        if (gx) gx[t * c + k] += gxk;
      }
    }
  });
}

Var selective_ssm(const Var& x, const SsmParams& p) {
  const Shape& xs = x.shape();
  if (xs.size() != 2 || xs[0] == 0) {
    throw std::invalid_argument("selective_ssm: expected non-empty L x C sequence, got " +
                                shape_str(xs));
  }
  Var step = softplus(linear(x, p.step_weight, p.step_bias));
  Var in_gate = linear(x, p.in_weight, p.in_bias);
  Var out_gate = linear(x, p.out_weight, p.out_bias);
  Var decay = scale(exp(p.decay_log), -1.0);
  Var y = ssm_recurrence(x, step, decay, in_gate, out_gate);
  return add(y, mul(x, expand(reshape(p.skip, {1, xs[1]}), xs)));
}

ScanSequence selective_ssm(const ScanSequence& seq, const SsmParams& p) {
  return {seq.order, selective_ssm(seq.values, p), seq.band_shape};
}

}  // namespace catnet::wtden
