#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "catnet/wtden/scan.hpp"

namespace catnet::wtden {

// Input-conditioned diagonal recurrence, per token x_t (a row of C values):
//   step_t = softplus(x_t Ws + bs)            C
//   in_t   = x_t Wi + bi,  out_t = x_t Wo + bo  N
//   h_t[c,n] = exp(step_t[c] * A[c,n]) h_{t-1}[c,n] + step_t[c] in_t[n] x_t[c]
//   y_t[c]   = sum_n out_t[n] h_t[c,n] + skip[c] x_t[c]
// with A = -exp(decay_log) so decays stay strictly negative.
struct SsmParams {
  std::size_t state_dim = 0;
  Var step_weight, step_bias;  // C x C, C
  Var in_weight, in_bias;      // C x N, N
  Var out_weight, out_bias;    // C x N, N
  Var decay_log;               // C x N
  Var skip;                    // C
};

// Registers parameters under `prefix`. Decays start at -1, -2, ..., -N.
SsmParams make_ssm_params(ParameterSet& params, const std::string& prefix, std::size_t channels,
                          std::size_t state_dim, std::mt19937_64& rng);

// x: L x C -> L x C.
Var selective_ssm(const Var& x, const SsmParams& p);
ScanSequence selective_ssm(const ScanSequence& seq, const SsmParams& p);

// The recurrence core with precomputed projections; y excludes the skip term.
// x, step: L x C; decay: C x N; in_gate, out_gate: L x N.
Var ssm_recurrence(const Var& x, const Var& step, const Var& decay, const Var& in_gate,
                   const Var& out_gate);

}  // namespace catnet::wtden
