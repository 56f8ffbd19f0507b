#include "solnoise/covariance.hpp"

#include <cmath>
#include <random>

namespace solnoise {

CovarianceState initial_coherent_covariance(const TimeGrid& grid) {
  CovarianceState st;
  st.z = 0;
  st.P = CMat::Zero(grid.n, grid.n);
  st.Q = CMat::Zero(grid.n, grid.n);
  st.K = CMat::Identity(grid.n, grid.n) / grid.dt;
  return st;
}

double commutator_drift(const CovarianceState& state, double dt) {
  const int n = int(state.K.rows());
  double mx = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      const Complex canon = (j == k) ? Complex(1.0 / dt, 0) : Complex(0, 0);
      mx = std::max(mx, std::abs(state.K(j, k) - canon));
    }
  return mx * dt;
}

double physicality_margin(const CovarianceState& state, double dt) {
  const int n = int(state.P.rows());
  CMat G(2 * n, 2 * n);
  G.topLeftCorner(n, n) = state.P + state.K;
  G.topRightCorner(n, n) = state.Q;
  G.bottomLeftCorner(n, n) = state.Q.conjugate();
  G.bottomRightCorner(n, n) = state.P.transpose();
  G = 0.5 * (G + G.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMat> es(G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() * dt;
}

namespace {

// Circulant F^{-1} diag(r) F / dt built from the inverse transform of r.
CMat circulant_injection(const TimeGrid& g, const RVec& r) {
  Fft fft(g.n);
  CVec rc = r.cast<Complex>();
  CVec c;
  fft.inverse(rc, c);
  c /= g.dt;
  CMat out(g.n, g.n);
  for (int l = 0; l < g.n; ++l)
    for (int j = 0; j < g.n; ++j) out(j, l) = c[(j - l + g.n) % g.n];
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

CovarianceStepper::CovarianceStepper(GridPtr grid, const CgleParams& params, double dz)
    : lin_(grid, params, dz) {
  const auto& g = *lin_.grid();
  const RVec& r = lin_.spectral_defect();
  RVec gain = (-r.array()).cwiseMax(0.0);
  spectral_gain_ = gain.maxCoeff() > 0;
  if (spectral_gain_) {
    P_inj_half_ = circulant_injection(g, gain);
    // The fused full-step injection equals S G S^dag + G of the two halves:
    // per mode (|m|^2-1)(|m|^2+1) = |m_full|^2-1 wherever the mode gains.
    RVec gain_full(g.n);
    for (int k = 0; k < g.n; ++k)
      gain_full[k] = std::max(0.0, std::norm(lin_.full_mult()[k]) - 1.0);
    P_inj_full_ = circulant_injection(g, gain_full);
  }
  const int n = g.n;
  scratch_.resize(n, n);
  newP_.resize(n, n);
  newQ_.resize(n, n);
  newK_.resize(n, n);
}

void CovarianceStepper::apply_spectral_cols(CMat& M, bool full) {
  const int n = int(M.rows());
  const CVec& m = full ? lin_.full_mult() : lin_.half_mult();
  Fft& fft = lin_.fft();
  for (int c = 0; c < n; ++c) {
    col_ = M.col(c);
    fft.forward_inplace(col_);
    col_.array() *= m.array();
    fft.inverse_inplace(col_);
    M.col(c) = col_;
  }
}

void CovarianceStepper::spectral_flow(CMat& P, CMat& Q, CMat& K, bool full) {
  // P <- S P S^dag
  apply_spectral_cols(P, full);
  scratch_ = P.adjoint();
  apply_spectral_cols(scratch_, full);
  P = scratch_.adjoint();
  // Q <- S Q S^T
  apply_spectral_cols(Q, full);
  scratch_ = Q.transpose();
  apply_spectral_cols(scratch_, full);
  Q = scratch_.transpose();
  // K here holds the commutator deviation D; it stays exactly zero under the
  // restored dissipative flow, so skip the transform of a zero matrix.
  if (K.cwiseAbs().maxCoeff() == 0.0) return;
  apply_spectral_cols(K, full);
  scratch_ = K.adjoint();
  apply_spectral_cols(scratch_, full);
  K = scratch_.adjoint();
}

void CovarianceStepper::to_deviation(CovarianceState& state) const {
  // The commutator injection restores the canonical part of K to I/dt exactly
  // by construction, per substep. Propagating the full K instead would seed
  // roundoff into the deviation and let the flow's gain amplify it, so the
  // state is split as K = I/dt + D and only the deviation D is propagated
  // (exactly zero under the restored dissipative flow; the genuine symplectic
  // tangent defect in the conservative limit, where nothing is injected).
  const double inv_dt = 1.0 / lin_.grid()->dt;
  for (int j = 0; j < state.K.rows(); ++j) state.K(j, j) -= inv_dt;
}

void CovarianceStepper::to_canonical(CovarianceState& state) const {
  const double inv_dt = 1.0 / lin_.grid()->dt;
  for (int j = 0; j < state.K.rows(); ++j) state.K(j, j) += inv_dt;
}

void CovarianceStepper::spectral_substep(CovarianceState& state, bool full) {
  spectral_flow(state.P, state.Q, state.K, full);
  if (spectral_gain_) state.P += full ? P_inj_full_ : P_inj_half_;
}

void CovarianceStepper::advance_background(CVec& background, bool full) {
  if (full)
    lin_.full_linear(background);
  else
    lin_.half_linear(background);
}

void CovarianceStepper::step(CovarianceState& state, CVec& background) {
  to_deviation(state);
  spectral_substep(state, false);
  lin_.half_linear(background);
  pointwise_substep(state, background);
  spectral_substep(state, false);
  lin_.half_linear(background);
  to_canonical(state);
  state.z += lin_.dz();
}

void CovarianceStepper::pointwise_substep(CovarianceState& state, CVec& background) {
  const double inv_dt = 1.0 / lin_.grid()->dt;
  const int n = lin_.grid()->n;

  lin_.nonlinear_with_tangent(background, s_, t_);
  const CMat& P = state.P;
  const CMat& Q = state.Q;
  const CMat& D = state.K;
  for (int k = 0; k < n; ++k) {
    const Complex sk = s_[k], tk = t_[k];
    const Complex csk = std::conj(sk), ctk = std::conj(tk);
    for (int j = 0; j < n; ++j) {
      const Complex sj = s_[j], tj = t_[j];
      const double canon = (j == k) ? inv_dt : 0.0; // canonical part of K
      newP_(j, k) = sj * P(j, k) * csk + tj * std::conj(Q(j, k)) * csk +
                    sj * Q(j, k) * ctk + tj * (P(k, j) + D(k, j) + canon) * ctk;
      newQ_(j, k) = sj * sk * Q(j, k) + sj * tk * (P(j, k) + D(j, k) + canon) +
                    tj * sk * P(k, j) + tj * tk * std::conj(Q(j, k));
      newK_(j, k) = sj * D(j, k) * csk - tj * D(k, j) * ctk;
    }
  }
  state.P.swap(newP_);
  state.Q.swap(newQ_);
  state.K.swap(newK_);
  for (int j = 0; j < n; ++j) {
    const double d = std::norm(s_[j]) - std::norm(t_[j]);
    if (lin_.params().conservative()) {
      // Exactly symplectic flow: the O(dz^5) tangent defect is discretization
      // error, monitored through D rather than papered over by injection.
      state.K(j, j) += (d - 1.0) * inv_dt;
    } else if (d > 1.0) {
      // Gain channels additionally feed P at the spontaneous-emission floor;
      // the matching K restoration is implicit in the split representation.
      state.P(j, j) += (d - 1.0) * inv_dt;
    }
  }
}

void propagate_covariance(CovarianceState& state, const Trajectory& traj,
                          const CovarianceObserver& observer, double drift_tol) {
  const auto& g = *traj.grid;
  CovarianceStepper stepper(traj.grid, traj.params, traj.dz);
  CVec background = traj.snapshots.at(0);
  if (observer) observer(state, ComplexField(traj.grid, background));

  // Between snapshots the trailing and leading spectral halves of adjacent
  // steps fuse into one full-step multiplier (identical flow and injection).
  const int n_segments = traj.n_steps / traj.stride;
  if (n_segments > 0) stepper.to_deviation(state);
  for (int seg = 0; seg < n_segments; ++seg) {
    stepper.spectral_substep(state, false);
    if (!traj.frozen) stepper.advance_background(background, false);
    for (int k = 0; k < traj.stride; ++k) {
      const int i = seg * traj.stride + k;
      if (traj.frozen) {
        background = traj.background_at_step(i);
        stepper.advance_background(background, false);
      }
      stepper.pointwise_substep(state, background);
      const bool interior = k + 1 < traj.stride;
      stepper.spectral_substep(state, interior);
      if (!traj.frozen) stepper.advance_background(background, interior);
      state.z += traj.dz;
    }
    const int snap = seg + 1;
    const CVec& stored = traj.snapshots.at(snap);
    if (!traj.frozen) {
      const double mismatch = (background - stored).norm() /
                              std::max(1e-300, stored.norm());
      if (mismatch > 1e-8)
        throw ConsistencyError("covariance background deviates from trajectory at z = " +
                               std::to_string(state.z));
    } else {
      background = stored;
    }
    stepper.to_canonical(state);
    const double drift = commutator_drift(state, g.dt);
    if (drift > drift_tol)
      throw ConsistencyError("commutator drift " + std::to_string(drift) +
                             " exceeds tolerance at z = " + std::to_string(state.z));
    if (observer) observer(state, ComplexField(traj.grid, background));
    if (seg + 1 < n_segments) stepper.to_deviation(state);
  }
}

McEstimate monte_carlo_oracle(const Trajectory& traj, int n_samples,
                              std::uint64_t seed, int n_batches) {
  const auto& g = *traj.grid;
  const int n = g.n;
  const double dt = g.dt;
  if (n_samples < n_batches) n_batches = std::max(1, n_samples);

  LinearizedStepper lin(traj.grid, traj.params, traj.dz);
  // Forward pass caching the pointwise tangent maps of every step.
  std::vector<CVec> s_cache(traj.n_steps), t_cache(traj.n_steps);
  {
    CVec bg = traj.snapshots.at(0);
    for (int i = 0; i < traj.n_steps; ++i) {
      if (traj.frozen) bg = traj.background_at_step(i);
      lin.half_linear(bg);
      lin.nonlinear_with_tangent(bg, s_cache[i], t_cache[i]);
      lin.half_linear(bg);
    }
  }
  // Per-mode std of the fused frequency-domain noise draw of a half substep.
  RVec spec_std(n);
  for (int k = 0; k < n; ++k)
    spec_std[k] = std::sqrt(double(n) * std::abs(lin.spectral_defect()[k]) / (2.0 * dt));
  // Per-step pointwise noise std (zero in the conservative limit, where the
  // tangent defect is pure discretization error).
  std::vector<RVec> pw_std(traj.n_steps, RVec::Zero(n));
  if (!traj.params.conservative())
    for (int i = 0; i < traj.n_steps; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = std::norm(s_cache[i][j]) - std::norm(t_cache[i][j]);
        pw_std[i][j] = std::sqrt(std::abs(1.0 - d) / (2.0 * dt));
      }

  std::vector<CMat> accP(n_batches, CMat::Zero(n, n));
  std::vector<CMat> accQ(n_batches, CMat::Zero(n, n));
  std::vector<int> counts(n_batches, 0);

  Fft fft(n);
  CVec v(n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int idx = 0; idx < n_samples; ++idx) {
    std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ull * (idx + 1))));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto cnormal = [&](double std_dev) {
      return Complex(gauss(rng), gauss(rng)) * (std_dev * inv_sqrt2);
    };
    const double in_std = std::sqrt(1.0 / (2.0 * dt));
    for (int j = 0; j < n; ++j) v[j] = cnormal(in_std);

    for (int i = 0; i < traj.n_steps; ++i) {
      // half linear, noise fused in the frequency domain
      fft.forward_inplace(v);
      for (int k = 0; k < n; ++k) v[k] = v[k] * lin.half_mult()[k] + cnormal(spec_std[k]);
      fft.inverse_inplace(v);
      // pointwise
      for (int j = 0; j < n; ++j) {
        v[j] = s_cache[i][j] * v[j] + t_cache[i][j] * std::conj(v[j]);
        v[j] += cnormal(pw_std[i][j]);
      }
      fft.forward_inplace(v);
      for (int k = 0; k < n; ++k) v[k] = v[k] * lin.half_mult()[k] + cnormal(spec_std[k]);
      fft.inverse_inplace(v);
    }
    const int b = int(std::int64_t(idx) * n_batches / n_samples);
    accP[b].noalias() += v * v.adjoint();
    accQ[b].noalias() += v * v.transpose();
    counts[b]++;
  }

  McEstimate est;
  est.n_samples = n_samples;
  est.seed = seed;
  const CMat half_comm = CMat::Identity(n, n) * (0.5 / dt);
  est.P = CMat::Zero(n, n);
  est.Q = CMat::Zero(n, n);
  for (int b = 0; b < n_batches; ++b) {
    est.P += accP[b];
    est.Q += accQ[b];
    if (counts[b] > 0) {
      est.batch_P.push_back(accP[b] / double(counts[b]) - half_comm);
      est.batch_Q.push_back(accQ[b] / double(counts[b]));
    }
  }
  est.P = est.P / double(n_samples) - half_comm;
  est.Q /= double(n_samples);
  return est;
}

BackpropResult backpropagate_projection(const CVec& f, const Trajectory& traj) {
  const auto& g = *traj.grid;
  const int n = g.n;
  if (int(f.size()) != n)
    throw ConfigError("backpropagate_projection: projection length mismatch");
  const double dt = g.dt;

  LinearizedStepper lin(traj.grid, traj.params, traj.dz);
  std::vector<CVec> s_cache(traj.n_steps), t_cache(traj.n_steps);
  {
    CVec bg = traj.snapshots.at(0);
    for (int i = 0; i < traj.n_steps; ++i) {
      if (traj.frozen) bg = traj.background_at_step(i);
      lin.half_linear(bg);
      lin.nonlinear_with_tangent(bg, s_cache[i], t_cache[i]);
      lin.half_linear(bg);
    }
  }

  Fft fft(n);
  const CVec& m = lin.half_mult();
  const RVec& r = lin.spectral_defect();
  CVec gvec = f.conjugate(); // F = dt (g^T u + conj(g)^T u^dag)
  double noise_acc = 0;
  CVec work(n);

  // |r| is symmetric under w -> -w, so the loss and gain pieces pair with the
  // same spectral weights of g.
  auto spectral_noise_term = [&]() {
    work = gvec.conjugate();
    fft.forward_inplace(work);
    double acc = 0;
    for (int k = 0; k < n; ++k) acc += std::abs(r[k]) * std::norm(work[k]);
    return acc * dt / double(n);
  };
  auto spectral_transpose = [&]() {
    fft.inverse_inplace(gvec);
    gvec.array() *= m.array();
    fft.forward_inplace(gvec);
  };

  for (int i = traj.n_steps - 1; i >= 0; --i) {
    // second half linear substep
    noise_acc += spectral_noise_term();
    spectral_transpose();
    // pointwise substep (no injection in the conservative limit)
    if (!traj.params.conservative())
      for (int j = 0; j < n; ++j) {
        const double d = std::norm(s_cache[i][j]) - std::norm(t_cache[i][j]);
        noise_acc += dt * std::norm(gvec[j]) * std::abs(1.0 - d);
      }
    for (int j = 0; j < n; ++j)
      gvec[j] = s_cache[i][j] * gvec[j] +
                std::conj(t_cache[i][j]) * std::conj(gvec[j]);
    // first half linear substep
    noise_acc += spectral_noise_term();
    spectral_transpose();
  }

  BackpropResult res;
  res.input_contribution = dt * gvec.squaredNorm();
  res.noise_contribution = noise_acc;
  res.total = res.input_contribution + res.noise_contribution;
  return res;
}

}  // namespace solnoise
