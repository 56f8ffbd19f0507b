#include <doctest.h>

#include <cmath>
#include <sstream>

#include "solnoise/experiment.hpp"
#include "solnoise/observables.hpp"

using namespace solnoise;

namespace {
const CgleParams kFig1{1.0, -0.01, 1.8, 0.5, -0.05, 0.0};
}

TEST_CASE("partition tiles the bright region and aligns to the split") {
  auto g = make_grid(256, 40.0);
  auto U0 = sech_seed(g, 1.5);
  auto part = make_partition(U0, 0.3, 0.0, 1e-6);
  REQUIRE(part.n_slots >= 2);
  CHECK(int(part.boundaries.size()) == part.n_slots + 1);
  // the split time is one of the boundaries
  bool found = false;
  for (double b : part.boundaries)
    if (std::abs(b - 0.0) < 1e-12) found = true;
  CHECK(found);
  // every boundary step is one slot width
  for (int i = 0; i < part.n_slots; ++i)
    CHECK(part.boundaries[i + 1] - part.boundaries[i] ==
          doctest::Approx(0.3).epsilon(1e-12));
  // samples map into the slot containing them
  for (int j = 0; j < g->n; ++j) {
    const int s = part.slot_of[j];
    if (s < 0) continue;
    CHECK(g->t[j] >= part.boundaries[s] - 1e-12);
    CHECK(g->t[j] < part.boundaries[s + 1] + 1e-12);
    CHECK(part.slot_left_of_split(s) == (part.centers[s] < 0.0));
  }
  // floor = 0 tiles the whole window
  auto full = make_partition(U0, 0.5, 0.0, 0.0);
  int covered = 0;
  for (int j = 0; j < g->n; ++j)
    if (full.slot_of[j] >= 0) covered++;
  CHECK(covered >= g->n - 2); // at most edge samples excluded by alignment
  CHECK_THROWS_AS(make_partition(U0, 0.0, 0.0, 0.0), ConfigError);
}

TEST_CASE("projections: slots and halves add up to the total") {
  auto g = make_grid(128, 30.0);
  auto U0 = sech_seed(g, 1.3);
  const CVec tot = total_projection(U0);
  const CVec s1 = soliton_projection(U0, 0.0, 1);
  const CVec s2 = soliton_projection(U0, 0.0, 2);
  CHECK((s1 + s2 - tot).norm() == 0.0);
  auto part = make_partition(U0, 0.4, 0.0, 0.0);
  CVec sum = CVec::Zero(g->n);
  for (int s = 0; s < part.n_slots; ++s) sum += slot_projection(U0, s, part);
  // slot sum equals the total on covered samples
  for (int j = 0; j < g->n; ++j)
    if (part.slot_of[j] >= 0) CHECK(std::abs(sum[j] - tot[j]) == 0.0);
}

TEST_CASE("covariance forms are bilinear and consistent") {
  auto g = make_grid(32, 12.0);
  auto traj = propagate(sech_seed(g, 1.4), kFig1, 0.2, 1e-3, 40);
  auto st = initial_coherent_covariance(*g);
  propagate_covariance(st, traj);
  const ComplexField fin = traj.field_at(int(traj.snapshots.size()) - 1);
  const CVec f1 = soliton_projection(fin, 0.0, 1);
  const CVec f2 = soliton_projection(fin, 0.0, 2);
  const CVec tot = total_projection(fin);
  const double dt = g->dt;
  // additivity: Var(N1 + N2) = Var(N1) + Var(N2) + 2 Cov(N1, N2)
  const double lhs = unordered_covariance(st, tot, tot, dt);
  const double rhs = unordered_covariance(st, f1, f1, dt) +
                     unordered_covariance(st, f2, f2, dt) +
                     2.0 * unordered_covariance(st, f1, f2, dt);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  // symmetry
  CHECK(unordered_covariance(st, f1, f2, dt) ==
        doctest::Approx(unordered_covariance(st, f2, f1, dt)).epsilon(1e-12));
  // shot term vanishes on disjoint supports, equals mean photons on the total
  // bounded by the residual commutator roundoff, not exactly zero
  CHECK(std::abs(shot_term(st, f1, f2, dt)) < 1e-9);
  CHECK(shot_term(st, tot, tot, dt) == doctest::Approx(energy(fin)).epsilon(1e-10));
}

TEST_CASE("coherent state: C12 = 0, eta = 0, Fano = 1") {
  auto g = make_grid(64, 20.0);
  auto U0 = sech_seed(g, 1.5);
  auto st = initial_coherent_covariance(*g);
  auto r = c12(st, U0, 0.0);
  CHECK(r.mixed == 0.0);
  CHECK(r.numerator == 0.0);
  CHECK(r.var1 > 0);
  auto tn = total_photon_noise(st, U0);
  CHECK(tn.fano == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(tn.variance_unordered == doctest::Approx(energy(U0)).epsilon(1e-12));
  auto part = make_partition(U0, 0.5, 0.0, 1e-6);
  auto eta = eta_matrix(st, U0, part);
  CHECK(eta.mixed.cwiseAbs().maxCoeff() == 0.0);
  CHECK(cross_block_mean(eta) == 0.0);
}

TEST_CASE("eta matrix: diagonal of the normal variant is 1, |eta| <= 1") {
  auto g = make_grid(64, 20.0);
  auto traj = propagate(sech_seed(g, 1.5), kFig1, 0.2, 1e-3, 40);
  auto st = initial_coherent_covariance(*g);
  propagate_covariance(st, traj);
  const ComplexField fin = traj.field_at(int(traj.snapshots.size()) - 1);
  auto part = make_partition(fin, 0.5, 0.0, 1e-6);
  auto eta = eta_matrix(st, fin, part);
  const int m = part.n_slots;
  for (int i = 0; i < m; ++i) {
    if (eta.zero_variance[i]) continue;
    CHECK(eta.normal(i, i) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eta.mixed(i, i) <= 1.0 + 1e-12);
    CHECK(eta.mixed(i, i) >= 0.0);
    for (int j = 0; j < m; ++j) {
      CHECK(std::abs(eta.normal(i, j)) <= 1.0 + 1e-10); // Cauchy-Schwarz
      CHECK(eta.mixed(i, j) == doctest::Approx(eta.mixed(j, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("eta of a flat background is Toeplitz (translation invariance)") {
  // Flat field, slot width an exact multiple of dt: every slot holds the same
  // number of samples and slots are exact translates, so eta(i, j) can depend
  // on i - j only (away from the periodic wrap at the window edges).
  auto g = make_grid(64, 20.0); // dt = 0.3125
  ComplexField flat(g, CVec::Constant(64, Complex(0.8, 0)));
  auto traj = propagate(flat, kFig1, 0.1, 1e-3, 20);
  auto st = initial_coherent_covariance(*g);
  propagate_covariance(st, traj);
  const ComplexField fin = traj.field_at(int(traj.snapshots.size()) - 1);
  auto part = make_partition(fin, 0.625, 0.0, 0.0); // 2 samples per slot
  auto eta = eta_matrix(st, fin, part);
  const int m = part.n_slots;
  REQUIRE(m == 32);
  for (int i = 4; i < m - 5; ++i)
    for (int j = 4; j < m - 5; ++j)
      CHECK(eta.mixed(i, j) ==
            doctest::Approx(eta.mixed(i + 1, j + 1)).epsilon(1e-8));
}

TEST_CASE("refining the slot width preserves block sums of the covariance") {
  auto g = make_grid(64, 20.0);
  auto traj = propagate(sech_seed(g, 1.5), kFig1, 0.1, 1e-3, 20);
  auto st = initial_coherent_covariance(*g);
  propagate_covariance(st, traj);
  const ComplexField fin = traj.field_at(int(traj.snapshots.size()) - 1);
  const double dt = g->dt;
  // sum of all slot-pair covariances equals the covered-region variance,
  // independent of the tiling width
  auto block_sum = [&](double width) {
    auto part = make_partition(fin, width, 0.0, 0.0);
    double acc = 0;
    for (int i = 0; i < part.n_slots; ++i)
      for (int j = 0; j < part.n_slots; ++j)
        acc += unordered_covariance(st, slot_projection(fin, i, part),
                                    slot_projection(fin, j, part), dt);
    return acc;
  };
  const double a = block_sum(0.5);
  const double b = block_sum(0.25);
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("CSV schemas") {
  ObservableSeries s;
  s.label = "in_phase";
  s.has_c12 = true;
  ObservableRecord r;
  r.z = 0.5;
  r.c12_mixed = 0.25;
  r.c12_normal = 0.5;
  r.noise_normal = 1.5;
  r.noise_unordered = 2.5;
  r.fano = 1.75;
  r.mean_photons = 2.0;
  s.records.push_back(r);
  ObservableSeries single = s;
  single.label = "single";
  single.has_c12 = false;

  std::ostringstream c12os;
  write_c12_csv(c12os, {s, single});
  std::istringstream c12in(c12os.str());
  std::string line;
  std::getline(c12in, line);
  CHECK(line == "z,label,c12,c12_normal");
  std::getline(c12in, line);
  CHECK(line == "0.5,in_phase,0.25,0.5");
  CHECK(!std::getline(c12in, line)); // single has no C12 rows

  std::ostringstream tnos;
  write_total_noise_csv(tnos, {single});
  std::istringstream tnin(tnos.str());
  std::getline(tnin, line);
  CHECK(line == "z,label,variance,fano,variance_unordered,mean_photons");
  std::getline(tnin, line);
  CHECK(line == "0.5,single,1.5,1.75,2.5,2");

  EtaMatrix eta;
  eta.centers = {-0.25, 0.25}; // exactly representable: full-precision output
  eta.zero_variance = {false, false};
  eta.mixed = RMat::Zero(2, 2);
  eta.mixed << 1.0, -0.5, -0.5, 1.0;
  eta.normal = eta.mixed;
  std::ostringstream eos;
  write_eta_csv(eos, eta);
  std::istringstream ein(eos.str());
  std::getline(ein, line);
  CHECK(line == "t_i\\t_j,-0.25,0.25");
  std::getline(ein, line);
  CHECK(line == "-0.25,1,-0.5");
  std::getline(ein, line);
  CHECK(line == "0.25,-0.5,1");
}

TEST_CASE("degenerate inputs are flagged") {
  auto g = make_grid(64, 20.0);
  auto st = initial_coherent_covariance(*g);
  // all-zero background: no variance anywhere -> c12 refuses
  ComplexField zero(g, CVec::Zero(64));
  CHECK_THROWS_AS(c12(st, zero, 0.0), MeasurementError);
  // slots without support are flagged, not divided by zero
  auto U0 = sech_seed(g, 1.5);
  auto part = make_partition(U0, 0.5, 0.0, 0.0); // tiles the dark region too
  auto traj = propagate(U0, kFig1, 0.05, 1e-3, 10);
  auto st2 = initial_coherent_covariance(*g);
  propagate_covariance(st2, traj);
  const ComplexField fin = traj.field_at(int(traj.snapshots.size()) - 1);
  ComplexField masked = fin;
  // kill the projection weight in the outermost slots
  for (int j = 0; j < g->n; ++j)
    if (part.slot_of[j] == 0) masked.samples[j] = 0;
  auto eta = eta_matrix(st2, masked, part);
  CHECK(eta.zero_variance[0]);
  CHECK(eta.mixed.row(0).cwiseAbs().maxCoeff() == 0.0);
}
