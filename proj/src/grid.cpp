#include "solnoise/grid.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace solnoise {

GridPtr make_grid(int n_points, double window) {
  if (n_points < 8)
    throw ConfigError("make_grid: n_points must be >= 8, got " +
                      std::to_string(n_points));
  if (!(window > 0))
    throw ConfigError("make_grid: window must be positive");

  auto g = std::make_shared<TimeGrid>();
  g->n = n_points;
  g->window = window;
  g->dt = window / n_points;
  g->t.resize(n_points);
  g->omega.resize(n_points);
  const double dw = 2.0 * kPi / window;
  for (int j = 0; j < n_points; ++j) {
    g->t[j] = -0.5 * window + j * g->dt;
    const int k = (j <= n_points / 2 - 1) ? j : j - n_points;
    g->omega[j] = dw * k;
  }
  return g;
}

ComplexField::ComplexField(GridPtr g, CVec s) : grid(std::move(g)), samples(std::move(s)) {
  if (!grid) throw ConfigError("ComplexField: null grid");
  if (samples.size() != grid->n)
    throw ConfigError("ComplexField: sample count does not match grid");
}

bool same_grid(const TimeGrid& a, const TimeGrid& b) {
  return a.n == b.n && a.window == b.window;
}

void require_same_grid(const ComplexField& a, const ComplexField& b) {
  if (!a.grid || !b.grid || !same_grid(*a.grid, *b.grid))
    throw ConfigError("fields live on different grids");
}

Fft::Fft(int n) : n_(n), scratch_(n) {}

void Fft::forward(const CVec& in, CVec& out) {
  out.resize(n_);
  impl_.fwd(out, in);
}

void Fft::inverse(const CVec& in, CVec& out) {
  out.resize(n_);
  impl_.inv(out, in);
}

void Fft::forward_inplace(CVec& x) {
  impl_.fwd(scratch_, x);
  x.swap(scratch_);
}

void Fft::inverse_inplace(CVec& x) {
  impl_.inv(scratch_, x);
  x.swap(scratch_);
}

ComplexField to_spectrum(const ComplexField& field) {
  Fft fft(field.grid->n);
  CVec spec;
  fft.forward(field.samples, spec);
  spec /= std::sqrt(double(field.grid->n));
  return ComplexField(field.grid, std::move(spec));
}

ComplexField from_spectrum(const ComplexField& spec) {
  Fft fft(spec.grid->n);
  CVec samples;
  fft.inverse(spec.samples, samples);
  samples *= std::sqrt(double(spec.grid->n));
  return ComplexField(spec.grid, std::move(samples));
}

double energy(const CVec& samples, double dt) { return samples.squaredNorm() * dt; }

double energy(const ComplexField& field) {
  return energy(field.samples, field.grid->dt);
}

double momentum(const ComplexField& field) {
  Fft fft(field.grid->n);
  CVec spec;
  fft.forward(field.samples, spec);
  // sum Im(conj(U) U_t) dt = (1/N) sum omega |spec|^2 * dt  (Parseval)
  double acc = 0;
  for (int k = 0; k < field.grid->n; ++k)
    acc += field.grid->omega[k] * std::norm(spec[k]);
  return acc * field.grid->dt / field.grid->n;
}

void shift_samples(Fft& fft, const RVec& omega, double tau, CVec& samples) {
  fft.forward_inplace(samples);
  for (int k = 0; k < samples.size(); ++k)
    samples[k] *= std::exp(Complex(0, -omega[k] * tau));
  fft.inverse_inplace(samples);
}

ComplexField shift_field(const ComplexField& field, double tau) {
  Fft fft(field.grid->n);
  CVec s = field.samples;
  shift_samples(fft, field.grid->omega, tau, s);
  return ComplexField(field.grid, std::move(s));
}

void save_field(std::ostream& os, const ComplexField& field) {
  os << "# t re im\n";
  char buf[96];
  for (int j = 0; j < field.grid->n; ++j) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", field.grid->t[j],
                  field.samples[j].real(), field.samples[j].imag());
    os << buf;
  }
}

ComplexField load_field(std::istream& is) {
  std::string line;
  std::vector<double> t, re, im;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double a, b, c;
    if (!(ss >> a >> b >> c)) throw ConfigError("load_field: bad row: " + line);
    t.push_back(a); re.push_back(b); im.push_back(c);
  }
  const int n = int(t.size());
  if (n < 8) throw ConfigError("load_field: too few samples");
  const double dt = t[1] - t[0];
  auto grid = make_grid(n, dt * n);
  CVec s(n);
  for (int j = 0; j < n; ++j) s[j] = Complex(re[j], im[j]);
  return ComplexField(grid, std::move(s));
}

}  // namespace solnoise
