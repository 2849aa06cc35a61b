#include "sagnac/state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sagnac {

namespace {

constexpr Scalar kNormTol = 1e-12;
constexpr Scalar kHermTol = 1e-10;
constexpr Scalar kTraceTol = 1e-10;
constexpr Scalar kPsdTol = -1e-9;

const Complex kI(0.0, 1.0);

}  // namespace

std::string to_string(PolLabel label) {
  switch (label) {
    case PolLabel::H: return "H";
    case PolLabel::V: return "V";
    case PolLabel::D: return "D";
    case PolLabel::A: return "A";
    case PolLabel::R: return "R";
    case PolLabel::L: return "L";
  }
  throw std::logic_error("to_string: bad PolLabel");
}

PolLabel parse_pol_label(const std::string& s) {
  if (s == "H") return PolLabel::H;
  if (s == "V") return PolLabel::V;
  if (s == "D") return PolLabel::D;
  if (s == "A") return PolLabel::A;
  if (s == "R") return PolLabel::R;
  if (s == "L") return PolLabel::L;
  throw std::invalid_argument("parse_pol_label: unknown label '" + s + "'");
}

PolLabel orthogonal(PolLabel label) {
  switch (label) {
    case PolLabel::H: return PolLabel::V;
    case PolLabel::V: return PolLabel::H;
    case PolLabel::D: return PolLabel::A;
    case PolLabel::A: return PolLabel::D;
    case PolLabel::R: return PolLabel::L;
    case PolLabel::L: return PolLabel::R;
  }
  throw std::logic_error("orthogonal: bad PolLabel");
}

Vec2c jones_vector(PolLabel label) {
  const Scalar s = 1.0 / std::sqrt(2.0);
  switch (label) {
    case PolLabel::H: return Vec2c(1.0, 0.0);
    case PolLabel::V: return Vec2c(0.0, 1.0);
    case PolLabel::D: return Vec2c(s, s);
    case PolLabel::A: return Vec2c(s, -s);
    case PolLabel::R: return Vec2c(s, -kI * s);
    case PolLabel::L: return Vec2c(s, kI * s);
  }
  throw std::logic_error("jones_vector: bad PolLabel");
}

PolarizationProjector projector(PolLabel label) { return {label, jones_vector(label)}; }

SagnacState::SagnacState(Scalar alpha_, Scalar beta_, Scalar phi_)
    : alpha(alpha_), beta(beta_), phi(phi_) {
  if (alpha < 0 || beta < 0)
    throw std::invalid_argument("SagnacState: amplitudes must be >= 0");
  if (std::abs(alpha * alpha + beta * beta - 1.0) > kNormTol)
    throw std::invalid_argument("SagnacState: alpha^2 + beta^2 must be 1");
}

DensityMatrix DensityMatrix::from_matrix(const Mat4c& m) {
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  Mat4c rho = 0.5 * (m + m.adjoint());
  if (std::abs(rho.trace().real() - 1.0) > kTraceTol || std::abs(rho.trace().imag()) > kTraceTol)
    throw std::invalid_argument("DensityMatrix: trace must be 1");
  Eigen::SelfAdjointEigenSolver<Mat4c> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kPsdTol)
    throw std::invalid_argument("DensityMatrix: not positive semidefinite");
  return DensityMatrix(std::move(rho));
}

Vec4c phi_plus_ket() {
  Vec4c psi = Vec4c::Zero();
  psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
  return psi;
}

DensityMatrix sagnac_state(const SagnacState& s) {
  Vec4c psi = Vec4c::Zero();
  psi(0) = s.alpha;
  psi(3) = s.beta * std::exp(kI * s.phi);
  return DensityMatrix::from_matrix(psi * psi.adjoint());
}

SagnacState pump_to_state(const Vec2c& pump_jones) {
  const Scalar n = pump_jones.norm();
  if (n < kNormTol) throw std::invalid_argument("pump_to_state: zero pump vector");
  if (std::abs(n - 1.0) > 1e-9)
    throw std::invalid_argument("pump_to_state: pump vector must have unit norm");
  const Scalar alpha = std::abs(pump_jones(0));
  const Scalar beta = std::abs(pump_jones(1));
  const Scalar phi = std::arg(pump_jones(1)) - std::arg(pump_jones(0));
  return SagnacState(alpha, beta, phi);
}

Mat2c waveplate_unitary(Waveplate kind, Scalar angle_rad) {
  const Scalar delta = kind == Waveplate::Quarter ? M_PI / 2.0 : M_PI;
  const Scalar c = std::cos(angle_rad);
  const Scalar s = std::sin(angle_rad);
  Mat2c rot;
  rot << c, -s, s, c;
  Mat2c retard = Mat2c::Zero();
  retard(0, 0) = 1.0;
  retard(1, 1) = std::exp(kI * delta);
  return rot * retard * rot.transpose();
}

Scalar coincidence_probability(const DensityMatrix& rho, const PolarizationProjector& a,
                               const PolarizationProjector& b) {
  const Mat4c proj = kron(a.jones * a.jones.adjoint(), b.jones * b.jones.adjoint());
  const Scalar p = (rho.matrix() * proj).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

Scalar fidelity_to_phi_plus(const DensityMatrix& rho) {
  const Vec4c psi = phi_plus_ket();
  return (psi.adjoint() * rho.matrix() * psi)(0).real();
}

Scalar purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

DensityMatrix werner_mix(Scalar p, const DensityMatrix& rho) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("werner_mix: p must be in [0, 1]");
  const Mat4c mixed = p * rho.matrix() + (1.0 - p) * 0.25 * Mat4c::Identity();
  return DensityMatrix::from_matrix(mixed);
}

Mat4c kron(const Mat2c& a, const Mat2c& b) {
  Mat4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

}  // namespace sagnac
