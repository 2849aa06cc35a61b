// Two-qubit polarization state algebra: Sagnac output states, Jones calculus
// for the analyzer waveplates, Born-rule probabilities, and state metrics.
//
// Basis ordering is {HH, HV, VH, VV} throughout. Circular convention:
// |R> = (|H> - i|V>)/sqrt(2), so a quarter-wave plate at pi/4 maps H to R.

#pragma once

#include <string>

#include "sagnac/types.hpp"

namespace sagnac {

enum class PolLabel { H, V, D, A, R, L };

std::string to_string(PolLabel label);
PolLabel parse_pol_label(const std::string& s);
PolLabel orthogonal(PolLabel label);
Vec2c jones_vector(PolLabel label);

struct PolarizationProjector {
  PolLabel label;
  Vec2c jones;
};

PolarizationProjector projector(PolLabel label);

// Pure-state parameters of the source output alpha|HH> + e^{i phi} beta|VV>.
struct SagnacState {
  Scalar alpha;
  Scalar beta;
  Scalar phi;

  SagnacState(Scalar alpha, Scalar beta, Scalar phi);  // enforces alpha^2+beta^2 = 1
};

// 4x4 Hermitian, unit-trace, positive-semidefinite operator on the
// polarization pair. Construction validates the invariants (Hermiticity to
// 1e-10, trace to 1e-10, smallest eigenvalue >= -1e-9) and stores the
// Hermitian part.
class DensityMatrix {
 public:
  static DensityMatrix from_matrix(const Mat4c& m);
  const Mat4c& matrix() const { return rho_; }

 private:
  explicit DensityMatrix(Mat4c rho) : rho_(std::move(rho)) {}
  Mat4c rho_;
};

Vec4c phi_plus_ket();

// Rank-1 density matrix of the Sagnac output state.
DensityMatrix sagnac_state(const SagnacState& s);

// Pump polarization to output-state parameters: alpha = |<H|pump>|,
// beta = |<V|pump>|, phi = arg<V|pump> - arg<H|pump>.
SagnacState pump_to_state(const Vec2c& pump_jones);

enum class Waveplate { Quarter, Half };

// Jones matrix of a retarder with its fast axis at angle_rad.
Mat2c waveplate_unitary(Waveplate kind, Scalar angle_rad);

// Tr[rho (|a><a| x |b><b|)], clamped to [0, 1].
Scalar coincidence_probability(const DensityMatrix& rho, const PolarizationProjector& a,
                               const PolarizationProjector& b);

Scalar fidelity_to_phi_plus(const DensityMatrix& rho);
Scalar purity(const DensityMatrix& rho);

// p*rho + (1-p)*I/4.
DensityMatrix werner_mix(Scalar p, const DensityMatrix& rho);

Mat4c kron(const Mat2c& a, const Mat2c& b);

}  // namespace sagnac
