// Two-qubit polarization tomography over the 16-setting {H,V,D,R} schedule:
// count simulation, linear inversion, and maximum-likelihood reconstruction
// with the Cholesky-style T parameterization rho = T'T / Tr(T'T).

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sagnac/grid.hpp"
#include "sagnac/state.hpp"
#include "sagnac/types.hpp"

namespace sagnac {

struct TomographySchedule {
  std::vector<std::pair<PolLabel, PolLabel>> settings;

  // {H, V, D, R} x {H, V, D, R} in row-major order.
  static TomographySchedule canonical();

  // 16 distinct settings drawn from {H, V, D, R} per arm, including the
  // complete {H, V}^2 group used for count normalization.
  void validate() const;
};

struct CountRecord {
  int setting_index = 0;
  std::int64_t coincidences = 0;
  // Singles are recorded for detector-efficiency calibration extensions; the
  // default likelihood does not use them.
  std::int64_t singles_a = 0;
  std::int64_t singles_b = 0;
  Scalar integration_s = 1.0;
};

struct TomographyResult {
  DensityMatrix rho;
  Scalar fidelity = 0.0;
  Scalar purity = 0.0;
  Scalar log_likelihood = 0.0;  // Poisson log-likelihood up to the count-factorial constant
  Scalar fidelity_sigma = 0.0;
  Scalar purity_sigma = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct MleOptions {
  Scalar ll_tol = 1e-9;
  Scalar step_tol = 1e-8;
  int max_iterations = 5000;
  int bootstrap_replicas = 100;
  std::uint64_t bootstrap_seed = 1;
};

// Poisson counts with mean rate*integration*p_k per setting; singles use the
// single-arm Born probabilities at the same scale.
std::vector<CountRecord> simulate_tomography_counts(const DensityMatrix& rho,
                                                    const TomographySchedule& schedule,
                                                    Scalar rate_hz, Scalar integration_s,
                                                    std::uint64_t seed);

// Direct inversion of the 16x16 design matrix on group-normalized relative
// frequencies. Hermitian and unit trace, but not clamped to be positive
// semidefinite; serves as the reconstruction oracle.
Mat4c linear_inversion(const std::vector<CountRecord>& counts,
                       const TomographySchedule& schedule);

// Maximum-likelihood reconstruction: L-BFGS on the 16 real T parameters,
// initialized from eigenvalue-clamped linear inversion; error bars by
// parametric bootstrap from the fitted means. Per-setting Poisson means are
// exposure * p_k with the exposure taken from the complete {H,V}^2 group, so
// exact count inputs are recovered exactly.
TomographyResult mle_reconstruct(const std::vector<CountRecord>& counts,
                                 const TomographySchedule& schedule,
                                 const MleOptions& options = {});

struct ChannelTomography {
  std::pair<int, int> channel_pair;
  bool ok = false;
  std::string error;
  std::optional<TomographyResult> result;
};

struct SweepSummary {
  Scalar min_fidelity = 0.0;
  Scalar mean_fidelity = 0.0;
  Scalar min_purity = 0.0;
  Scalar mean_purity = 0.0;
  int channels = 0;
  int failures = 0;
};

// Seed of channel `index` within a sweep seeded by `sweep_seed`.
std::uint64_t channel_seed(std::uint64_t sweep_seed, std::size_t index);

// Independent tomography per plan pair; per-channel failures are recorded,
// not propagated.
std::vector<ChannelTomography> run_channel_sweep(const std::vector<DensityMatrix>& states,
                                                 const ChannelPlan& plan,
                                                 const TomographySchedule& schedule,
                                                 Scalar rate_hz, Scalar integration_s,
                                                 std::uint64_t seed,
                                                 const MleOptions& options = {});

SweepSummary summarize_sweep(const std::vector<ChannelTomography>& sweep);

void write_count_records_csv(const std::string& path, const TomographySchedule& schedule,
                             const std::vector<CountRecord>& counts);
std::pair<TomographySchedule, std::vector<CountRecord>> read_count_records_csv(
    const std::string& path);

namespace detail {

using ParamVec16 = Eigen::Matrix<Scalar, 16, 1>;

// Negative Poisson log-likelihood in the T parameterization and its analytic
// gradient; exposed so the gradient can be checked against finite differences.
Scalar mle_objective(const std::vector<CountRecord>& counts, const TomographySchedule& schedule,
                     const ParamVec16& params);
ParamVec16 mle_gradient(const std::vector<CountRecord>& counts,
                        const TomographySchedule& schedule, const ParamVec16& params);

}  // namespace detail

}  // namespace sagnac
