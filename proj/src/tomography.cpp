#include "sagnac/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sagnac/rng.hpp"

namespace sagnac {

namespace {

using ParamVec = Eigen::Matrix<Scalar, 16, 1>;

constexpr Scalar kProbFloor = 1e-15;
constexpr Scalar kEigenFloor = 1e-10;

const std::array<PolLabel, 4> kTomoLabels = {PolLabel::H, PolLabel::V, PolLabel::D, PolLabel::R};

// Lower-triangle coordinates of the 12 off-diagonal parameters, (row, col)
// with row > col; params 4+2k / 4+2k+1 are the real / imaginary parts.
constexpr std::array<std::pair<int, int>, 6> kOffDiag = {
    {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

Mat4c t_from_params(const ParamVec& th) {
  Mat4c t = Mat4c::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = th(i);
  for (std::size_t k = 0; k < kOffDiag.size(); ++k) {
    const auto [r, c] = kOffDiag[k];
    t(r, c) = Complex(th(4 + 2 * k), th(5 + 2 * k));
  }
  return t;
}

ParamVec params_from_t(const Mat4c& t) {
  ParamVec th = ParamVec::Zero();
  for (int i = 0; i < 4; ++i) th(i) = t(i, i).real();
  for (std::size_t k = 0; k < kOffDiag.size(); ++k) {
    const auto [r, c] = kOffDiag[k];
    th(4 + 2 * k) = t(r, c).real();
    th(5 + 2 * k) = t(r, c).imag();
  }
  return th;
}

Mat4c projector_matrix(PolLabel a, PolLabel b) {
  const Vec2c ja = jones_vector(a);
  const Vec2c jb = jones_vector(b);
  return kron(ja * ja.adjoint(), jb * jb.adjoint());
}

std::vector<Mat4c> schedule_projectors(const TomographySchedule& schedule) {
  std::vector<Mat4c> projectors;
  projectors.reserve(schedule.settings.size());
  for (const auto& [a, b] : schedule.settings) projectors.push_back(projector_matrix(a, b));
  return projectors;
}

bool is_zz_setting(const std::pair<PolLabel, PolLabel>& s) {
  const auto in_z = [](PolLabel l) { return l == PolLabel::H || l == PolLabel::V; };
  return in_z(s.first) && in_z(s.second);
}

// Total coincidences over the complete {H,V}^2 basis group; the exposure
// shared by every setting.
Scalar normalization_total(const std::vector<CountRecord>& counts,
                           const TomographySchedule& schedule) {
  Scalar total = 0.0;
  for (const auto& rec : counts)
    if (is_zz_setting(schedule.settings[static_cast<std::size_t>(rec.setting_index)]))
      total += static_cast<Scalar>(rec.coincidences);
  return total;
}

void check_counts(const std::vector<CountRecord>& counts, const TomographySchedule& schedule) {
  schedule.validate();
  if (counts.size() != schedule.settings.size())
    throw std::invalid_argument("tomography: need one count record per setting");
  std::set<int> seen;
  std::int64_t total = 0;
  for (const auto& rec : counts) {
    if (rec.setting_index < 0 || rec.setting_index >= static_cast<int>(schedule.settings.size()))
      throw std::invalid_argument("tomography: setting index out of range");
    if (!seen.insert(rec.setting_index).second)
      throw std::invalid_argument("tomography: duplicate setting index");
    if (rec.coincidences < 0 || rec.singles_a < 0 || rec.singles_b < 0)
      throw std::invalid_argument("tomography: negative counts");
    if (!(rec.integration_s > 0))
      throw std::invalid_argument("tomography: integration time must be > 0");
    total += rec.coincidences;
  }
  if (total == 0) throw std::invalid_argument("tomography: all-zero counts");
}

struct PoissonLikelihood {
  std::vector<Mat4c> projectors;
  ParamVec counts;
  Scalar exposure = 0.0;

  struct Eval {
    Scalar neg_ll = 0.0;
    ParamVec grad = ParamVec::Zero();
  };

  Scalar value(const ParamVec& th) const {
    const Mat4c t = t_from_params(th);
    const Mat4c m = t.adjoint() * t;
    const Scalar tau = m.trace().real();
    Scalar ll = 0.0;
    for (std::size_t k = 0; k < projectors.size(); ++k) {
      const Scalar p = std::max((m * projectors[k]).trace().real() / tau, kProbFloor);
      const Scalar mu = exposure * p;
      const Scalar n = counts(static_cast<int>(k));
      ll += n > 0 ? n * std::log(mu) - mu : -mu;
    }
    return -ll;
  }

  Eval value_and_grad(const ParamVec& th) const {
    const Mat4c t = t_from_params(th);
    const Mat4c m = t.adjoint() * t;
    const Scalar tau = m.trace().real();

    Eval out;
    std::array<Scalar, 16> p{};
    std::array<Mat4c, 16> tproj;
    for (std::size_t k = 0; k < projectors.size(); ++k) {
      p[k] = std::max((m * projectors[k]).trace().real() / tau, kProbFloor);
      tproj[k] = t * projectors[k];
      const Scalar mu = exposure * p[k];
      const Scalar n = counts(static_cast<int>(k));
      out.neg_ll -= n > 0 ? n * std::log(mu) - mu : -mu;
    }

    // dL/dtheta_j = sum_k (n_k/p_k - exposure) dp_k/dtheta_j with
    // dp_k = (dTr[M Pi_k] - p_k dTau)/tau and dTr[M Pi] = 2 Re/Im (T Pi)_{rc}.
    for (int j = 0; j < 16; ++j) {
      int r = 0, c = 0;
      bool imag = false;
      if (j < 4) {
        r = c = j;
      } else {
        const auto [rr, cc] = kOffDiag[static_cast<std::size_t>((j - 4) / 2)];
        r = rr;
        c = cc;
        imag = (j - 4) % 2 == 1;
      }
      const Scalar dtau = 2.0 * (imag ? t(r, c).imag() : t(r, c).real());
      Scalar dll = 0.0;
      for (std::size_t k = 0; k < projectors.size(); ++k) {
        const Scalar dtr = 2.0 * (imag ? tproj[k](r, c).imag() : tproj[k](r, c).real());
        const Scalar dp = (dtr - p[k] * dtau) / tau;
        dll += (counts(static_cast<int>(k)) / p[k] - exposure) * dp;
      }
      out.grad(j) = -dll;
    }
    return out;
  }
};

// rho = L'L with L lower-triangular, via Cholesky of the index-reversed
// matrix.
Mat4c reverse_cholesky(const Mat4c& rho) {
  Mat4c flipped = rho;
  flipped = flipped.rowwise().reverse().eval();
  flipped = flipped.colwise().reverse().eval();
  const Eigen::LLT<Mat4c> llt(flipped);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("tomography: Cholesky failure in MLE initialization");
  Mat4c g = llt.matrixL();
  g.adjointInPlace();                       // upper triangular
  g = g.rowwise().reverse().eval();
  g = g.colwise().reverse().eval();         // lower triangular again
  return g;
}

ParamVec initial_params(const std::vector<CountRecord>& counts,
                        const TomographySchedule& schedule) {
  Mat4c rho = linear_inversion(counts, schedule);
  Eigen::SelfAdjointEigenSolver<Mat4c> es(rho);
  VecX clamped = es.eigenvalues().cwiseMax(kEigenFloor);
  clamped /= clamped.sum();
  rho = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint();
  return params_from_t(reverse_cholesky(rho));
}

struct LbfgsOutcome {
  ParamVec params = ParamVec::Zero();
  Scalar neg_ll = 0.0;
  bool converged = false;
  int iterations = 0;
};

LbfgsOutcome minimize_lbfgs(const PoissonLikelihood& objective, const ParamVec& start,
                            const MleOptions& options) {
  constexpr int kHistory = 8;
  constexpr Scalar kArmijo = 1e-4;

  LbfgsOutcome out;
  out.params = start;
  auto eval = objective.value_and_grad(out.params);
  out.neg_ll = eval.neg_ll;

  std::deque<std::pair<ParamVec, ParamVec>> history;  // (s, y)
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    out.iterations = iter + 1;

    // Two-loop recursion for the search direction.
    ParamVec q = eval.grad;
    std::vector<Scalar> alphas(history.size());
    for (std::size_t h = history.size(); h-- > 0;) {
      const auto& [s, y] = history[h];
      alphas[h] = s.dot(q) / y.dot(s);
      q -= alphas[h] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      const auto& [s, y] = history[h];
      const Scalar beta = y.dot(q) / y.dot(s);
      q += (alphas[h] - beta) * s;
    }
    ParamVec direction = -q;
    Scalar slope = direction.dot(eval.grad);
    if (!(slope < 0)) {
      direction = -eval.grad;
      slope = -eval.grad.squaredNorm();
      if (!(slope < 0)) {  // zero gradient: stationary
        out.converged = true;
        break;
      }
    }

    // Backtracking Armijo line search.
    Scalar step = 1.0;
    ParamVec next;
    Scalar next_value = 0.0;
    bool improved = false;
    while (step > 1e-20) {
      next = out.params + step * direction;
      next_value = objective.value(next);
      if (std::isfinite(next_value) && next_value <= out.neg_ll + kArmijo * step * slope) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {  // no achievable improvement at machine precision
      out.converged = true;
      break;
    }

    auto next_eval = objective.value_and_grad(next);
    const ParamVec s = next - out.params;
    const ParamVec y = next_eval.grad - eval.grad;
    if (y.dot(s) > 1e-12 * s.norm() * y.norm()) {
      history.emplace_back(s, y);
      if (history.size() > kHistory) history.pop_front();
    }

    const Scalar gain = out.neg_ll - next_value;
    const Scalar step_norm = s.norm();
    out.params = next;
    out.neg_ll = next_value;
    eval = next_eval;

    if ((gain < options.ll_tol || gain < 1e-14 * std::abs(next_value)) &&
        step_norm < options.step_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

PoissonLikelihood build_objective(const std::vector<CountRecord>& counts,
                                  const TomographySchedule& schedule,
                                  std::vector<Mat4c> projectors) {
  const Scalar n_hat = normalization_total(counts, schedule);
  if (!(n_hat > 0))
    throw std::invalid_argument("tomography: empty {H,V}^2 normalization group");
  PoissonLikelihood objective;
  objective.projectors = std::move(projectors);
  objective.exposure = n_hat;
  objective.counts = ParamVec::Zero();
  for (const auto& rec : counts)
    objective.counts(rec.setting_index) = static_cast<Scalar>(rec.coincidences);
  return objective;
}

TomographyResult reconstruct_once(const PoissonLikelihood& objective,
                                  const std::vector<CountRecord>& counts,
                                  const TomographySchedule& schedule, const MleOptions& options) {
  const ParamVec start = initial_params(counts, schedule);
  const LbfgsOutcome fit = minimize_lbfgs(objective, start, options);

  const Mat4c t = t_from_params(fit.params);
  const Mat4c m = t.adjoint() * t;
  const DensityMatrix rho = DensityMatrix::from_matrix(m / m.trace().real());

  TomographyResult result{rho,
                          fidelity_to_phi_plus(rho),
                          purity(rho),
                          -fit.neg_ll,
                          0.0,
                          0.0,
                          fit.converged,
                          fit.iterations};
  return result;
}

Scalar sample_stddev(const std::vector<Scalar>& xs) {
  if (xs.size() < 2) return 0.0;
  Scalar mean = 0.0;
  for (const Scalar x : xs) mean += x;
  mean /= static_cast<Scalar>(xs.size());
  Scalar ss = 0.0;
  for (const Scalar x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<Scalar>(xs.size() - 1));
}

}  // namespace

TomographySchedule TomographySchedule::canonical() {
  TomographySchedule schedule;
  for (const PolLabel a : kTomoLabels)
    for (const PolLabel b : kTomoLabels) schedule.settings.emplace_back(a, b);
  return schedule;
}

void TomographySchedule::validate() const {
  if (settings.size() != 16)
    throw std::invalid_argument("TomographySchedule: exactly 16 settings required");
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : settings) {
    const auto ok = [](PolLabel l) {
      return l == PolLabel::H || l == PolLabel::V || l == PolLabel::D || l == PolLabel::R;
    };
    if (!ok(a) || !ok(b))
      throw std::invalid_argument("TomographySchedule: labels must be from {H, V, D, R}");
    if (!seen.insert({static_cast<int>(a), static_cast<int>(b)}).second)
      throw std::invalid_argument("TomographySchedule: duplicate setting");
  }
}

std::vector<CountRecord> simulate_tomography_counts(const DensityMatrix& rho,
                                                    const TomographySchedule& schedule,
                                                    Scalar rate_hz, Scalar integration_s,
                                                    std::uint64_t seed) {
  schedule.validate();
  if (!(rate_hz > 0) || !(integration_s > 0))
    throw std::invalid_argument("simulate_tomography_counts: rate and integration must be > 0");

  Rng rng(seed);
  const Scalar scale = rate_hz * integration_s;
  std::vector<CountRecord> records;
  records.reserve(schedule.settings.size());
  for (std::size_t k = 0; k < schedule.settings.size(); ++k) {
    const auto& [la, lb] = schedule.settings[k];
    const PolarizationProjector pa = projector(la);
    const PolarizationProjector pb = projector(lb);
    const Scalar p = coincidence_probability(rho, pa, pb);
    const Mat4c single_a = kron(pa.jones * pa.jones.adjoint(), Mat2c::Identity());
    const Mat4c single_b = kron(Mat2c::Identity(), pb.jones * pb.jones.adjoint());
    const Scalar p_a = (rho.matrix() * single_a).trace().real();
    const Scalar p_b = (rho.matrix() * single_b).trace().real();

    CountRecord rec;
    rec.setting_index = static_cast<int>(k);
    rec.coincidences = rng.poisson(scale * p);
    rec.singles_a = rng.poisson(scale * std::clamp(p_a, 0.0, 1.0));
    rec.singles_b = rng.poisson(scale * std::clamp(p_b, 0.0, 1.0));
    rec.integration_s = integration_s;
    records.push_back(rec);
  }
  return records;
}

Mat4c linear_inversion(const std::vector<CountRecord>& counts,
                       const TomographySchedule& schedule) {
  check_counts(counts, schedule);
  const Scalar n_hat = normalization_total(counts, schedule);
  if (!(n_hat > 0))
    throw std::invalid_argument("linear_inversion: empty {H,V}^2 normalization group");

  const auto projectors = schedule_projectors(schedule);
  MatXc design(16, 16);
  VecX probs(16);
  for (const auto& rec : counts) {
    const int k = rec.setting_index;
    const Mat4c& proj = projectors[static_cast<std::size_t>(k)];
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) design(k, c * 4 + r) = proj(c, r);
    probs(k) = static_cast<Scalar>(rec.coincidences) / n_hat;
  }

  const Eigen::ColPivHouseholderQR<MatXc> qr(design);
  if (qr.rank() < 16) throw std::runtime_error("linear_inversion: singular design matrix");
  const VecXc solution = qr.solve(probs.cast<Complex>());

  Mat4c rho;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) rho(r, c) = solution(c * 4 + r);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return rho;
}

TomographyResult mle_reconstruct(const std::vector<CountRecord>& counts,
                                 const TomographySchedule& schedule, const MleOptions& options) {
  check_counts(counts, schedule);
  auto projectors = schedule_projectors(schedule);
  const PoissonLikelihood objective = build_objective(counts, schedule, projectors);
  TomographyResult result = reconstruct_once(objective, counts, schedule, options);

  if (options.bootstrap_replicas > 1) {
    std::array<Scalar, 16> p_hat{};
    for (std::size_t k = 0; k < projectors.size(); ++k)
      p_hat[k] = std::max((result.rho.matrix() * projectors[k]).trace().real(), kProbFloor);

    Rng rng(options.bootstrap_seed);
    MleOptions replica_options = options;
    replica_options.bootstrap_replicas = 0;
    std::vector<Scalar> fids, purs;
    fids.reserve(static_cast<std::size_t>(options.bootstrap_replicas));
    purs.reserve(static_cast<std::size_t>(options.bootstrap_replicas));
    for (int r = 0; r < options.bootstrap_replicas; ++r) {
      Rng replica_rng = rng.derive(static_cast<std::uint64_t>(r));
      std::vector<CountRecord> resampled = counts;
      for (auto& rec : resampled)
        rec.coincidences = replica_rng.poisson(
            objective.exposure * p_hat[static_cast<std::size_t>(rec.setting_index)]);
      try {
        const PoissonLikelihood replica_objective =
            build_objective(resampled, schedule, projectors);
        const TomographyResult replica =
            reconstruct_once(replica_objective, resampled, schedule, replica_options);
        fids.push_back(replica.fidelity);
        purs.push_back(replica.purity);
      } catch (const std::exception&) {
        // degenerate replica (for example an all-zero resample); skip
      }
    }
    result.fidelity_sigma = sample_stddev(fids);
    result.purity_sigma = sample_stddev(purs);
  }
  return result;
}

std::uint64_t channel_seed(std::uint64_t sweep_seed, std::size_t index) {
  return mix_seed(sweep_seed ^ mix_seed(index + 1));
}

std::vector<ChannelTomography> run_channel_sweep(const std::vector<DensityMatrix>& states,
                                                 const ChannelPlan& plan,
                                                 const TomographySchedule& schedule,
                                                 Scalar rate_hz, Scalar integration_s,
                                                 std::uint64_t seed, const MleOptions& options) {
  plan.validate();
  if (states.size() != plan.pairs.size())
    throw std::invalid_argument("run_channel_sweep: need one state per plan pair");

  std::vector<ChannelTomography> sweep;
  sweep.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    ChannelTomography entry;
    entry.channel_pair = plan.pairs[k];
    try {
      const std::uint64_t seed_k = channel_seed(seed, k);
      const auto counts =
          simulate_tomography_counts(states[k], schedule, rate_hz, integration_s, seed_k);
      MleOptions channel_options = options;
      channel_options.bootstrap_seed = mix_seed(seed_k);
      entry.result = mle_reconstruct(counts, schedule, channel_options);
      entry.ok = entry.result->converged;
      if (!entry.ok) entry.error = "optimizer did not converge";
    } catch (const std::exception& e) {
      entry.ok = false;
      entry.error = e.what();
    }
    sweep.push_back(std::move(entry));
  }
  return sweep;
}

SweepSummary summarize_sweep(const std::vector<ChannelTomography>& sweep) {
  SweepSummary summary;
  summary.channels = static_cast<int>(sweep.size());
  Scalar fid_sum = 0.0, pur_sum = 0.0;
  Scalar fid_min = 1.0, pur_min = 1.0;
  int ok_count = 0;
  for (const auto& entry : sweep) {
    if (!entry.result) {
      ++summary.failures;
      continue;
    }
    if (!entry.ok) ++summary.failures;
    ++ok_count;
    fid_sum += entry.result->fidelity;
    pur_sum += entry.result->purity;
    fid_min = std::min(fid_min, entry.result->fidelity);
    pur_min = std::min(pur_min, entry.result->purity);
  }
  if (ok_count > 0) {
    summary.mean_fidelity = fid_sum / ok_count;
    summary.mean_purity = pur_sum / ok_count;
    summary.min_fidelity = fid_min;
    summary.min_purity = pur_min;
  }
  return summary;
}

void write_count_records_csv(const std::string& path, const TomographySchedule& schedule,
                             const std::vector<CountRecord>& counts) {
  schedule.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_count_records_csv: cannot open " + path);
  out << "setting_a,setting_b,coincidences,singles_a,singles_b,integration_s\n";
  char buf[64];
  for (const auto& rec : counts) {
    const auto& [a, b] = schedule.settings[static_cast<std::size_t>(rec.setting_index)];
    std::snprintf(buf, sizeof(buf), "%.9g", rec.integration_s);
    out << to_string(a) << ',' << to_string(b) << ',' << rec.coincidences << ',' << rec.singles_a
        << ',' << rec.singles_b << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write_count_records_csv: write failed for " + path);
}

namespace detail {

Scalar mle_objective(const std::vector<CountRecord>& counts, const TomographySchedule& schedule,
                     const ParamVec16& params) {
  check_counts(counts, schedule);
  return build_objective(counts, schedule, schedule_projectors(schedule)).value(params);
}

ParamVec16 mle_gradient(const std::vector<CountRecord>& counts,
                        const TomographySchedule& schedule, const ParamVec16& params) {
  check_counts(counts, schedule);
  return build_objective(counts, schedule, schedule_projectors(schedule))
      .value_and_grad(params)
      .grad;
}

}  // namespace detail

std::pair<TomographySchedule, std::vector<CountRecord>> read_count_records_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_count_records_csv: cannot open " + path);
  TomographySchedule schedule;
  std::vector<CountRecord> counts;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw std::runtime_error("read_count_records_csv: malformed row at " + path + ":" +
                               std::to_string(lineno));
    CountRecord rec;
    rec.setting_index = static_cast<int>(schedule.settings.size());
    schedule.settings.emplace_back(parse_pol_label(fields[0]), parse_pol_label(fields[1]));
    rec.coincidences = std::stoll(fields[2]);
    rec.singles_a = std::stoll(fields[3]);
    rec.singles_b = std::stoll(fields[4]);
    rec.integration_s = std::stod(fields[5]);
    counts.push_back(rec);
  }
  schedule.validate();
  return {schedule, counts};
}

}  // namespace sagnac
