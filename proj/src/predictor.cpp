#include "eigenspine/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "eigenspine/error.hpp"

namespace eigenspine {

NoisyOracle::NoisyOracle(OracleSpec spec, std::size_t seed_size, std::uint64_t seed)
    : spec_(std::move(spec)), seed_size_(std::max<std::size_t>(seed_size, 1)), seed_(seed) {
  spec_.base.validate();
  if (!(spec_.difficulty_sigma >= 0) || !(spec_.skill_decay > 0 && spec_.skill_decay <= 1) ||
      spec_.max_level < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid oracle spec");
  }
}

double NoisyOracle::difficulty(const std::string& sample_id) const {
  std::mt19937_64 rng(derive_seed(seed_, sample_id + "/difficulty"));
  return std::exp(spec_.difficulty_sigma * std::normal_distribution<double>(0.0, 1.0)(rng));
}

std::vector<VertebraInstance> NoisyOracle::predict(const PoolItem& item) const {
  if (!item.truth) {
    throw Error(ErrorCode::kInvalidArgument, "oracle needs ground truth for " + item.sample_id);
  }
  const double skill = std::pow(spec_.skill_decay, level_);
  const double d = difficulty(item.sample_id);
  PerturbSpec p = spec_.base;
  p.coord_noise_px *= skill * d;
  p.drop_rate = std::min(1.0, p.drop_rate * skill * d);
  p.spurious_rate = std::min(1.0, p.spurious_rate * skill);
  p.seed = derive_seed(seed_, item.sample_id);
  return perturb(*item.truth, p).instances;
}

void NoisyOracle::refresh(std::span<const SpineSample> labeled, int) {
  const double ratio = static_cast<double>(labeled.size()) / seed_size_;
  const int level = ratio >= 1.0 ? static_cast<int>(std::floor(std::log2(ratio))) : 0;
  level_ = std::max(level_, std::min(level, spec_.max_level));
}

NearestCoeff::NearestCoeff(int m) : m_(m) {
  if (m < 1) throw Error(ErrorCode::kInvalidM, "m must be positive");
}

std::vector<VertebraInstance> NearestCoeff::predict(const PoolItem&) const {
  if (!basis_) throw Error(ErrorCode::kNoPredictor, "NearestCoeff has not been fitted");
  return template_;
}

void NearestCoeff::refresh(std::span<const SpineSample> labeled, int) {
  std::vector<ContourVector> contours;
  std::size_t slots = 0;
  for (const auto& s : labeled) {
    for (const auto& v : s.instances) {
      if (v.contour.n_vertices() == kDefaultVertices) contours.push_back(v.contour);
    }
    slots = std::max(slots, s.instances.size());
  }
  if (contours.empty()) return;
  const ContourMatrix a = build_contour_matrix(contours);
  std::size_t m = std::min<std::size_t>({static_cast<std::size_t>(m_),
                                         static_cast<std::size_t>(a.data.rows()),
                                         static_cast<std::size_t>(a.data.cols())});
  std::optional<EigenSpineBasis> basis;
  for (; m >= 1 && !basis; --m) {
    try {
      basis = fit_basis(a, m);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankDeficient) throw;
    }
  }
  if (!basis) return;

  std::vector<Eigen::VectorXd> sums(slots, Eigen::VectorXd::Zero(basis->m()));
  std::vector<int> counts(slots, 0);
  for (const auto& s : labeled) {
    for (std::size_t k = 0; k < s.instances.size(); ++k) {
      if (s.instances[k].contour.n_vertices() != kDefaultVertices) continue;
      sums[k] += project(*basis, s.instances[k].contour).values;
      ++counts[k];
    }
  }
  std::vector<VertebraInstance> out;
  for (std::size_t k = 0; k < slots; ++k) {
    if (counts[k] == 0) continue;
    const CoeffVector mean{sums[k] / counts[k]};
    out.push_back({reconstruct(*basis, mean), static_cast<double>(counts[k]) / labeled.size(),
                   static_cast<int>(out.size())});
  }
  basis_ = std::move(basis);
  template_ = std::move(out);
}

}  // namespace eigenspine
