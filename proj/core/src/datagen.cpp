#include "dtgan/datagen.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace dtgan {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Enumerates size-s column subsets and checks the smallest singular value.
double min_submatrix_singular_value(const Eigen::MatrixXd& d, int s) {
  const int k = static_cast<int>(d.cols());
  std::vector<int> subset(s);
  std::iota(subset.begin(), subset.end(), 0);
  double worst = std::numeric_limits<double>::infinity();
  for (;;) {
    Eigen::MatrixXd sub(d.rows(), s);
    for (int j = 0; j < s; ++j) sub.col(j) = d.col(subset[j]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
    worst = std::min(worst, svd.singularValues().minCoeff());

    int i = s - 1;
    while (i >= 0 && subset[i] == k - s + i) --i;
    if (i < 0) break;
    ++subset[i];
    for (int j = i + 1; j < s; ++j) subset[j] = subset[j - 1] + 1;
  }
  return worst;
}

}  // namespace

MixtureSpec::MixtureSpec(double sep, double cov) : separation(sep), component_cov(cov) {
  require(separation >= 0.0, "mixture separation must be nonnegative");
  require(component_cov > 0.0, "mixture component variance must be positive");
}

HeavyTailSpec::HeavyTailSpec(MixtureSpec mixture, double degrees_of_freedom, double scale)
    : base(mixture), dof(degrees_of_freedom), noise_scale(scale) {
  require(dof > 1.0, "Student-t degrees of freedom must exceed 1");
  require(noise_scale >= 0.0, "noise_scale must be nonnegative");
}

BlockMixtureSpec::BlockMixtureSpec(double scale) : noise_scale(scale) {
  require(noise_scale >= 0.0, "noise_scale must be nonnegative");
}

GroundTruth::GroundTruth(Dictionary dict, LatentSpec spec) : d0(std::move(dict)), latent(spec) {
  require(d0.atom_count() == latent.atom_count, "latent spec does not match dictionary atoms");
  for (int j = 0; j < d0.atom_count(); ++j) {
    require(std::abs(d0.entries.col(j).norm() - 1.0) <= 1e-9,
            "ground-truth dictionary columns must be unit norm");
  }
  require(min_submatrix_singular_value(d0.entries, latent.sparsity) > 1e-8,
          "a size-s column submatrix of the ground truth is rank deficient");
}

GroundTruth GroundTruth::random_well_conditioned(int n, int k, int s, double frob_bound,
                                                 RngState& rng, double min_singular) {
  require(min_singular > 1e-8, "min_singular must exceed the non-degeneracy floor");
  const LatentSpec spec(k, s);
  for (;;) {
    Eigen::MatrixXd entries(n, k);
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd col(n);
      for (int i = 0; i < n; ++i) col[i] = rng.next_normal();
      const double norm = col.norm();
      if (norm < kRowTolerance) {
        --j;
        continue;
      }
      entries.col(j) = col / norm;
    }
    // conditioning applies to the full dictionary, not just the size-s
    // submatrices the model invariant cares about
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(entries);
    if (svd.singularValues().minCoeff() >= min_singular &&
        min_submatrix_singular_value(entries, s) >= min_singular) {
      return GroundTruth(Dictionary(std::move(entries), frob_bound), spec);
    }
  }
}

SparseLatent sample_latent(const LatentSpec& spec, RngState& rng) {
  const int k = spec.atom_count;
  const int s = spec.sparsity;

  // Partial Fisher-Yates: the first s entries form a uniform size-s subset.
  std::vector<int> pool(k);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < s; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k - i)));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> support(pool.begin(), pool.begin() + s);
  std::sort(support.begin(), support.end());

  Eigen::VectorXd values = Eigen::VectorXd::Zero(k);
  for (int idx : support) values[idx] = rng.next_normal();
  return SparseLatent(std::move(values), std::move(support));
}

std::vector<Eigen::VectorXd> sample_synthesis(const GroundTruth& gt, int n_samples, RngState& rng) {
  require(n_samples >= 0, "n_samples must be nonnegative");
  std::vector<Eigen::VectorXd> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    out.push_back(synthesize(gt.d0, sample_latent(gt.latent, rng)));
  }
  return out;
}

Eigen::Vector2d mixture_mean(const MixtureSpec& spec, int component) {
  require(component >= 0 && component < spec.num_components, "component index out of range");
  static const double corners[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  const double scale = spec.separation / std::sqrt(2.0);
  return Eigen::Vector2d(scale * corners[component][0], scale * corners[component][1]);
}

std::vector<Eigen::VectorXd> sample_gmm(const MixtureSpec& spec, int n_samples, RngState& rng) {
  require(spec.dim == 2 && spec.num_components == 4, "mixture spec is fixed to 4 components in 2-D");
  require(n_samples >= 0, "n_samples must be nonnegative");
  const double sd = std::sqrt(spec.component_cov);
  std::vector<Eigen::VectorXd> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const int comp = static_cast<int>(rng.next_below(4));
    Eigen::VectorXd x = mixture_mean(spec, comp);
    x[0] += sd * rng.next_normal();
    x[1] += sd * rng.next_normal();
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Eigen::VectorXd> sample_heavy(const HeavyTailSpec& spec, int n_samples, RngState& rng) {
  require(spec.dof > 1.0, "Student-t degrees of freedom must exceed 1");
  require(n_samples >= 0, "n_samples must be nonnegative");
  const double sd = std::sqrt(spec.base.component_cov);
  std::vector<Eigen::VectorXd> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const int comp = static_cast<int>(rng.next_below(4));
    Eigen::VectorXd x = mixture_mean(spec.base, comp);
    x[0] += sd * rng.next_normal();
    x[1] += sd * rng.next_normal();
    if (spec.noise_scale != 0.0) {
      x[0] += spec.noise_scale * rng.next_student_t(spec.dof);
      x[1] += spec.noise_scale * rng.next_student_t(spec.dof);
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Eigen::VectorXd> sample_block(const BlockMixtureSpec& spec, int n_samples,
                                          RngState& rng) {
  require(spec.dim >= 1, "block mixture dimension must be >= 1");
  require(n_samples >= 0, "n_samples must be nonnegative");
  std::vector<Eigen::VectorXd> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const int axis = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.dim)));
    Eigen::VectorXd x(spec.dim);
    for (int c = 0; c < spec.dim; ++c) {
      if (c == axis) {
        x[c] = -3.0 + 6.0 * rng.next_double();
      } else {
        x[c] = spec.noise_scale * rng.next_normal();
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

void dump_samples_csv(std::ostream& out, const std::vector<Eigen::VectorXd>& samples) {
  out << std::setprecision(17);
  for (const Eigen::VectorXd& x : samples) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (i) out << ',';
      out << x[i];
    }
    out << '\n';
  }
}

Eigen::MatrixXd samples_to_matrix(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd m(samples.front().size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = samples[i];
  }
  return m;
}

}  // namespace dtgan
