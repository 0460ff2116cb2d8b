#include "dtgan/core.hpp"

#include <algorithm>

namespace dtgan {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

std::string to_string(EnergyKind kind) {
  return kind == EnergyKind::L1 ? "l1" : "l2sq";
}

EnergyKind energy_kind_from_string(const std::string& name) {
  if (name == "l1") return EnergyKind::L1;
  if (name == "l2sq") return EnergyKind::L2SQ;
  throw std::invalid_argument("unknown energy kind: " + name);
}

Dictionary::Dictionary(Eigen::MatrixXd m, double bound) : entries(std::move(m)), frob_bound(bound) {
  require(entries.rows() >= 1 && entries.cols() >= 1, "dictionary needs at least one row and column");
  require(entries.allFinite(), "dictionary entries must be finite");
  require(frob_bound > 0.0, "dictionary frob_bound must be positive");
}

Transform::Transform(Eigen::MatrixXd m) : entries(std::move(m)) {
  require(entries.rows() >= 1 && entries.cols() >= 1, "transform needs at least one row and column");
  require(entries.allFinite(), "transform entries must be finite");
}

double Transform::max_row_deviation() const {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    dev = std::max(dev, std::abs(entries.row(i).norm() - 1.0));
  }
  return dev;
}

LatentSpec::LatentSpec(int k, int s) : atom_count(k), sparsity(s) {
  require(k >= 1, "latent spec needs at least one atom");
  require(s >= 1 && s <= k, "latent sparsity must satisfy 1 <= s <= k");
}

SparseLatent::SparseLatent(Eigen::VectorXd v, std::vector<int> supp)
    : values(std::move(v)), support(std::move(supp)) {
  require(values.allFinite(), "latent values must be finite");
  for (int idx : support) {
    require(idx >= 0 && idx < values.size(), "latent support index out of range");
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const bool in_support =
        std::find(support.begin(), support.end(), static_cast<int>(i)) != support.end();
    require(in_support || values[i] == 0.0, "latent values must vanish outside the support");
  }
}

GameConfig::GameConfig(EnergyKind e, double lam, double bound, double row_weight)
    : energy(e), lambda(lam), frob_bound(bound), row_penalty_weight(row_weight) {
  require(lambda >= 0.0, "lambda must be nonnegative");
  require(frob_bound > 0.0, "frob_bound must be positive");
  require(row_penalty_weight >= 0.0, "row_penalty_weight must be nonnegative");
}

GameConfig GameConfig::defaults_for(int atom_count) {
  require(atom_count >= 1, "atom_count must be positive");
  return GameConfig(EnergyKind::L1, 1.0, std::sqrt(static_cast<double>(atom_count)));
}

Eigen::VectorXd synthesize(const Dictionary& d, const SparseLatent& z) {
  require(z.values.size() == d.atom_count(), "latent length does not match dictionary atom count");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d.ambient_dim());
  for (int idx : z.support) {
    x += d.entries.col(idx) * z.values[idx];
  }
  return x;
}

double energy(EnergyKind kind, const Eigen::VectorXd& u) {
  require(u.allFinite(), "energy input must be finite");
  if (kind == EnergyKind::L1) return u.lpNorm<1>();
  return u.squaredNorm();
}

double transform_energy(const Transform& t, EnergyKind kind, const Eigen::VectorXd& x) {
  require(x.size() == t.signal_dim(), "signal length does not match transform");
  return energy(kind, t.entries * x);
}

double row_penalty(const Transform& t) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < t.entries.rows(); ++i) {
    const double dev = t.entries.row(i).squaredNorm() - 1.0;
    total += dev * dev;
  }
  return total;
}

Eigen::MatrixXd row_penalty_gradient(const Transform& t) {
  Eigen::MatrixXd g(t.entries.rows(), t.entries.cols());
  for (Eigen::Index i = 0; i < t.entries.rows(); ++i) {
    g.row(i) = 4.0 * (t.entries.row(i).squaredNorm() - 1.0) * t.entries.row(i);
  }
  return g;
}

Dictionary project_dictionary(const Dictionary& d) {
  const double norm = d.entries.norm();
  // relative slack keeps the projection exactly idempotent under round-off
  if (norm <= d.frob_bound * (1.0 + kRowTolerance)) return d;
  Dictionary out = d;
  out.entries *= d.frob_bound / norm;
  return out;
}

Transform project_transform_rows(const Transform& t) {
  Transform out = t;
  for (Eigen::Index i = 0; i < out.entries.rows(); ++i) {
    const double norm = out.entries.row(i).norm();
    if (norm < kRowTolerance) throw DegenerateRowError(static_cast<int>(i));
    if (std::abs(norm - 1.0) <= kRowTolerance) continue;
    out.entries.row(i) /= norm;
  }
  return out;
}

}  // namespace dtgan
