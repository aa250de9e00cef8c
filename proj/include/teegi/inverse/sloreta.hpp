#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teegi/errors.hpp"
#include "teegi/inverse/leadfield.hpp"
#include "teegi/io/binary.hpp"
#include "teegi/io/file.hpp"
#include "teegi/pipelines/baseline.hpp"

namespace teegi::inverse {

/// Standardized minimum-norm inverse. `operatorRows` maps a raw electrode
/// vector (any reference) to unstandardized source amplitudes; the
/// average-reference projection is folded in.
struct SLORETAKernel {
  Eigen::MatrixXd operatorRows;   ///< V x M
  Eigen::VectorXd resolutionDiag;  ///< V, diagonal of the resolution matrix
  double alpha = 0;

  std::size_t electrodes() const { return static_cast<std::size_t>(operatorRows.cols()); }
  std::size_t voxels() const { return static_cast<std::size_t>(operatorRows.rows()); }
};

/// Orthonormal basis (M x (M-1)) of the vectors with zero mean.
inline Eigen::MatrixXd centeringBasis(Eigen::Index m) {
  // Householder reflection taking 1/sqrt(m) * ones to e_0; its remaining
  // columns span the complement.
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  w(0) += 1.0;
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m) - (2.0 / w.squaredNorm()) * w * w.transpose();
  return h.rightCols(m - 1);
}

inline Eigen::MatrixXd averageReferenced(const Eigen::MatrixXd& k) {
  return k.rowwise() - k.colwise().mean();
}

/// trace(K~ K~^T) / (M * 100) with K~ the average-referenced lead field.
inline double autoAlpha(const LeadField& lead) {
  const Eigen::MatrixXd kc = averageReferenced(lead.gain);
  return kc.squaredNorm() / (static_cast<double>(lead.electrodes()) * 100.0);
}

inline constexpr double kEigenFloor = 1e-10;

/// alpha = nullopt selects autoAlpha.
inline SLORETAKernel computeKernel(const LeadField& lead, std::optional<double> alpha) {
  lead.validate();
  const double a = alpha ? *alpha : autoAlpha(lead);
  if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("regularization alpha must be finite and >= 0");
  const auto m = lead.gain.rows();
  if (m < 2) throw ModelError("lead field needs at least two electrodes");

  // Work in the (M-1)-dimensional average-reference subspace, where the
  // centering matrix is the identity.
  const Eigen::MatrixXd q = centeringBasis(m);
  const Eigen::MatrixXd kr = q.transpose() * lead.gain;  // (M-1) x V
  Eigen::MatrixXd g = kr * kr.transpose();
  g.diagonal().array() += a;

  Eigen::MatrixXd gInv;
  auto floored = [&] {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const double top = es.eigenvalues().maxCoeff();
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(kEigenFloor * top);
    return Eigen::MatrixXd(es.eigenvectors() * lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose());
  };
  if (a == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > kEigenFloor * hi))
      throw NumericalRankError("lead field is rank deficient after average referencing (eigenvalue ratio " +
                               std::to_string(lo / hi) + "); use alpha > 0");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() == Eigen::Success) {
    gInv = llt.solve(Eigen::MatrixXd::Identity(m - 1, m - 1));
  } else {
    gInv = floored();
  }

  SLORETAKernel k;
  k.alpha = a;
  const Eigen::MatrixXd t0r = kr.transpose() * gInv;  // V x (M-1)
  k.operatorRows = t0r * q.transpose();
  k.resolutionDiag = (t0r.array() * kr.transpose().array()).rowwise().sum();
  for (Eigen::Index v = 0; v < k.resolutionDiag.size(); ++v)
    if (!(k.resolutionDiag(v) > 0.0) || !std::isfinite(k.resolutionDiag(v)))
      throw ModelError("resolution matrix diagonal is not positive at voxel " + std::to_string(v));
  return k;
}

/// s_v = (T x)_v^2 / R_vv, before any baseline normalization.
inline std::vector<double> standardizedPower(const SLORETAKernel& k, std::span<const double> sample) {
  if (sample.size() != k.electrodes())
    throw ContractError("source power: expected " + std::to_string(k.electrodes()) + " electrodes, got " +
                        std::to_string(sample.size()));
  const Eigen::Map<const Eigen::VectorXd> x(sample.data(), static_cast<Eigen::Index>(sample.size()));
  const Eigen::VectorXd j = k.operatorRows * x;
  std::vector<double> s(k.voxels());
  for (std::size_t v = 0; v < s.size(); ++v) {
    const auto i = static_cast<Eigen::Index>(v);
    s[v] = j(i) * j(i) / k.resolutionDiag(i);
  }
  return s;
}

/// Per-voxel baseline of standardized power.
using SourceBaseline = std::vector<pipelines::Stat>;

/// Baseline-normalized source display values in [-1, 1].
inline std::vector<double> sourcePower(const SLORETAKernel& k, std::span<const double> sample,
                                       const SourceBaseline& baseline) {
  if (baseline.size() != k.voxels()) throw ContractError("source baseline has the wrong voxel count");
  auto s = standardizedPower(k, sample);
  for (std::size_t v = 0; v < s.size(); ++v) s[v] = pipelines::displayValue(s[v], baseline[v]);
  return s;
}

// Kernel file: "teegi-kernel 1 M=<M> V=<V> alpha=<alpha>\n", then V*M float64 LE
// operator rows (row-major), then V float64 LE resolution diagonal.

inline std::string formatKernel(const SLORETAKernel& k) {
  char alpha[64];
  std::snprintf(alpha, sizeof alpha, "%.17g", k.alpha);
  std::string out = "teegi-kernel 1 M=" + std::to_string(k.electrodes()) + " V=" + std::to_string(k.voxels()) +
                    " alpha=" + alpha + "\n";
  for (Eigen::Index r = 0; r < k.operatorRows.rows(); ++r)
    for (Eigen::Index c = 0; c < k.operatorRows.cols(); ++c) io::appendF64(out, k.operatorRows(r, c));
  for (Eigen::Index v = 0; v < k.resolutionDiag.size(); ++v) io::appendF64(out, k.resolutionDiag(v));
  return out;
}

inline SLORETAKernel parseKernel(std::string_view data) {
  const auto nl = data.find('\n');
  if (nl == std::string_view::npos) throw ParseError("kernel: missing header line", 1);
  std::size_t m = 0, v = 0;
  double alpha = 0;
  const std::string header(data.substr(0, nl));
  if (std::sscanf(header.c_str(), "teegi-kernel 1 M=%zu V=%zu alpha=%lf", &m, &v, &alpha) != 3 || m == 0 ||
      v == 0)
    throw ParseError("kernel: bad header", 1);
  const auto body = data.substr(nl + 1);
  if (body.size() != 8 * (m * v + v))
    throw ParseError("kernel: expected " + std::to_string(8 * (m * v + v)) + " data bytes, got " +
                     std::to_string(body.size()));
  SLORETAKernel k;
  k.alpha = alpha;
  k.operatorRows.resize(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(m));
  k.resolutionDiag.resize(static_cast<Eigen::Index>(v));
  for (std::size_t r = 0; r < v; ++r)
    for (std::size_t c = 0; c < m; ++c)
      k.operatorRows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = io::readF64(body, 8 * (r * m + c));
  for (std::size_t r = 0; r < v; ++r)
    k.resolutionDiag(static_cast<Eigen::Index>(r)) = io::readF64(body, 8 * (m * v + r));
  return k;
}

}  // namespace teegi::inverse
