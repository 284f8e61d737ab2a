#pragma once

// Second variation of H as a bilinear form on perturbations, its quadratic form,
// finite-dimensional Hessians on a perturbation basis, and the stability verdict.

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stratwave/energy.hpp"

namespace stratwave {

/// How the normal derivative printed as d/dn2 on the interface is read.
enum class InterfaceNormalReading {
  n1,              // the interface normal n1 (upward), as in the first variation
  omega2_outward,  // the outward normal of the upper layer, i.e. -n1
};

const char* to_string(InterfaceNormalReading r) noexcept;

struct SecondVariationTerms {
  double interior[2] = {0, 0};     // grad.grad - d22F * omega_p * omega_bar_p, per layer
  std::array<double, 12> boundary{};  // the twelve boundary integrals in print order
  double total = 0.0;
};

/// Labels of the twelve boundary terms, in the order of SecondVariationTerms::boundary.
const std::array<const char*, 12>& second_variation_term_labels();

/// Evaluator bound to one state. The state-dependent traces and Bernoulli-map
/// derivatives are computed once; literal(a, b) evaluates the printed bilinear
/// expression with a in the barred slots, operator() its symmetric part.
class SecondVariation {
 public:
  SecondVariation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                  InterfaceNormalReading reading = InterfaceNormalReading::n1);
  ~SecondVariation();
  SecondVariation(SecondVariation&&) noexcept;

  SecondVariationTerms literal_terms(const Perturbation& a, const Perturbation& b) const;
  double literal(const Perturbation& a, const Perturbation& b) const { return literal_terms(a, b).total; }
  double operator()(const Perturbation& a, const Perturbation& b) const;

  /// Nodal d22F_i(y, Lap Psi_i) of both layers.
  const Field& d22F(int layer) const;

  struct Prepared;
  std::shared_ptr<const Prepared> prepare(const Perturbation& p) const;
  double literal(const Prepared& a, const Prepared& b, SecondVariationTerms* terms = nullptr) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

double second_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                        const Perturbation& a, const Perturbation& b,
                        InterfaceNormalReading reading = InterfaceNormalReading::n1);

/// second_variation(p, p).
double quadratic_form(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                      const Perturbation& p, InterfaceNormalReading reading = InterfaceNormalReading::n1);

/// Four-corner difference [H(+a+b) - H(+a-b) - H(-a+b) + H(-a-b)] / (4 eps^2).
double fd_second_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                           const Perturbation& a, const Perturbation& b, double eps);

struct HessianMatrix {
  std::vector<Perturbation> basis;
  std::vector<std::string> labels;
  Eigen::MatrixXd entries;       // symmetrised
  double asymmetry = 0.0;        // max |L - L^T| / max |L| of the literal matrix
  double gram_condition = 0.0;
  std::string state_hash;
  int nx = 0, ns1 = 0, ns2 = 0;
};

/// Gram matrix in the perturbation_norm inner product.
Eigen::MatrixXd gram_matrix(const FlowState& state, const std::vector<Perturbation>& basis);

/// Throws ErrorCode::solver when the basis Gram matrix has condition > 1e12.
HessianMatrix assemble_hessian(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                               std::vector<Perturbation> basis, std::vector<std::string> labels = {},
                               InterfaceNormalReading reading = InterfaceNormalReading::n1, int threads = 1);

struct SpectrumEdge {
  double lambda_min = 0.0;
  Eigen::VectorXd vector;
  Eigen::VectorXd eigenvalues;  // ascending
  double residual = 0.0;        // ||M v - lambda v||
  double matrix_norm = 0.0;     // max |eigenvalue|
};

constexpr int kMaxDenseDimension = 2000;

/// Dense symmetric eigensolve. Throws ErrorCode::solver above kMaxDenseDimension.
SpectrumEdge spectrum_edge(const HessianMatrix& matrix);

struct BasisOptions {
  int fourier_modes = 2;   // x-functions 1, cos mx, sin mx for m = 1..K
  int vertical_count = 4;  // Legendre P_k(2 sigma - 1), k = 1..count (k = 2..count+1 for m = 0)
  bool restrict_surfaces = true;
  int basis_size = 0;      // 0 keeps every element, otherwise the first basis_size
};

/// Fourier x Legendre basis of both layers, projected onto the admissible space, plus
/// cos/sin surface modes of eta and eta_tilde when surfaces are not restricted.
std::vector<Perturbation> stability_basis(const FlowState& state, const BasisOptions& options,
                                          std::vector<std::string>* labels = nullptr);

enum class Verdict { stable, indefinite, inconclusive };
const char* to_string(Verdict v) noexcept;

struct StabilityOptions {
  BasisOptions basis;
  double tol_psd = 1e-8;
  double tol_res = 1e-2;
  InterfaceNormalReading reading = InterfaceNormalReading::n1;
  int threads = 1;
};

struct StabilityVerdict {
  Verdict verdict = Verdict::inconclusive;
  double lambda_min = 0.0;
  double matrix_norm = 0.0;
  double residual_max = 0.0;
  double asymmetry = 0.0;
  std::optional<Perturbation> witness;
  Eigen::VectorXd witness_coefficients;
  double witness_value = 0.0;  // quadratic_form(witness)
  Eigen::VectorXd eigenvalues;
  std::vector<std::string> labels;
  bool surfaces_unperturbed = false;
  bool d22F_negative = false;
  std::string reason;
};

/// matrix_out receives the assembled Hessian when the residual gate passes.
StabilityVerdict stability_verdict(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                                   const StabilityOptions& options, HessianMatrix* matrix_out = nullptr);

}  // namespace stratwave
