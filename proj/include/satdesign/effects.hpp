#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "satdesign/core.hpp"
#include "satdesign/estimators.hpp"
#include "satdesign/exposure.hpp"
#include "satdesign/inclusion.hpp"
#include "satdesign/variance.hpp"

namespace satdesign {

// One signed cell mean inside a contrast. `weight` selects a policy weight
// family; unset means gamma = 1.
struct ContrastTerm {
  Cell cell;
  double sign = 1.0;
  std::optional<WeightKind> weight;
};

struct Estimand {
  std::string name;  // e.g. "DE(0,1)", "WIE(1,0,0)", "DE_phi", "Y(1,0,0)"
  std::vector<ContrastTerm> terms;

  bool single_cell() const { return terms.size() == 1 && !terms[0].weight; }
  bool uses_weights() const;
  std::vector<WeightKind> weight_kinds() const;
};

// Standard estimand families. Reduced mode drops every h coordinate.
std::vector<Estimand> cell_mean_estimands(ExposureMode mode);
// DE(s,h), WIE(1,0,h), BIE(s,1,0); reduced: DE(s), WIE(1,0).
std::vector<Estimand> conditional_estimands(ExposureMode mode);
// WIE_A1(1,0,h), BIE_A1(s,1,0); reduced: WIE_A1(1,0).
std::vector<Estimand> treated_variant_estimands(ExposureMode mode);
// DE_<label>, WIE_<label>, BIE_<label> (no BIE in reduced mode).
std::vector<Estimand> policy_estimands(ExposureMode mode, const std::string& label);

// Every family above, with policy estimands for label "phi".
std::vector<Estimand> all_estimands(ExposureMode mode, bool with_policy);

// Parses a name produced by the functions above.
Estimand parse_estimand(const std::string& name, ExposureMode mode);

struct ComponentEstimate {
  Cell cell;
  double sign = 1.0;
  std::optional<WeightKind> weight;
  double value = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
  bool corrected = false;
  bool floored = false;
  bool skipped = false;  // all weights zero: the term is identically 0
};

struct EffectEstimate {
  std::string estimand;
  EstimatorKind kind = EstimatorKind::HT;
  double point = 0.0;
  double variance = 0.0;
  double se = 0.0;
  Interval ci{0.0, 0.0};
  double alpha = 0.05;
  VarianceMethod method = VarianceMethod::Omega;
  bool estimable = true;
  std::string status = "ok";
  std::vector<ComponentEstimate> components;
  std::vector<std::string> flags;
};

struct EffectOptions {
  double alpha = 0.05;
  // Rethrow PositivityError instead of marking the estimand non-estimable.
  bool positivity_hard = true;
};

// Evaluates estimands against one set of observations, caching per-cell
// means and variances so shared cells are computed once.
class EffectEngine {
 public:
  EffectEngine(const Observations& obs, const InclusionTable& table,
               EffectOptions options = {});

  // Weights must share the table's exposure and network digests.
  void set_weights(const PolicyWeights* weights);

  EffectEstimate evaluate(const Estimand& estimand, EstimatorKind kind);
  std::vector<EffectEstimate> evaluate(std::span<const Estimand> estimands,
                                       EstimatorKind kind);

 private:
  struct CellResult {
    bool ok = false;
    std::string status;
    CellMeanEstimate mean;
    VarianceEstimate variance;
  };
  const CellResult& cell_result(Cell cell, EstimatorKind kind,
                                std::optional<WeightKind> weight);

  const Observations& obs_;
  const InclusionTable& table_;
  EffectOptions options_;
  const PolicyWeights* weights_ = nullptr;
  std::map<std::tuple<int, int, int>, CellResult> cache_;
};

std::vector<EffectEstimate> conditional_effects(const Observations& obs,
                                                const InclusionTable& table,
                                                EstimatorKind kind,
                                                std::span<const Estimand> requested,
                                                EffectOptions options = {});

std::vector<EffectEstimate> policy_effects(const Observations& obs,
                                           const InclusionTable& table,
                                           const PolicyWeights& weights,
                                           EstimatorKind kind, const std::string& label,
                                           EffectOptions options = {});

std::vector<EffectEstimate> wie_variants_holding_treated(const Observations& obs,
                                                         const InclusionTable& table,
                                                         EstimatorKind kind,
                                                         EffectOptions options = {});

// Population value of an estimand: sum_terms sign * n^-1 sum_i gamma_i Y_i(cell).
struct TruthValue {
  double value = 0.0;
  bool defined = true;  // false if a used weight had a zero conditioning event
};

TruthValue estimand_truth(const Estimand& estimand, std::span<const CellArray> potential,
                          const PolicyWeights* weights);

}  // namespace satdesign
