#include "satdesign/effects.hpp"

#include <algorithm>
#include <cmath>

namespace satdesign {

namespace {

Cell cell(int a, int s, int h) {
  return Cell{static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(s),
              static_cast<std::uint8_t>(h)};
}

std::string args(std::initializer_list<int> values) {
  std::string out = "(";
  bool first = true;
  for (int v : values) {
    if (!first) out += ",";
    out += std::to_string(v);
    first = false;
  }
  return out + ")";
}

Estimand contrast(std::string name, Cell plus, Cell minus) {
  return {std::move(name), {{plus, 1.0, std::nullopt}, {minus, -1.0, std::nullopt}}};
}

// A-coordinate `a`: WIE(s,s',h) = Y(a,s,h) - Y(a,s',h).
Estimand wie(const std::string& prefix, int a, int s, int s2, int h, bool reduced) {
  const std::string name =
      prefix + (reduced ? args({s, s2}) : args({s, s2, h}));
  return contrast(name, cell(a, s, h), cell(a, s2, h));
}

Estimand bie(const std::string& prefix, int a, int s, int h, int h2) {
  return contrast(prefix + args({s, h, h2}), cell(a, s, h), cell(a, s, h2));
}

Estimand de(int s, int h, bool reduced) {
  return contrast("DE" + (reduced ? args({s}) : args({s, h})), cell(1, s, h),
                  cell(0, s, h));
}

Estimand policy_de(ExposureMode mode, const std::string& label) {
  Estimand e{"DE_" + label, {}};
  const int hmax = mode == ExposureMode::Full ? 1 : 0;
  for (int s = 0; s <= 1; ++s)
    for (int h = 0; h <= hmax; ++h) {
      e.terms.push_back({cell(1, s, h), 1.0, WeightKind::DE});
      e.terms.push_back({cell(0, s, h), -1.0, WeightKind::DE});
    }
  return e;
}

Estimand policy_wie(ExposureMode mode, const std::string& label) {
  Estimand e{"WIE_" + label, {}};
  const int hmax = mode == ExposureMode::Full ? 1 : 0;
  for (int h = 0; h <= hmax; ++h) {
    e.terms.push_back({cell(0, 1, h), 1.0, WeightKind::WIE});
    e.terms.push_back({cell(0, 0, h), -1.0, WeightKind::WIE});
  }
  return e;
}

Estimand policy_bie(const std::string& label) {
  Estimand e{"BIE_" + label, {}};
  for (int s = 0; s <= 1; ++s) {
    e.terms.push_back({cell(0, s, 1), 1.0, WeightKind::BIE});
    e.terms.push_back({cell(0, s, 0), -1.0, WeightKind::BIE});
  }
  return e;
}

std::vector<int> parse_args(const std::string& name, std::size_t open) {
  std::vector<int> out;
  if (name.back() != ')') throw ValidationError("malformed estimand '" + name + "'");
  std::size_t pos = open + 1;
  while (pos < name.size() - 1) {
    const char ch = name[pos];
    if (ch == '0' || ch == '1') {
      out.push_back(ch - '0');
      ++pos;
      if (pos < name.size() - 1) {
        if (name[pos] != ',') throw ValidationError("malformed estimand '" + name + "'");
        ++pos;
      }
    } else {
      throw ValidationError("estimand '" + name + "' arguments must be 0 or 1");
    }
  }
  return out;
}

}  // namespace

bool Estimand::uses_weights() const {
  return std::any_of(terms.begin(), terms.end(),
                     [](const ContrastTerm& t) { return t.weight.has_value(); });
}

std::vector<WeightKind> Estimand::weight_kinds() const {
  std::vector<WeightKind> out;
  for (const auto& t : terms)
    if (t.weight && std::find(out.begin(), out.end(), *t.weight) == out.end())
      out.push_back(*t.weight);
  return out;
}

std::vector<Estimand> cell_mean_estimands(ExposureMode mode) {
  std::vector<Estimand> out;
  const bool reduced = mode == ExposureMode::Reduced;
  for (std::size_t c = 0; c < kNumCells; ++c) {
    const Cell cl = Cell::from_index(c);
    if (reduced && cl.h) continue;
    const std::string name =
        "Y" + (reduced ? args({cl.a, cl.s}) : args({cl.a, cl.s, cl.h}));
    out.push_back({name, {{cl, 1.0, std::nullopt}}});
  }
  return out;
}

std::vector<Estimand> conditional_estimands(ExposureMode mode) {
  std::vector<Estimand> out;
  if (mode == ExposureMode::Reduced) {
    for (int s = 0; s <= 1; ++s) out.push_back(de(s, 0, true));
    out.push_back(wie("WIE", 0, 1, 0, 0, true));
    return out;
  }
  for (int s = 0; s <= 1; ++s)
    for (int h = 0; h <= 1; ++h) out.push_back(de(s, h, false));
  for (int h = 0; h <= 1; ++h) out.push_back(wie("WIE", 0, 1, 0, h, false));
  for (int s = 0; s <= 1; ++s) out.push_back(bie("BIE", 0, s, 1, 0));
  return out;
}

std::vector<Estimand> treated_variant_estimands(ExposureMode mode) {
  std::vector<Estimand> out;
  if (mode == ExposureMode::Reduced) {
    out.push_back(wie("WIE_A1", 1, 1, 0, 0, true));
    return out;
  }
  for (int h = 0; h <= 1; ++h) out.push_back(wie("WIE_A1", 1, 1, 0, h, false));
  for (int s = 0; s <= 1; ++s) out.push_back(bie("BIE_A1", 1, s, 1, 0));
  return out;
}

std::vector<Estimand> policy_estimands(ExposureMode mode, const std::string& label) {
  std::vector<Estimand> out{policy_de(mode, label), policy_wie(mode, label)};
  if (mode == ExposureMode::Full) out.push_back(policy_bie(label));
  return out;
}

std::vector<Estimand> all_estimands(ExposureMode mode, bool with_policy) {
  std::vector<Estimand> out = cell_mean_estimands(mode);
  for (auto& e : conditional_estimands(mode)) out.push_back(std::move(e));
  for (auto& e : treated_variant_estimands(mode)) out.push_back(std::move(e));
  if (with_policy)
    for (auto& e : policy_estimands(mode, "phi")) out.push_back(std::move(e));
  return out;
}

Estimand parse_estimand(const std::string& name, ExposureMode mode) {
  const bool reduced = mode == ExposureMode::Reduced;
  const std::size_t open = name.find('(');
  if (open == std::string::npos) {
    const std::size_t us = name.find('_');
    if (us == std::string::npos || us + 1 == name.size())
      throw ValidationError("unknown estimand '" + name + "'");
    const std::string family = name.substr(0, us);
    const std::string label = name.substr(us + 1);
    if (family == "DE") return policy_de(mode, label);
    if (family == "WIE") return policy_wie(mode, label);
    if (family == "BIE" && !reduced) return policy_bie(label);
    throw ValidationError("unknown estimand '" + name + "'");
  }
  const std::string family = name.substr(0, open);
  const std::vector<int> v = parse_args(name, open);
  auto need = [&](std::size_t full, std::size_t red) {
    if (v.size() != (reduced ? red : full))
      throw ValidationError("estimand '" + name + "' has the wrong number of arguments");
  };
  if (family == "Y") {
    need(3, 2);
    const Cell c = cell(v[0], v[1], reduced ? 0 : v[2]);
    return {name, {{c, 1.0, std::nullopt}}};
  }
  if (family == "DE") {
    need(2, 1);
    return de(v[0], reduced ? 0 : v[1], reduced);
  }
  if (family == "WIE" || family == "WIE_A1") {
    need(3, 2);
    return wie(family, family == "WIE" ? 0 : 1, v[0], v[1], reduced ? 0 : v[2], reduced);
  }
  if ((family == "BIE" || family == "BIE_A1") && !reduced) {
    need(3, 3);
    return bie(family, family == "BIE" ? 0 : 1, v[0], v[1], v[2]);
  }
  throw ValidationError("unknown estimand '" + name + "'");
}

// ---------------------------------------------------------------------------

EffectEngine::EffectEngine(const Observations& obs, const InclusionTable& table,
                           EffectOptions options)
    : obs_(obs), table_(table), options_(options) {
  if (obs.size() != table.size())
    throw ValidationError("observations do not match the inclusion table");
}

void EffectEngine::set_weights(const PolicyWeights* weights) {
  if (weights) {
    for (const WeightScheme* w : {&weights->de, &weights->wie, &weights->bie}) {
      if (w->gamma.empty()) continue;
      if (w->size() != table_.size())
        throw ValidationError("weight scheme size does not match the inclusion table");
      if (w->exposure_digest != table_.meta().exposure_digest)
        throw DigestMismatchError("policy weights (" + to_string(w->kind) +
                                  ") were built for exposure digest " +
                                  w->exposure_digest + ", inclusion table has " +
                                  table_.meta().exposure_digest);
      if (w->network_digest != table_.meta().network_digest)
        throw DigestMismatchError("policy weights (" + to_string(w->kind) +
                                  ") were built for network digest " +
                                  w->network_digest + ", inclusion table has " +
                                  table_.meta().network_digest);
    }
  }
  weights_ = weights;
  cache_.clear();
}

const EffectEngine::CellResult& EffectEngine::cell_result(
    Cell cell, EstimatorKind kind, std::optional<WeightKind> weight) {
  const auto key = std::make_tuple(static_cast<int>(cell.index()), static_cast<int>(kind),
                                   weight ? static_cast<int>(*weight) : -1);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  const WeightScheme* gamma = nullptr;
  if (weight) {
    if (!weights_)
      throw ValidationError("estimand needs policy weights but none were supplied");
    gamma = &weights_->get(*weight);
    if (gamma->gamma.empty())
      throw ValidationError("policy weights (" + to_string(*weight) + ") are missing");
  }

  CellResult r;
  try {
    switch (kind) {
      case EstimatorKind::HT:
        r.mean = ht_cell_mean(obs_, table_, cell, gamma);
        break;
      case EstimatorKind::Hajek:
        r.mean = hajek_cell_mean(obs_, table_, cell, gamma);
        break;
      case EstimatorKind::CovariateAdjusted:
        r.mean = covariate_adjusted_cell_mean(obs_, table_, cell, gamma);
        break;
    }
    if (r.mean.effective_count == 0) {
      r.status = "empty-cell";
    } else {
      if (kind == EstimatorKind::CovariateAdjusted && r.mean.beta.size() > 0)
        r.variance = ca_variance(obs_, table_, cell, r.mean.beta, gamma);
      else
        r.variance = estimate_variance_cell(obs_, table_, cell, kind, gamma);
      r.ok = true;
    }
  } catch (const EmptyCellError&) {
    r.status = "empty-cell";
  } catch (const PositivityError&) {
    if (options_.positivity_hard) throw;
    r.status = "positivity-violation";
  }
  return cache_.emplace(key, std::move(r)).first->second;
}

EffectEstimate EffectEngine::evaluate(const Estimand& estimand, EstimatorKind kind) {
  EffectEstimate out;
  out.estimand = estimand.name;
  out.kind = kind;
  out.alpha = options_.alpha;
  std::vector<SignedSe> ses;
  auto flag = [&](const std::string& f) {
    if (std::find(out.flags.begin(), out.flags.end(), f) == out.flags.end())
      out.flags.push_back(f);
  };

  for (const auto& term : estimand.terms) {
    ComponentEstimate comp;
    comp.cell = term.cell;
    comp.sign = term.sign;
    comp.weight = term.weight;
    const std::size_t c = term.cell.index();

    if (term.weight) {
      if (!weights_)
        throw ValidationError("estimand '" + estimand.name + "' needs policy weights");
      const WeightScheme& w = weights_->get(*term.weight);
      bool any = false;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w.at(i, c) != 0.0) any = true;
        if (w.zero_conditioning[i][c]) flag("zero-conditioning");
      }
      if (!any) {
        comp.skipped = true;
        out.components.push_back(comp);
        continue;
      }
    }

    const CellResult& r = cell_result(term.cell, kind, term.weight);
    if (!r.ok) {
      out.estimable = false;
      out.status = r.status;
      out.components.push_back(comp);
      continue;
    }
    comp.value = r.mean.value;
    comp.variance = r.variance.value;
    comp.count = r.mean.effective_count;
    comp.corrected = r.variance.corrected;
    comp.floored = r.variance.floored;
    for (const auto& f : r.mean.flags) flag(f);
    if (r.variance.corrected) flag("zero-joint-correction");
    if (r.variance.floored) flag("variance-floored");
    if (r.variance.heuristic) flag("heuristic-variance");
    out.point += term.sign * comp.value;
    ses.push_back({term.sign, std::sqrt(comp.variance)});
    out.components.push_back(comp);
  }

  if (!out.estimable) {
    out.point = 0.0;
    return out;
  }
  if (estimand.single_cell()) {
    out.variance = out.components[0].variance;
    out.method = VarianceMethod::Omega;
  } else {
    out.variance = conservative_contrast_variance(ses).value;
    out.method = VarianceMethod::CauchySchwarz;
  }
  out.se = std::sqrt(out.variance);
  out.ci = confidence_interval(out.point, out.variance, options_.alpha);
  return out;
}

std::vector<EffectEstimate> EffectEngine::evaluate(std::span<const Estimand> estimands,
                                                   EstimatorKind kind) {
  std::vector<EffectEstimate> out;
  out.reserve(estimands.size());
  for (const auto& e : estimands) out.push_back(evaluate(e, kind));
  return out;
}

std::vector<EffectEstimate> conditional_effects(const Observations& obs,
                                                const InclusionTable& table,
                                                EstimatorKind kind,
                                                std::span<const Estimand> requested,
                                                EffectOptions options) {
  EffectEngine engine(obs, table, options);
  return engine.evaluate(requested, kind);
}

std::vector<EffectEstimate> policy_effects(const Observations& obs,
                                           const InclusionTable& table,
                                           const PolicyWeights& weights,
                                           EstimatorKind kind, const std::string& label,
                                           EffectOptions options) {
  EffectEngine engine(obs, table, options);
  engine.set_weights(&weights);
  const auto estimands = policy_estimands(table.meta().exposure_mode, label);
  return engine.evaluate(estimands, kind);
}

std::vector<EffectEstimate> wie_variants_holding_treated(const Observations& obs,
                                                         const InclusionTable& table,
                                                         EstimatorKind kind,
                                                         EffectOptions options) {
  EffectEngine engine(obs, table, options);
  const auto estimands = treated_variant_estimands(table.meta().exposure_mode);
  return engine.evaluate(estimands, kind);
}

TruthValue estimand_truth(const Estimand& estimand, std::span<const CellArray> potential,
                          const PolicyWeights* weights) {
  TruthValue out;
  const double n = static_cast<double>(potential.size());
  for (const auto& term : estimand.terms) {
    const std::size_t c = term.cell.index();
    const WeightScheme* w = nullptr;
    if (term.weight) {
      if (!weights)
        throw ValidationError("estimand '" + estimand.name + "' needs policy weights");
      w = &weights->get(*term.weight);
      if (w->size() != potential.size())
        throw ValidationError("weights do not match the potential-outcome table");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < potential.size(); ++i) {
      const double g = w ? w->at(i, c) : 1.0;
      if (w && w->zero_conditioning[i][c]) out.defined = false;
      sum += g * potential[i][c];
    }
    out.value += term.sign * sum / n;
  }
  return out;
}

}  // namespace satdesign
