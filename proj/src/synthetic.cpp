/*
 * Copyright 2026 The Pathwise Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pathwise/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pathwise/error.hpp"
#include "pathwise/rng.hpp"

namespace pathwise {
namespace {

constexpr int kMaxRejections = 100000;

// Per-year mean/sd on the raw scale; values are clipped to [lo, hi] and
// rounded to `decimals`. Year-specific moments follow typical program
// cohorts where known.
struct NumericProfile {
  std::array<double, 4> mean;
  std::array<double, 4> sd;
  double lo;
  double hi;
  int decimals;
  bool zero_inflated = false;  // value is 0 below the latent 75th percentile
};

NumericProfile profile_for(const std::string& name) {
  constexpr double inf = 1e12;
  auto flat = [](double m, double s, double lo, double hi, int d) {
    return NumericProfile{{m, m, m, m}, {s, s, s, s}, lo, hi, d};
  };
  if (name == "numberotherdependents") return flat(0.3, 0.9, 0, 8, 0);
  if (name == "highschoolgpa_pct") return flat(72, 18, 0, 100, 0);
  if (name == "readeracademicscore" || name == "finalacademicscore") {
    return flat(7.0, 1.5, 0, 10, 1);
  }
  if (name == "readertotalscore" || name == "finaltotalscore") {
    return flat(70, 12, 0, 100, 0);
  }
  if (name == "gpacumulativecurrent") {
    return {{3.260, 3.264, 3.267, 3.252}, {0.536, 0.530, 0.522, 0.527},
            0.0, 4.0, 2};
  }
  if (name == "hoursattempted") {
    return {{30, 60, 90, 120}, {6, 9, 12, 15}, 0, inf, 0};
  }
  if (name == "hourscompleted") {
    return {{28, 56, 85, 114}, {7, 11, 14, 18}, 0, inf, 0};
  }
  if (name == "creditsTowardsdegree") {
    return {{33.58, 55.13, 85.08, 114.48}, {22.93, 28.03, 33.65, 39.33},
            0, 420, 0};
  }
  if (name == "totalcreditsneeded") return flat(120, 6, 60, 180, 0);
  if (name == "costofattendance") {
    return {{34391.94, 33345.29, 33886.89, 34045.06},
            {18408.63, 19678.21, 20493.87, 22172.49}, 0, 128334, 0};
  }
  if (name == "efcamount") return flat(3000, 4000, 0, inf, 0);
  if (name == "grantaid") {
    return {{11781.55, 14245.07, 15546.40, 17172.65},
            {7296.92, 12273.95, 14958.32, 18355.00}, 0, 108761, 0};
  }
  if (name == "loanamountoffered") return flat(3500, 2500, 0, inf, 0);
  if (name == "loanamountaccepted") return flat(1500, 2000, 0, inf, 0);
  if (name == "totalloandebt") {
    NumericProfile p = flat(0, 5500, 0, 60684, 0);
    p.zero_inflated = true;
    return p;
  }
  return flat(0, 1, -inf, inf, 3);
}

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

double raw_value(const NumericProfile& p, int year, double z) {
  const int y = std::clamp(year, 1, 4) - 1;
  double v;
  if (p.zero_inflated) {
    constexpr double kZeroQuantile = 0.6745;  // latent 75th percentile
    v = z <= kZeroQuantile ? 0.0 : p.sd[y] * (z - kZeroQuantile);
  } else {
    v = p.mean[y] + p.sd[y] * z;
  }
  return round_to(std::clamp(v, p.lo, p.hi), p.decimals);
}

std::vector<double> category_weights(const FeatureSpec& spec) {
  if (spec.name == "enrollment") return {0.85, 0.05, 0.10};
  if (spec.name == "collegetype") return {0.1, 0.8, 0.1};
  if (spec.name == "collegesector") return {0.6, 0.35, 0.05};
  if (spec.name == "persistrategyoy_any" ||
      spec.name == "persistrategyoy_ft2ft") {
    return {0.1, 0.9};  // No, Yes
  }
  if (spec.name == "has_children") return {0.93, 0.07};
  if (spec.name == "changed_enrollment_type") return {0.85, 0.15};
  return std::vector<double>(spec.categories.size(), 1.0);
}

std::size_t draw_category(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

bool condition_holds(const Condition& c, const FeatureSchema& schema,
                     const StudentRecord& record) {
  const auto idx = schema.index_of(c.feature);
  if (!idx) throw ValidationError("planted rule references unknown feature " + c.feature);
  const Cell& cell = record.values[*idx];
  if (is_missing(cell)) return false;
  if (const auto* v = std::get_if<double>(&cell)) {
    const double t = std::get<double>(c.value);
    switch (c.op) {
      case Comparison::kLessEqual:
        return *v <= t;
      case Comparison::kGreater:
        return *v > t;
      case Comparison::kEquals:
        return *v == t;
      case Comparison::kNotEquals:
        return *v != t;
    }
  }
  const auto& s = std::get<std::string>(cell);
  const auto& want = std::get<std::string>(c.value);
  return c.op == Comparison::kEquals ? s == want : s != want;
}

std::string_view op_tag(Comparison op) {
  switch (op) {
    case Comparison::kLessEqual:
      return "le";
    case Comparison::kGreater:
      return "gt";
    case Comparison::kEquals:
      return "eq";
    case Comparison::kNotEquals:
      return "ne";
  }
  return "le";
}

Comparison parse_op(const std::string& tag) {
  if (tag == "le" || tag == "<=") return Comparison::kLessEqual;
  if (tag == "gt" || tag == ">") return Comparison::kGreater;
  if (tag == "eq" || tag == "==") return Comparison::kEquals;
  if (tag == "ne" || tag == "!=") return Comparison::kNotEquals;
  throw ValidationError("unknown comparison '" + tag + "' in planted rule");
}

}  // namespace

bool planted_rule_fires(const std::vector<Conjunction>& rules,
                        const FeatureSchema& schema,
                        const StudentRecord& record) {
  for (const auto& conj : rules) {
    bool all = true;
    for (const auto& c : conj) {
      if (!condition_holds(c, schema, record)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

void SyntheticConfig::validate(const FeatureSchema& schema) const {
  if (!(positive_share > 0.0 && positive_share < 1.0)) {
    throw ValidationError("positive_share must lie in (0, 1)");
  }
  if (!(label_noise >= 0.0 && label_noise < 0.5)) {
    throw ValidationError("label_noise must lie in [0, 0.5)");
  }
  const double at_risk = 1.0 - positive_share;
  if (at_risk <= label_noise || positive_share <= label_noise) {
    throw ValidationError(
        "label_noise is too large to reach the requested positive_share");
  }
  if (years < 1 || years > 4) throw ValidationError("years must be in 1..4");
  if (planted_rules.empty()) {
    throw ValidationError("at least one planted rule is required");
  }
  for (const auto& conj : planted_rules) {
    if (conj.empty()) throw ValidationError("planted rule with no conditions");
    for (const auto& c : conj) {
      const auto idx = schema.index_of(c.feature);
      if (!idx) {
        throw ValidationError("planted rule references unknown feature '" +
                              c.feature + "'");
      }
      const auto& spec = schema[*idx];
      if (spec.kind == FeatureKind::kNumeric) {
        if (!std::holds_alternative<double>(c.value)) {
          throw ValidationError("numeric feature '" + c.feature +
                                "' needs a numeric threshold");
        }
      } else {
        const auto* s = std::get_if<std::string>(&c.value);
        if (s == nullptr ||
            std::find(spec.categories.begin(), spec.categories.end(), *s) ==
                spec.categories.end()) {
          throw ValidationError("categorical feature '" + c.feature +
                                "' needs one of its categories");
        }
        if (c.op != Comparison::kEquals && c.op != Comparison::kNotEquals) {
          throw ValidationError("categorical feature '" + c.feature +
                                "' supports only eq/ne");
        }
      }
    }
  }
  for (const auto& [name, rate] : missing_rate) {
    if (!schema.index_of(name)) {
      throw ValidationError("missing_rate references unknown feature '" +
                            name + "'");
    }
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw ValidationError("missing_rate for '" + name + "' must be in [0, 1)");
    }
  }
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig cfg;
  try {
    const auto n = j.at("n_cases").get<long long>();
    if (n < 0) throw ValidationError("n_cases must be non-negative");
    cfg.n_cases = static_cast<std::size_t>(n);
    cfg.positive_share = j.value("positive_share", cfg.positive_share);
    cfg.label_noise = j.value("label_noise", cfg.label_noise);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.years = j.value("years", cfg.years);
    if (j.contains("missing_rate")) {
      cfg.missing_rate = j["missing_rate"].get<std::map<std::string, double>>();
    }
    for (const auto& conj : j.at("planted_rules")) {
      Conjunction c;
      for (const auto& lit : conj) {
        Condition cond;
        cond.feature = lit.at("feature").get<std::string>();
        cond.op = parse_op(lit.at("op").get<std::string>());
        const auto& v = lit.at("value");
        if (v.is_number()) {
          cond.value = v.get<double>();
        } else {
          cond.value = v.get<std::string>();
        }
        c.push_back(std::move(cond));
      }
      cfg.planted_rules.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed synthetic config: ") +
                          ex.what());
  }
  return cfg;
}

SyntheticConfig SyntheticConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open synthetic config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError("synthetic config is not valid JSON: " +
                          std::string(ex.what()));
  }
  return from_json(j);
}

nlohmann::json SyntheticConfig::to_json() const {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& conj : planted_rules) {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& lit : conj) {
      nlohmann::json o = {{"feature", lit.feature},
                          {"op", std::string(op_tag(lit.op))}};
      std::visit([&](const auto& v) { o["value"] = v; }, lit.value);
      c.push_back(std::move(o));
    }
    rules.push_back(std::move(c));
  }
  return {{"n_cases", n_cases},           {"positive_share", positive_share},
          {"label_noise", label_noise},   {"seed", seed},
          {"years", years},               {"missing_rate", missing_rate},
          {"planted_rules", std::move(rules)}};
}

CohortPanel generate_synthetic(const SyntheticConfig& config,
                               const FeatureSchema& schema) {
  config.validate(schema);
  Rng rng(config.seed);

  std::vector<NumericProfile> profiles(schema.size());
  std::vector<std::vector<double>> weights(schema.size());
  std::vector<double> miss(schema.size(), 0.0);
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (schema[f].kind == FeatureKind::kNumeric) {
      profiles[f] = profile_for(schema[f].name);
    } else {
      weights[f] = category_weights(schema[f]);
      if (weights[f].size() != schema[f].categories.size()) {
        weights[f].assign(schema[f].categories.size(), 1.0);
      }
    }
    if (auto it = config.missing_rate.find(schema[f].name);
        it != config.missing_rate.end()) {
      miss[f] = it->second;
    }
  }

  // Pre-noise at-risk share that lands on the requested share after flips.
  const double at_risk = 1.0 - config.positive_share;
  const double e = config.label_noise;
  const double planted_at_risk = (at_risk - e) / (1.0 - 2.0 * e);

  const int width =
      std::max<int>(5, static_cast<int>(std::to_string(config.n_cases).size()));
  std::vector<StudentRecord> records;
  records.reserve(config.n_cases * static_cast<std::size_t>(config.years));

  std::vector<double> latent(schema.size());
  std::vector<std::size_t> category(schema.size());
  auto make_record = [&](const std::string& id, int year) {
    StudentRecord rec;
    rec.student_id = id;
    rec.cohort_year = year;
    rec.values.resize(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (miss[f] > 0.0 && rng.bernoulli(miss[f])) continue;
      if (schema[f].kind == FeatureKind::kNumeric) {
        rec.values[f] = raw_value(profiles[f], year, latent[f]);
      } else {
        rec.values[f] = schema[f].categories[category[f]];
      }
    }
    return rec;
  };

  for (std::size_t i = 0; i < config.n_cases; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "S%0*zu", width, i + 1);
    const std::string id = buf;
    const bool want_at_risk = rng.bernoulli(planted_at_risk);

    StudentRecord first;
    int attempts = 0;
    while (true) {
      for (std::size_t f = 0; f < schema.size(); ++f) {
        if (schema[f].kind == FeatureKind::kNumeric) {
          latent[f] = rng.normal();
        } else {
          category[f] = draw_category(rng, weights[f]);
        }
      }
      first = make_record(id, 1);
      if (planted_rule_fires(config.planted_rules, schema, first) ==
          want_at_risk) {
        break;
      }
      if (++attempts >= kMaxRejections) {
        throw ValidationError(
            "planted rules cannot produce the requested class balance");
      }
    }
    Outcome label = want_at_risk ? Outcome::kNoGrad4yr : Outcome::kGrad4yr;
    if (e > 0.0 && rng.bernoulli(e)) {
      label = want_at_risk ? Outcome::kGrad4yr : Outcome::kNoGrad4yr;
    }
    first.outcome = label;
    records.push_back(std::move(first));
    for (int y = 2; y <= config.years; ++y) {
      auto rec = make_record(id, y);
      rec.outcome = label;
      records.push_back(std::move(rec));
    }
  }
  return CohortPanel(schema, std::move(records));
}

}  // namespace pathwise
