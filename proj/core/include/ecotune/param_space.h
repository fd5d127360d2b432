// Copyright 2026 The EcoTune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ECOTUNE_PARAM_SPACE_H_
#define ECOTUNE_PARAM_SPACE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace ecotune {

enum class DomainKind { kIntegerRange, kRealRange, kCategorical };

std::string_view DomainKindName(DomainKind kind);
DomainKind ParseDomainKind(std::string_view name);

// One searchable runtime parameter. `category` and `description` are
// documentation only; nothing in the library branches on them.
struct ParamDomain {
  std::string name;
  DomainKind kind = DomainKind::kIntegerRange;
  double lo = 0;
  double hi = 0;
  std::optional<double> step;  // quantized real ranges only
  std::vector<std::string> choices;
  std::string unit;
  std::string category;
  std::string description;

  // Number of admissible values for discrete domains (integer, quantized
  // real, categorical); nullopt for continuous reals.
  std::optional<std::int64_t> Cardinality() const;
  std::string DescribeRange() const;
};

using ParamValue = std::variant<std::int64_t, double, std::string>;

std::string ParamValueText(const ParamValue& value);

class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::string space_id) : space_id_(std::move(space_id)) {}
  Configuration(std::string space_id, std::map<std::string, ParamValue> values)
      : space_id_(std::move(space_id)), values_(std::move(values)) {}

  const std::string& space_id() const { return space_id_; }
  const std::map<std::string, ParamValue>& values() const { return values_; }

  Configuration& Set(const std::string& name, ParamValue value);
  bool Has(const std::string& name) const { return values_.count(name) > 0; }
  const ParamValue& Get(const std::string& name) const;

  // Numeric view of a value. Categorical literals that look numeric (for
  // example block_size "16") are converted; other literals throw.
  double Number(const std::string& name) const;
  const std::string& Choice(const std::string& name) const;

  friend bool operator==(const Configuration& a, const Configuration& b);
  friend bool operator!=(const Configuration& a, const Configuration& b) {
    return !(a == b);
  }

 private:
  std::string space_id_;
  std::map<std::string, ParamValue> values_;
};

struct Violation {
  std::string domain;
  std::string reason;
};

struct ValidationReport {
  bool valid = true;
  std::vector<Violation> violations;

  std::string Describe() const;  // one "name: reason" line per violation
};

class ParamSpace {
 public:
  // Checks every structural invariant (bounds, steps, unique names,
  // defaults in-domain) and throws kContractViolation on the first failure.
  static ParamSpace Create(std::string space_id, std::vector<ParamDomain> domains,
                           Configuration defaults);

  const std::string& space_id() const { return space_id_; }
  const std::vector<ParamDomain>& domains() const { return domains_; }
  const Configuration& defaults() const { return defaults_; }
  std::size_t dimension() const { return domains_.size(); }

  const ParamDomain* Find(std::string_view name) const;

 private:
  ParamSpace() = default;
  std::string space_id_;
  std::vector<ParamDomain> domains_;
  Configuration defaults_;
};

constexpr double kGridTolerance = 1e-9;

inline constexpr std::string_view kVllmSpaceId = "vllm-v1";
inline constexpr std::string_view kPytorchMultimodalSpaceId = "pytorch-mm-v1";

ParamSpace BuiltinSpace(std::string_view space_id);
std::vector<std::string> BuiltinSpaceIds();
Configuration DefaultConfig(const ParamSpace& space);

ValidationReport Validate(const Configuration& config, const ParamSpace& space);

// "name=value;name=value" in domain order. Throws kContractViolation for an
// invalid configuration.
std::string CanonicalText(const Configuration& config, const ParamSpace& space);
Configuration ParseCanonicalText(std::string_view text, const ParamSpace& space);

// Rounds a grid value to 12 significant digits so that lo + k*step lands on
// the same double as the literal decimal (0.1 + 5*0.1 -> 0.6).
double SnapDecimal(double value);

// Space definition documents.
nlohmann::json SpaceToJson(const ParamSpace& space);
ParamSpace SpaceFromJson(const nlohmann::json& doc);

// Configuration value documents: {"space_id": ..., "values": {...}}.
nlohmann::json ConfigToJson(const Configuration& config, const ParamSpace& space);
nlohmann::json ConfigValuesToJson(const Configuration& config, const ParamSpace& space);
Configuration ConfigFromJson(const nlohmann::json& doc, const ParamSpace& space);

// Coerces one loosely-typed value (reply text, JSON scalar rendered as text)
// into the domain's value type. Returns nullopt when it cannot be read at all;
// out-of-domain values are returned and left for Validate.
std::optional<ParamValue> CoerceValue(std::string_view text, const ParamDomain& domain);

// Builtins plus user-registered spaces.
class SpaceRegistry {
 public:
  SpaceRegistry();
  void Register(ParamSpace space);
  const ParamSpace& Get(std::string_view space_id) const;  // kNotFound
  const ParamSpace* Find(std::string_view space_id) const;
  std::vector<std::string> Ids() const;

 private:
  std::map<std::string, std::shared_ptr<const ParamSpace>, std::less<>> spaces_;
};

}  // namespace ecotune

#endif  // ECOTUNE_PARAM_SPACE_H_
