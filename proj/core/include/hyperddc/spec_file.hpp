#pragma once

// YAML model-spec and restrictions files. Labels are resolved to 0-based
// indices at load; periods in files are 1-based.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperddc/identify.hpp"
#include "hyperddc/model.hpp"

namespace hyperddc {

/// Input file problem; `line` is 1-based, 0 when unknown.
class SpecError : public std::runtime_error {
 public:
  SpecError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ModelSpec {
  std::optional<int> horizon;  // absent for stationary models
  std::vector<std::string> choice_labels;
  std::vector<std::string> state_labels;
  Transitions transitions;
  std::vector<Matrix> finite_utilities;      // J x T per non-reference choice
  std::vector<Vector> stationary_utilities;  // J per non-reference choice
  std::optional<DiscountPair> discount;

  bool is_stationary() const { return !horizon.has_value(); }
  FiniteModel finite_model() const;
  StationaryModel stationary_model(const DiscountPair& disc) const;
  int choice_index(const std::string& label) const;  // -1 when unknown
  int state_index(const std::string& label) const;
};

ModelSpec parse_model_spec(const std::string& text, const std::string& source = "<string>");
ModelSpec load_model_spec(const std::string& path);

std::vector<ExclusionRestriction> parse_restrictions(const std::string& text, const ModelSpec& spec,
                                                     const std::string& source = "<string>");
std::vector<ExclusionRestriction> load_restrictions(const std::string& path, const ModelSpec& spec);

}  // namespace hyperddc
