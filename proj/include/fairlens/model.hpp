#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/common.hpp"

namespace fairlens {

/// A trained classifier. Predictions are a pure function of the non-sensitive
/// features and the sensitive category codes, which is what lets
/// discriminative risk re-predict on perturbed sensitive inputs.
class Model {
 public:
  virtual ~Model() = default;

  virtual IntVector predict(const Matrix& x, const IntMatrix& a) const = 0;

  /// Scores in [0,1] when the learner produces them; hard = score >= 0.5.
  virtual std::optional<Vector> score(const Matrix& x,
                                      const IntMatrix& a) const {
    (void)x;
    (void)a;
    return std::nullopt;
  }

  virtual std::string id() const = 0;

  const std::vector<std::string>& flags() const { return flags_; }

 protected:
  std::vector<std::string> flags_;
};

}  // namespace fairlens
