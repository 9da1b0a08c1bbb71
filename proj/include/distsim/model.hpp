// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "distsim/common.hpp"

namespace distsim {

/// Anything that assigns a conditional probability P(y | x).  Evaluation
/// harnesses are written against this surface so every estimator can be
/// dropped into the same tasks.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;
  virtual double prob(ObjectId x, ContextId y) const = 0;
};

}  // namespace distsim
