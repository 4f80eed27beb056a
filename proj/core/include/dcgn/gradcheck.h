// Copyright 2026 The DCGN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DCGN_GRADCHECK_H_
#define DCGN_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcgn/tensor.h"

namespace dcgn {

// Raised when the checked function evaluates to NaN/Inf at a perturbed point.
class GradcheckAborted : public std::runtime_error {
 public:
  GradcheckAborted(const std::string& param, std::size_t index, double offset);
  const std::string& param() const { return param_; }
  std::size_t index() const { return index_; }

 private:
  std::string param_;
  std::size_t index_;
};

struct GradcheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  // The floor keeps entries whose true gradient is ~0 from reporting roundoff
  // noise as a large relative error.
  double denominator_floor = 1e-6;
};

struct ParamCheck {
  std::string name;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<ParamCheck> params;
  bool passed = true;
  double max_relative_error = 0.0;
};

// Compares each ParamTensor's `grad` (filled by the caller beforehand) against
// central differences of `loss`. Values are restored after every probe.
GradcheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::vector<ParamTensor*>& params,
                                  const GradcheckOptions& options = {});

}  // namespace dcgn

#endif  // DCGN_GRADCHECK_H_
