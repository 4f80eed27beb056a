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

#include "dcgn/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "dcgn/errors.h"

namespace dcgn {

GradcheckAborted::GradcheckAborted(const std::string& param, std::size_t index, double offset)
    : std::runtime_error("gradcheck aborted: non-finite loss at " + param + "[" +
                         std::to_string(index) + "] offset " + std::to_string(offset)),
      param_(param),
      index_(index) {}

GradcheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::vector<ParamTensor*>& params,
                                  const GradcheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw ParameterError("gradcheck: epsilon must be > 0");
  GradcheckReport report;
  for (ParamTensor* p : params) {
    if (!p->grad.same_shape(p->value)) {
      throw DimensionError("gradcheck: grad shape " + p->grad.shape_string() + " != value shape " +
                           p->value.shape_string() + " for " + p->name);
    }
    ParamCheck check;
    check.name = p->name;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      auto probe = [&](double offset) {
        p->value[i] = original + offset;
        const double f = loss();
        p->value[i] = original;
        if (!std::isfinite(f)) throw GradcheckAborted(p->name, i, offset);
        return f;
      };
      const double plus = probe(options.epsilon);
      const double minus = probe(-options.epsilon);
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
      const double rel_err = abs_err / denom;
      check.max_absolute_error = std::max(check.max_absolute_error, abs_err);
      if (rel_err > check.max_relative_error) {
        check.max_relative_error = rel_err;
        check.worst_index = i;
      }
    }
    check.passed = check.max_relative_error <= options.tolerance;
    report.passed = report.passed && check.passed;
    report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace dcgn
