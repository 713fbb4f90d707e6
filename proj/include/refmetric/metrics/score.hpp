// Copyright 2026 The refmetric Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>

#include "refmetric/fingerprint.hpp"

namespace refmetric {

/// A metric value plus everything needed to reproduce it.
struct MetricScore {
    double value = 0;
    std::string metric_id;
    std::string params_fingerprint;

    /// PSNR of identical images.
    bool is_infinite() const { return std::isinf(value) && value > 0; }
};

inline MetricScore make_score(double value, const std::string& id, Fingerprint fp)
{
    fp.set("metric", id);
    return {value, id, fp.str()};
}

}  // namespace refmetric
