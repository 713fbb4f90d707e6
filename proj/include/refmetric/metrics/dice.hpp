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

#include "refmetric/image.hpp"
#include "refmetric/metrics/score.hpp"

namespace refmetric {

/// 2|A n B| / (|A| + |B|); two empty masks score 1.
inline MetricScore dice(const Mask& a, const Mask& b)
{
    require_same_dims(a.dims(), b.dims());
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i];
        nb += b[i];
        both += a[i] & b[i];
    }
    Fingerprint fp;
    fp.set("empty", "1");
    if (na + nb == 0) return make_score(1.0, "dice", fp);
    return make_score(2.0 * static_cast<double>(both) / static_cast<double>(na + nb), "dice", fp);
}

}  // namespace refmetric
