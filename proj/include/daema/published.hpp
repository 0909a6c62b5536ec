#pragma once

// Published reference results for the seven benchmark datasets (10 seeds,
// mean and spread), used to print comparison columns next to local runs.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace daema {

struct PublishedValue {
  double mean = 0.0;
  double spread = 0.0;
};

enum class PublishedMetric { nrms, downstream };

// Dataset ids: eeg, glass, breast, ionosphere, shuttle, boston, casp.
// Methods: DAEMA, DAE, AimNet, MIDA, MissForest, Mean, Real (downstream only).
// Mechanism: "mcar" or "mnar".
std::optional<PublishedValue> published_result(std::string_view dataset, std::string_view mechanism,
                                               PublishedMetric metric, std::string_view method);

const std::vector<std::string>& published_methods();

}  // namespace daema
